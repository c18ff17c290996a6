// bilin — bilinear system identification from i/o data.
//
// Subcommands: ingest-check, identify-direct, identify-sequence, simulate,
// compare, markov, hankel. A config file (--config) may preload any flag;
// explicit flags win.

#include <CLI11.hpp>

#include <bilin/bilin.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace {

using namespace bilin;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// ---------------------------------------------------------------- sources

struct SourceOptions {
    std::string model_path;
    bool toy = false;
    Eigen::Index random_n = 0;
    std::uint64_t random_seed = 0;

    void attach(CLI::App* cmd) {
        auto* m = cmd->add_option("--model", model_path, "Model file to identify against");
        auto* t = cmd->add_flag("--toy", toy, "Use the built-in order-2 reference system");
        auto* r = cmd->add_option("--random-order", random_n,
                                  "Use a seeded random stable system of this order");
        cmd->add_option("--system-seed", random_seed, "Seed for --random-order");
        m->excludes(t);
        m->excludes(r);
        t->excludes(r);
    }

    DiscreteBilinearSystem resolve() const {
        if (toy) return toy_system();
        if (random_n > 0) return random_stable_system(random_n, random_seed);
        if (!model_path.empty()) {
            auto file = load_model(model_path);
            if (!std::holds_alternative<DiscreteBilinearSystem>(file.system))
                throw std::invalid_argument(
                    "identification needs a discrete model; discretize first (see simulate --dt)");
            return std::get<DiscreteBilinearSystem>(file.system);
        }
        throw std::invalid_argument("no system source given (--model, --toy or --random-order)");
    }
};

struct PipelineOptions {
    PipelineConfig cfg;

    void attach_core(CLI::App* cmd) {
        cmd->add_option("-L,--length", cfg.L, "Experiment length")->capture_default_str();
        cmd->add_option("-d,--count", cfg.d, "Experiment count (0 = 2^(L-1))")
            ->capture_default_str();
        cmd->add_option("--mean", cfg.excitation_mean, "Excitation mean")->capture_default_str();
        cmd->add_option("--stddev", cfg.excitation_stddev, "Excitation standard deviation")
            ->capture_default_str();
        cmd->add_option("--tol", cfg.hankel_tol, "Relative singular-value threshold")
            ->capture_default_str();
        cmd->add_option("-r,--order", cfg.order_override,
                        "Force the realization order (-1 = from the spectrum)")
            ->capture_default_str();
        cmd->add_option("--seed", cfg.seed, "Excitation seed")->capture_default_str();
    }

    void attach_narx(CLI::App* cmd) {
        cmd->add_option("--prefix", cfg.training_prefix, "Training prefix length")
            ->capture_default_str();
        cmd->add_option("--input-lags", cfg.narx.input_lags, "NARX input taps")
            ->capture_default_str();
        cmd->add_option("--output-lags", cfg.narx.output_lags, "NARX output taps")
            ->capture_default_str();
        cmd->add_option("--hidden", cfg.narx.hidden_widths, "Hidden layer widths")
            ->capture_default_str();
        cmd->add_flag("--no-augment-zero", [this](std::int64_t) { cfg.narx.augment_zero = false; },
                      "Skip the zero-response augmentation");
        auto& t = cfg.narx.train;
        cmd->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--batch-size", t.batch_size, "Minibatch size")->capture_default_str();
        cmd->add_option("--learning-rate", t.learning_rate, "Initial learning rate")
            ->capture_default_str();
        cmd->add_option("--lr-decay", t.lr_decay, "Per-epoch learning-rate factor")
            ->capture_default_str();
        cmd->add_option("--train-seed", t.seed, "Training seed")->capture_default_str();
        cmd->add_option("--val-fraction", t.validation_fraction, "Validation fraction")
            ->capture_default_str();
        cmd->add_option("--patience", t.patience, "Early-stopping patience (epochs)")
            ->capture_default_str();
    }
};

struct DataOptions {
    std::string path;
    std::string format = "csv";
    int u_col = 1;
    int y_col = 2;
    std::optional<double> dt;

    void attach(CLI::App* cmd, bool positional) {
        if (positional)
            cmd->add_option("path", path, "Data file")->required();
        else
            cmd->add_option("--data", path, "Data file")->required();
        cmd->add_option("--format", format, "Data format")
            ->check(CLI::IsMember({"csv", "daisy"}))
            ->capture_default_str();
        cmd->add_option("--u-col", u_col, "Input column (1-based, daisy format)")
            ->capture_default_str();
        cmd->add_option("--y-col", y_col, "Output column (1-based, daisy format)")
            ->capture_default_str();
        cmd->add_option("--dt", dt, "Sampling time in seconds");
    }

    Dataset load() const {
        auto fmt = format == "csv" ? DatasetFormat::csv : DatasetFormat::daisy_whitespace;
        return ingest(path, fmt, u_col, y_col, dt);
    }
};

// ---------------------------------------------------------------- helpers

Vector read_input_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open input file: " + path);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        try {
            values.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw data_error("non-numeric token '" + token + "' in " + path);
        }
    }
    if (values.empty()) throw data_error("input file is empty: " + path);
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void print_stats(const char* name, const Vector& v) {
    double mean = v.mean();
    double sd = std::sqrt((v.array() - mean).square().sum() /
                          static_cast<double>(std::max<Eigen::Index>(v.size() - 1, 1)));
    std::printf("  %s: mean %s  std %s  min %s  max %s\n", name, format_double(mean).c_str(),
                format_double(sd).c_str(), format_double(v.minCoeff()).c_str(),
                format_double(v.maxCoeff()).c_str());
}

void print_realization(const RealizationResult& rr, const RecoveryDiagnostics& diag) {
    std::printf("order: %lld\n", static_cast<long long>(rr.order));
    const Vector& sv = rr.singular_values;
    if (rr.order < sv.size())
        std::printf("sigma_(r+1)/sigma_1: %s\n",
                    format_double(sv(rr.order) / sv(0)).c_str());
    std::printf("recovery rank: %lld  condition: %s  residual: %s\n",
                static_cast<long long>(diag.rank), format_double(diag.condition).c_str(),
                format_double(diag.residual).c_str());
}

// ------------------------------------------------------------- subcommands

int cmd_ingest_check(const DataOptions& data) {
    Dataset ds = data.load();
    std::printf("source: %s\n", ds.source.c_str());
    std::printf("samples: %lld\n", static_cast<long long>(ds.u.size()));
    if (ds.dt) std::printf("dt: %s s\n", format_double(*ds.dt).c_str());
    print_stats("u", ds.u);
    print_stats("y", ds.y);
    return 0;
}

int cmd_identify_direct(const SourceOptions& source, const PipelineOptions& pipe,
                        const std::string& out, const std::string& spectrum_out) {
    auto sys = source.resolve();
    Simulator sim = [&sys](const Vector& u) { return simulate_discrete(sys, u); };
    auto report = identify_direct(sim, pipe.cfg, &sys);
    print_realization(report.realization, report.diagnostics);
    if (report.markov_max_error)
        std::printf("markov max error vs source: %s\n",
                    format_double(*report.markov_max_error).c_str());
    if (report.response_max_error)
        std::printf("response max error vs source (decaying input, 50 steps): %s\n",
                    format_double(*report.response_max_error).c_str());
    if (!out.empty()) save_model(report.realization.system, out);
    if (!spectrum_out.empty()) write_spectrum(spectrum_out, report.realization.singular_values);
    return 0;
}

int cmd_identify_sequence(const DataOptions& data, const PipelineOptions& pipe,
                          const std::string& out, const std::string& narx_out,
                          const std::string& spectrum_out, const std::string& trace_out) {
    Dataset ds = data.load();
    auto report = identify_from_sequence(ds, pipe.cfg);
    std::printf("narx: train mse %s  val mse %s  epochs %d\n",
                format_double(report.narx.train_mse).c_str(),
                format_double(report.narx.val_mse).c_str(), report.narx.epochs_run);
    print_realization(report.realization, report.diagnostics);
    std::printf("MPE over the full sequence: %s%%\n", format_double(report.mpe_full).c_str());
    if (!out.empty()) save_model(report.physical, out);
    if (!narx_out.empty()) save_narx(report.narx.model, narx_out);
    if (!spectrum_out.empty()) write_spectrum(spectrum_out, report.realization.singular_values);
    if (!trace_out.empty())
        write_trace(trace_out, {"u", "y_ref", "y_model"}, {ds.u, ds.y, report.y_model});
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& input_path,
                 Eigen::Index decaying, Eigen::Index gaussian_len, double mean, double stddev,
                 std::uint64_t seed, std::optional<double> dt, const std::string& out) {
    auto file = load_model(model_path);
    DiscreteBilinearSystem sys = [&] {
        if (std::holds_alternative<DiscreteBilinearSystem>(file.system))
            return std::get<DiscreteBilinearSystem>(file.system);
        if (!dt && !file.dt)
            throw std::invalid_argument("continuous model needs --dt to simulate");
        return discretize_backward_euler(std::get<ContinuousBilinearSystem>(file.system),
                                         dt ? *dt : *file.dt);
    }();

    Vector u;
    if (!input_path.empty()) {
        u = read_input_file(input_path);
    } else if (decaying > 0) {
        u = decaying_input(decaying);
    } else if (gaussian_len > 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(mean, stddev);
        u.resize(gaussian_len);
        for (Eigen::Index i = 0; i < gaussian_len; ++i) u(i) = g(rng);
    } else {
        throw std::invalid_argument("no input given (--input, --decaying or --gaussian)");
    }

    Vector y = simulate_discrete(sys, u);
    Vector t(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) t(i) = static_cast<double>(i + 1);
    if (out.empty()) throw std::invalid_argument("simulate requires --out");
    write_trace(out, {"t", "u", "y"}, {t, u, y});
    std::printf("wrote %lld samples to %s\n", static_cast<long long>(u.size()), out.c_str());
    return 0;
}

Vector trace_column(const std::string& path, const std::string& wanted) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open trace: " + path);
    std::string header;
    if (!std::getline(in, header)) throw data_error("empty trace: " + path);
    std::vector<std::string> names;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = header.find(',', start);
        names.push_back(header.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::size_t col = names.size();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == wanted) col = i;
    if (col == names.size())
        throw data_error("trace " + path + " has no '" + wanted + "' column");
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t at = 0;
        std::string cell;
        for (std::size_t i = 0; i <= col; ++i) {
            std::size_t comma = line.find(',', at);
            cell = line.substr(at, comma - at);
            at = comma == std::string::npos ? line.size() : comma + 1;
        }
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw data_error(path + ": non-numeric value at line " + std::to_string(line_no));
        }
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_compare(const std::string& reference, const std::vector<std::string>& traces,
                const std::string& out) {
    Vector y_ref = trace_column(reference, "y");
    std::vector<std::string> names = {"y_ref"};
    std::vector<Vector> columns = {y_ref};
    std::printf("%-32s %12s %16s %16s\n", "model", "MPE[%]", "max|err|", "rms");
    for (const auto& path : traces) {
        Vector y = trace_column(path, "y");
        if (y.size() != y_ref.size())
            throw std::invalid_argument("trace length mismatch: " + path);
        auto m = compute_metrics(y_ref, y);
        std::printf("%-32s %12.6f %16.9g %16.9g\n", path.c_str(), m.mpe, m.max_abs_error,
                    m.rms_error);
        names.push_back(path);
        columns.push_back(y);
    }
    if (!out.empty()) write_trace(out, names, columns);
    return 0;
}

int cmd_markov(const SourceOptions& source, const PipelineOptions& pipe, const std::string& out,
               const std::string& batch_out) {
    auto sys = source.resolve();
    Simulator sim = [&sys](const Vector& u) { return simulate_discrete(sys, u); };
    auto batch = generate_experiments(
        sim, pipe.cfg.experiment_count(), pipe.cfg.L,
        GaussianExcitation{pipe.cfg.excitation_mean, pipe.cfg.excitation_stddev}, pipe.cfg.seed);
    auto rec = recover_markov(batch);
    std::printf("depth %d, %lld parameters, rank %lld, residual %s\n", rec.markov.depth,
                static_cast<long long>(rec.markov.flat.size()),
                static_cast<long long>(rec.diagnostics.rank),
                format_double(rec.diagnostics.residual).c_str());
    if (!out.empty()) {
        std::ofstream f(out);
        for (Eigen::Index i = 0; i < rec.markov.flat.size(); ++i)
            f << format_double(rec.markov.flat(i)) << "\n";
    } else {
        for (Eigen::Index i = 0; i < rec.markov.flat.size(); ++i)
            std::printf("%s\n", format_double(rec.markov.flat(i)).c_str());
    }
    if (!batch_out.empty())
        save_batch(batch,
                   BatchMetadata{pipe.cfg.seed, "gaussian", pipe.cfg.excitation_mean,
                                 pipe.cfg.excitation_stddev},
                   batch_out);
    return 0;
}

int cmd_hankel(const SourceOptions& source, const PipelineOptions& pipe,
               const std::string& spectrum_out) {
    auto sys = source.resolve();
    Simulator sim = [&sys](const Vector& u) { return simulate_discrete(sys, u); };
    auto batch = generate_experiments(
        sim, pipe.cfg.experiment_count(), pipe.cfg.L,
        GaussianExcitation{pipe.cfg.excitation_mean, pipe.cfg.excitation_stddev}, pipe.cfg.seed);
    auto rec = recover_markov(batch);
    int p = rec.markov.depth / 2;
    auto hs = build_hankel(rec.markov, p, rec.markov.depth - p);
    Eigen::BDCSVD<Matrix> svd(hs.H);
    Vector sv = svd.singularValues();
    std::printf("H is %lld x %lld, suggested order %lld (tol %s)\n",
                static_cast<long long>(hs.H.rows()), static_cast<long long>(hs.H.cols()),
                static_cast<long long>(select_order(sv, pipe.cfg.hankel_tol)),
                format_double(pipe.cfg.hankel_tol).c_str());
    if (!spectrum_out.empty())
        write_spectrum(spectrum_out, sv);
    else
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            std::printf("%lld %s\n", static_cast<long long>(i + 1),
                        format_double(sv(i) / sv(0)).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bilinear system identification from input/output data"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from a config file");

    // ingest-check
    DataOptions check_data;
    auto* check = app.add_subcommand("ingest-check", "Parse a dataset and echo its statistics");
    check_data.attach(check, true);

    // identify-direct
    SourceOptions direct_source;
    PipelineOptions direct_pipe;
    std::string direct_out, direct_spectrum;
    auto* direct =
        app.add_subcommand("identify-direct", "Identify a simulatable system from experiments");
    direct_source.attach(direct);
    direct_pipe.attach_core(direct);
    direct->add_option("-o,--out", direct_out, "Write the identified model here");
    direct->add_option("--spectrum", direct_spectrum, "Write the singular spectrum here");

    // identify-sequence
    DataOptions seq_data;
    PipelineOptions seq_pipe;
    std::string seq_out, seq_narx_out, seq_spectrum, seq_trace;
    auto* seq = app.add_subcommand("identify-sequence",
                                   "Identify from a single measured sequence via a NARX surrogate");
    seq_data.attach(seq, false);
    seq_pipe.attach_core(seq);
    seq_pipe.attach_narx(seq);
    seq->add_option("-o,--out", seq_out, "Write the physical-units model here");
    seq->add_option("--narx-out", seq_narx_out, "Write the trained network here");
    seq->add_option("--spectrum", seq_spectrum, "Write the singular spectrum here");
    seq->add_option("--trace", seq_trace, "Write u, y_ref, y_model overlay here");

    // simulate
    std::string sim_model, sim_input, sim_out;
    Eigen::Index sim_decaying = 0, sim_gaussian = 0;
    double sim_mean = 0.0, sim_stddev = 1.0;
    std::uint64_t sim_seed = 0;
    std::optional<double> sim_dt;
    auto* sim = app.add_subcommand("simulate", "Simulate a saved model on an input");
    sim->add_option("--model", sim_model, "Model file")->required();
    sim->add_option("--input", sim_input, "Input samples, one per line");
    sim->add_option("--decaying", sim_decaying, "Generate u_k = 1/(k+1) of this length");
    sim->add_option("--gaussian", sim_gaussian, "Generate white noise of this length");
    sim->add_option("--mean", sim_mean, "Gaussian mean")->capture_default_str();
    sim->add_option("--stddev", sim_stddev, "Gaussian standard deviation")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Gaussian seed")->capture_default_str();
    sim->add_option("--dt", sim_dt, "Discretization step for continuous models");
    sim->add_option("-o,--out", sim_out, "Output trace file (t,u,y)")->required();

    // compare
    std::string cmp_reference, cmp_out;
    std::vector<std::string> cmp_traces;
    auto* cmp = app.add_subcommand("compare", "Score model traces against a reference trace");
    cmp->add_option("--reference", cmp_reference, "Reference trace (t,u,y)")->required();
    cmp->add_option("traces", cmp_traces, "Model traces to score")->required();
    cmp->add_option("-o,--out", cmp_out, "Write the overlay table here");

    // markov
    SourceOptions markov_source;
    PipelineOptions markov_pipe;
    std::string markov_out, markov_batch_out;
    auto* markov = app.add_subcommand("markov", "Recover and dump bilinear Markov parameters");
    markov_source.attach(markov);
    markov_pipe.attach_core(markov);
    markov->add_option("-o,--out", markov_out, "Write the flat parameter vector here");
    markov->add_option("--batch-out", markov_batch_out, "Write the experiment batch here");

    // hankel
    SourceOptions hankel_source;
    PipelineOptions hankel_pipe;
    std::string hankel_spectrum;
    auto* hankel = app.add_subcommand("hankel", "Dump the Hankel singular spectrum");
    hankel_source.attach(hankel);
    hankel_pipe.attach_core(hankel);
    hankel->add_option("--spectrum,-o,--out", hankel_spectrum, "Write the spectrum here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*check) return cmd_ingest_check(check_data);
        if (*direct) return cmd_identify_direct(direct_source, direct_pipe, direct_out,
                                                direct_spectrum);
        if (*seq)
            return cmd_identify_sequence(seq_data, seq_pipe, seq_out, seq_narx_out, seq_spectrum,
                                         seq_trace);
        if (*sim)
            return cmd_simulate(sim_model, sim_input, sim_decaying, sim_gaussian, sim_mean,
                                sim_stddev, sim_seed, sim_dt, sim_out);
        if (*cmp) return cmd_compare(cmp_reference, cmp_traces, cmp_out);
        if (*markov) return cmd_markov(markov_source, markov_pipe, markov_out, markov_batch_out);
        if (*hankel) return cmd_hankel(hankel_source, hankel_pipe, hankel_spectrum);
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
