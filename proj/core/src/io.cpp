#include "bilin/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bilin {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;
constexpr int kNarxVersion = 1;

json matrix_to_json(const Matrix& M) {
    // Row-major flat list.
    json arr = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) arr.push_back(M(i, j));
    return arr;
}

Matrix matrix_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols,
                        const char* field) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
        throw data_error(std::string("model file: field '") + field + "' has wrong length");
    Matrix M(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = arr[k++].get<double>();
    return M;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr, Eigen::Index size, const char* field) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != size)
        throw data_error(std::string("model file: field '") + field + "' has wrong length");
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = arr[i].get<double>();
    return v;
}

template <typename Sys>
json system_to_json(const Sys& sys, const char* time_domain) {
    json j;
    j["format"] = "bilin-model";
    j["version"] = kModelVersion;
    j["time_domain"] = time_domain;
    j["n"] = sys.n;
    j["A"] = matrix_to_json(sys.A);
    j["N"] = matrix_to_json(sys.N);
    j["B"] = vector_to_json(sys.B);
    j["C"] = vector_to_json(sys.C.transpose());
    j["D"] = sys.D;
    j["y_offset"] = sys.y_offset;
    j["x0"] = vector_to_json(sys.x0.size() ? sys.x0 : Vector(Vector::Zero(sys.n)));
    if (sys.drift)
        j["drift"] = vector_to_json(*sys.drift);
    else
        j["drift"] = nullptr;
    return j;
}

template <typename Sys>
Sys system_from_json(const json& j) {
    Eigen::Index n = j.at("n").get<Eigen::Index>();
    if (n < 1) throw data_error("model file: n must be positive");
    Sys sys(matrix_from_json(j.at("A"), n, n, "A"), matrix_from_json(j.at("N"), n, n, "N"),
            vector_from_json(j.at("B"), n, "B"),
            vector_from_json(j.at("C"), n, "C").transpose());
    sys.D = j.at("D").get<double>();
    sys.y_offset = j.at("y_offset").get<double>();
    sys.x0 = vector_from_json(j.at("x0"), n, "x0");
    if (j.contains("drift") && !j.at("drift").is_null())
        sys.drift = vector_from_json(j.at("drift"), n, "drift");
    sys.validate();
    return sys;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw data_error("cannot parse " + path + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw data_error("write failed: " + path);
}

}  // namespace

void Dataset::validate() const {
    if (u.size() != y.size()) throw data_error("dataset: u and y must have equal length");
    if (u.size() < 1) throw data_error("dataset: empty");
    if (!u.allFinite() || !y.allFinite()) throw data_error("dataset: non-finite entries");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void save_model(const DiscreteBilinearSystem& sys, const std::string& path) {
    sys.validate();
    write_text_file(path, system_to_json(sys, "discrete").dump(2) + "\n");
}

void save_model(const ContinuousBilinearSystem& sys, const std::string& path,
                std::optional<double> dt) {
    sys.validate();
    json j = system_to_json(sys, "continuous");
    if (dt) j["dt"] = *dt;
    write_text_file(path, j.dump(2) + "\n");
}

ModelFile load_model(const std::string& path) {
    json j = read_json_file(path);
    if (j.value("format", "") != "bilin-model")
        throw data_error(path + ": not a bilin-model document");
    std::string domain = j.at("time_domain").get<std::string>();
    ModelFile mf;
    if (j.contains("dt") && !j.at("dt").is_null()) mf.dt = j.at("dt").get<double>();
    if (domain == "discrete")
        mf.system = system_from_json<DiscreteBilinearSystem>(j);
    else if (domain == "continuous")
        mf.system = system_from_json<ContinuousBilinearSystem>(j);
    else
        throw data_error(path + ": unknown time_domain '" + domain + "'");
    return mf;
}

void save_narx(const NarxModel& model, const std::string& path) {
    model.validate();
    json j;
    j["format"] = "bilin-narx";
    j["version"] = kNarxVersion;
    j["input_lags"] = model.n_u;
    j["output_lags"] = model.n_y;
    j["activation"] = model.activation;
    j["trend"] = {{"u_mean", model.trend.u_mean},
                  {"u_std", model.trend.u_std},
                  {"y_mean", model.trend.y_mean},
                  {"y_std", model.trend.y_std}};
    json layers = json::array();
    for (const auto& layer : model.layers) {
        layers.push_back({{"rows", layer.W.rows()},
                          {"cols", layer.W.cols()},
                          {"W", matrix_to_json(layer.W)},
                          {"b", vector_to_json(layer.b)}});
    }
    j["layers"] = std::move(layers);
    write_text_file(path, j.dump(2) + "\n");
}

NarxModel load_narx(const std::string& path) {
    json j = read_json_file(path);
    if (j.value("format", "") != "bilin-narx")
        throw data_error(path + ": not a bilin-narx document");
    NarxModel model;
    model.n_u = j.at("input_lags").get<int>();
    model.n_y = j.at("output_lags").get<int>();
    model.activation = j.at("activation").get<std::string>();
    const json& t = j.at("trend");
    model.trend = TrendStats{t.at("u_mean").get<double>(), t.at("u_std").get<double>(),
                             t.at("y_mean").get<double>(), t.at("y_std").get<double>()};
    for (const json& lj : j.at("layers")) {
        Eigen::Index rows = lj.at("rows").get<Eigen::Index>();
        Eigen::Index cols = lj.at("cols").get<Eigen::Index>();
        model.layers.push_back(NarxModel::Layer{matrix_from_json(lj.at("W"), rows, cols, "W"),
                                                vector_from_json(lj.at("b"), rows, "b")});
    }
    model.validate();
    return model;
}

void save_batch(const ExperimentBatch& batch, const BatchMetadata& meta,
                const std::string& path) {
    batch.validate();
    std::ostringstream out;
    out << "# bilin-batch v1\n";
    out << "# d=" << batch.d() << " L=" << batch.L() << " seed=" << meta.seed
        << " excitation=" << meta.excitation << " mean=" << format_double(meta.mean)
        << " stddev=" << format_double(meta.stddev) << "\n";
    for (Eigen::Index i = 0; i < batch.d(); ++i) {
        for (Eigen::Index t = 0; t < batch.L(); ++t)
            out << (t ? " " : "") << format_double(batch.inputs(i, t));
        out << "\n";
        for (Eigen::Index t = 0; t < batch.L(); ++t)
            out << (t ? " " : "") << format_double(batch.outputs(i, t));
        out << "\n";
    }
    write_text_file(path, out.str());
}

std::pair<ExperimentBatch, BatchMetadata> load_batch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line) || line.rfind("# bilin-batch", 0) != 0)
        throw data_error(path + ": not a bilin-batch file");
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw data_error(path + ": missing batch header");

    BatchMetadata meta;
    Eigen::Index d = 0, L = 0;
    std::istringstream hdr(line.substr(2));
    std::string tok;
    while (hdr >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "d") d = std::stoll(val);
        else if (key == "L") L = std::stoll(val);
        else if (key == "seed") meta.seed = std::stoull(val);
        else if (key == "excitation") meta.excitation = val;
        else if (key == "mean") meta.mean = std::stod(val);
        else if (key == "stddev") meta.stddev = std::stod(val);
    }
    if (d < 1 || L < 1) throw data_error(path + ": invalid batch dimensions in header");

    ExperimentBatch batch;
    batch.inputs.resize(d, L);
    batch.outputs.resize(d, L);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Matrix* M : {&batch.inputs, &batch.outputs}) {
            if (!std::getline(in, line))
                throw data_error(path + ": truncated batch (experiment " + std::to_string(i) + ")");
            std::istringstream row(line);
            for (Eigen::Index t = 0; t < L; ++t)
                if (!(row >> (*M)(i, t)))
                    throw data_error(path + ": malformed row in experiment " + std::to_string(i));
        }
    }
    batch.validate();
    return {std::move(batch), meta};
}

Dataset ingest(const std::string& path, DatasetFormat format, int u_col, int y_col,
               std::optional<double> dt) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);

    std::vector<double> u, y;
    std::string line;
    std::size_t lineno = 0;

    if (format == DatasetFormat::csv) {
        if (!std::getline(in, line)) throw data_error(path + ": empty file");
        ++lineno;
        // Header: t,u,y or u,y.
        int columns = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
        bool has_t = false;
        {
            std::istringstream hdr(line);
            std::string first;
            std::getline(hdr, first, ',');
            has_t = (first == "t");
        }
        if (columns < 2 || columns > 3)
            throw data_error(path + ": expected header t,u,y or u,y");
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string cell;
            std::vector<double> vals;
            while (std::getline(row, cell, ',')) {
                try {
                    std::size_t pos = 0;
                    vals.push_back(std::stod(cell, &pos));
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw data_error(path + ": line " + std::to_string(lineno) +
                                     ": non-numeric token '" + cell + "'");
                }
            }
            if (static_cast<int>(vals.size()) != columns)
                throw data_error(path + ": line " + std::to_string(lineno) +
                                 ": wrong number of columns");
            int base = has_t ? 1 : 0;
            u.push_back(vals[base]);
            y.push_back(vals[base + 1]);
        }
    } else {
        if (u_col < 1 || y_col < 1)
            throw std::invalid_argument("ingest: column indices are 1-based");
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::istringstream row(line);
            std::vector<double> vals;
            std::string cell;
            while (row >> cell) {
                try {
                    std::size_t pos = 0;
                    vals.push_back(std::stod(cell, &pos));
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw data_error(path + ": line " + std::to_string(lineno) +
                                     ": non-numeric token '" + cell + "'");
                }
            }
            if (static_cast<int>(vals.size()) < std::max(u_col, y_col))
                throw data_error(path + ": line " + std::to_string(lineno) +
                                 ": fewer columns than requested");
            u.push_back(vals[u_col - 1]);
            y.push_back(vals[y_col - 1]);
        }
    }

    Dataset ds;
    ds.dt = dt;
    ds.source = path;
    ds.u = Eigen::Map<Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
    ds.y = Eigen::Map<Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
    ds.validate();
    return ds;
}

void write_spectrum(const std::string& path, const Vector& singular_values) {
    if (singular_values.size() < 1 || !(singular_values(0) > 0.0))
        throw std::invalid_argument("write_spectrum: empty or degenerate spectrum");
    std::ostringstream out;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
        out << (i + 1) << " " << format_double(singular_values(i) / singular_values(0)) << "\n";
    write_text_file(path, out.str());
}

void write_trace(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<Vector>& columns) {
    if (names.size() != columns.size() || columns.empty())
        throw std::invalid_argument("write_trace: names and columns must match");
    const Eigen::Index len = columns[0].size();
    for (const auto& c : columns)
        if (c.size() != len) throw std::invalid_argument("write_trace: column length mismatch");

    std::ostringstream out;
    for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
    out << "\n";
    for (Eigen::Index i = 0; i < len; ++i) {
        for (std::size_t k = 0; k < columns.size(); ++k)
            out << (k ? "," : "") << format_double(columns[k](i));
        out << "\n";
    }
    write_text_file(path, out.str());
}

}  // namespace bilin
