#include "bilin/pipeline.hpp"

#include <cmath>
#include <random>

namespace bilin {

void PipelineConfig::validate() const {
    if (L < 2) throw std::invalid_argument("PipelineConfig: L must be >= 2");
    if (experiment_count() < 1) throw std::invalid_argument("PipelineConfig: d must be >= 1");
    if (!(hankel_tol > 0.0) || !(hankel_tol < 1.0))
        throw std::invalid_argument("PipelineConfig: tol must lie in (0, 1)");
    if (!(excitation_stddev > 0.0))
        throw std::invalid_argument("PipelineConfig: excitation stddev must be > 0");
    narx.train.validate();
}

DirectReport identify_direct(const Simulator& source, const PipelineConfig& cfg,
                             const DiscreteBilinearSystem* truth) {
    cfg.validate();

    ExperimentBatch batch = generate_experiments(
        source, cfg.experiment_count(), cfg.L,
        GaussianExcitation{cfg.excitation_mean, cfg.excitation_stddev}, cfg.seed);
    MarkovRecovery recovery = recover_markov(batch);
    RealizationResult realization =
        identify_from_markov(recovery.markov, cfg.hankel_tol, cfg.order_override);

    DirectReport report{std::move(realization), recovery.diagnostics, std::move(batch),
                        std::nullopt, std::nullopt};

    if (truth) {
        MarkovSequence oracle = markov_oracle(*truth, static_cast<int>(cfg.L));
        MarkovSequence identified =
            markov_oracle(report.realization.system, static_cast<int>(cfg.L));
        report.markov_max_error = (oracle.flat - identified.flat).cwiseAbs().maxCoeff();

        Vector u = decaying_input(50);
        Vector y_true = simulate_discrete(*truth, u);
        Vector y_model = simulate_discrete(report.realization.system, u);
        report.response_max_error = (y_true - y_model).cwiseAbs().maxCoeff();
    }
    return report;
}

SequenceReport identify_from_sequence(const Dataset& dataset, const PipelineConfig& cfg) {
    cfg.validate();
    dataset.validate();

    const Eigen::Index len = dataset.u.size();
    const Eigen::Index prefix = std::min(cfg.training_prefix, len);
    const Eigen::Index lag_need =
        std::max(cfg.narx.input_lags - 1, cfg.narx.output_lags) + 2;
    if (prefix < lag_need)
        throw std::invalid_argument("identify_from_sequence: dataset shorter than the lag "
                                    "requirement (" +
                                    std::to_string(lag_need) + " samples)");

    DetrendResult norm = detrend(dataset.u.head(prefix), dataset.y.head(prefix));
    TrainingSeries series = augment_zero_response(norm.u, norm.y, cfg.narx.augment_zero);

    TrainResult trained = train_narx(series, cfg.narx.input_lags, cfg.narx.output_lags,
                                     cfg.narx.hidden_widths, cfg.narx.train);
    trained.model.trend = norm.trend;

    // The surrogate runs closed-loop from zero history, matching the
    // zero-initial-state assumption of the realization step.
    const NarxModel& net = trained.model;
    Simulator surrogate = [&net](const Vector& u) {
        return narx_simulate(net, u, NarxHistory::zero(net), NarxMode::closed_loop);
    };

    ExperimentBatch batch = generate_experiments(
        surrogate, cfg.experiment_count(), cfg.L,
        GaussianExcitation{cfg.excitation_mean, cfg.excitation_stddev}, cfg.seed);
    MarkovRecovery recovery = recover_markov(batch);
    RealizationResult realization =
        identify_from_markov(recovery.markov, cfg.hankel_tol, cfg.order_override);

    DiscreteBilinearSystem physical = denormalize_model(realization.system, norm.trend);

    Vector y_model = simulate_discrete(physical, dataset.u);
    double err = mpe(dataset.y, y_model);

    return SequenceReport{std::move(realization), std::move(physical), std::move(trained),
                          recovery.diagnostics, norm.trend, std::move(y_model), err};
}

TraceMetrics compute_metrics(const Vector& y_ref, const Vector& y_model) {
    if (y_ref.size() != y_model.size() || y_ref.size() < 1)
        throw std::invalid_argument("compute_metrics: length mismatch");
    TraceMetrics m;
    Vector e = y_ref - y_model;
    m.mpe = mpe(y_ref, y_model);
    m.max_abs_error = e.cwiseAbs().maxCoeff();
    m.rms_error = std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
    return m;
}

DiscreteBilinearSystem toy_system() {
    Matrix A(2, 2), N(2, 2);
    A << 0.9, 0.0, 0.0, 0.8;
    N << 0.1, 0.2, 0.3, 0.4;
    Vector B(2);
    B << 1.0, 0.0;
    RowVector C(2);
    C << 1.0, 1.0;
    return DiscreteBilinearSystem(A, N, B, C);
}

DiscreteBilinearSystem random_stable_system(Eigen::Index n, std::uint64_t seed,
                                            double spectral_radius, double coupling_norm) {
    if (n < 1) throw std::invalid_argument("random_stable_system: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randn = [&](Eigen::Index r, Eigen::Index c) {
        Matrix M(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) M(i, j) = gauss(rng);
        return M;
    };

    Matrix A = randn(n, n);
    double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) A *= spectral_radius / rho;

    Matrix N = randn(n, n);
    double nn = N.operatorNorm();
    if (nn > 0.0) N *= coupling_norm / nn;

    Vector B = randn(n, 1);
    B /= B.norm();
    RowVector C = randn(1, n);
    C /= C.norm();

    return DiscreteBilinearSystem(std::move(A), std::move(N), std::move(B), std::move(C));
}

Vector decaying_input(Eigen::Index K) {
    Vector u(K);
    for (Eigen::Index k = 0; k < K; ++k) u(k) = 1.0 / static_cast<double>(k + 1);
    return u;
}

}  // namespace bilin
