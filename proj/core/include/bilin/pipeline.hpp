#pragma once

// End-to-end identification pipelines and the knobs that drive them:
// direct identification from a simulatable system, and single-sequence
// identification through the NARX surrogate.

#include <cstdint>
#include <optional>

#include "bilin/hankel.hpp"
#include "bilin/io.hpp"
#include "bilin/markov.hpp"
#include "bilin/narx.hpp"

namespace bilin {

struct NarxSettings {
    int input_lags = 20;
    int output_lags = 20;
    std::vector<int> hidden_widths = {16, 16};
    TrainConfig train;
    bool augment_zero = true;
};

struct PipelineConfig {
    Eigen::Index L = 10;           // experiment length
    Eigen::Index d = 0;            // experiment count; 0 means 2^(L-1)
    double excitation_mean = 0.0;
    double excitation_stddev = 1.0;
    double hankel_tol = kDefaultHankelTol;
    Eigen::Index order_override = -1;  // >= 1 forces the realization order
    NarxSettings narx;
    std::uint64_t seed = 0;
    Eigen::Index training_prefix = 1000;

    Eigen::Index experiment_count() const { return d > 0 ? d : default_experiment_count(L); }
    void validate() const;
};

struct DirectReport {
    RealizationResult realization;
    RecoveryDiagnostics diagnostics;
    ExperimentBatch batch;
    // Present when the true system is known.
    std::optional<double> markov_max_error;    // vs the oracle at depth L
    std::optional<double> response_max_error;  // decaying-input response, 50 steps
};

struct SequenceReport {
    RealizationResult realization;     // identified on normalized data
    DiscreteBilinearSystem physical;   // affine model in physical units
    TrainResult narx;
    RecoveryDiagnostics diagnostics;
    TrendStats trend;
    Vector y_model;   // physical-model output over the full dataset input
    double mpe_full = 0.0;
};

// generate_experiments -> recover_markov -> identify_from_markov.
DirectReport identify_direct(const Simulator& source, const PipelineConfig& cfg,
                             const DiscreteBilinearSystem* truth = nullptr);

// detrend -> zero-response augmentation -> NARX training on the prefix ->
// surrogate experiments -> realization -> de-normalization -> MPE report.
SequenceReport identify_from_sequence(const Dataset& dataset, const PipelineConfig& cfg);

struct TraceMetrics {
    double mpe = 0.0;
    double max_abs_error = 0.0;
    double rms_error = 0.0;
};
TraceMetrics compute_metrics(const Vector& y_ref, const Vector& y_model);

// The order-2 reference system used throughout the tests and as the CLI's
// built-in synthetic source.
DiscreteBilinearSystem toy_system();

// Seeded random SISO bilinear system with prescribed spectral radius of A
// and spectral norm of N.
DiscreteBilinearSystem random_stable_system(Eigen::Index n, std::uint64_t seed,
                                            double spectral_radius = 0.7,
                                            double coupling_norm = 0.3);

// u_k = 1/(k+1), k = 0..K-1.
Vector decaying_input(Eigen::Index K);

}  // namespace bilin
