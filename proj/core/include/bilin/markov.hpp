#pragma once

// Recovery of the bilinear Markov parameters from i/o experiments:
// lifted-input matrices, batched excitation, and the stacked
// minimum-norm least-squares solve.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <variant>

#include "bilin/system.hpp"

namespace bilin {

// d input/output sequences of common length L, one experiment per row.
struct ExperimentBatch {
    Matrix inputs;   // d x L
    Matrix outputs;  // d x L

    Eigen::Index d() const { return inputs.rows(); }
    Eigen::Index L() const { return inputs.cols(); }

    void validate() const;
};

// Block lower-triangular regressor of one experiment: row t holds
// [u_1(t-1), u_2(t-2), ..., u_t(0), 0...], block u_j in columns
// 2^(j-1)-1 .. 2^j-2 (0-based). Shape L x (2^L - 1).
struct LiftedInputMatrix {
    Matrix data;

    Eigen::Index rows() const { return data.rows(); }
    Eigen::Index cols() const { return data.cols(); }
};

struct GaussianExcitation {
    double mean = 0.0;
    double stddev = 1.0;
};

// Either seeded white noise or caller-prescribed inputs (d x L).
using Excitation = std::variant<GaussianExcitation, Matrix>;

// Deterministic map from an input sequence to the matching output sequence.
using Simulator = std::function<Vector(const Vector&)>;

struct RecoveryDiagnostics {
    Eigen::Index rank = 0;
    double residual = 0.0;
    double condition = 0.0;
};

struct MarkovRecovery {
    MarkovSequence markov;
    RecoveryDiagnostics diagnostics;
};

// Lifted-input recursion u_1(h) = u(h), u_j(h) = [u_{j-1}(h); u_{j-1}(h)*u(h+j-1)].
LiftedInputMatrix lift_input(const Vector& u);

// Runs d length-L experiments against the simulator. Gaussian inputs come
// from per-experiment substreams derived from the seed, so the batch is
// reproducible and independent of evaluation order.
ExperimentBatch generate_experiments(const Simulator& source, Eigen::Index d, Eigen::Index L,
                                     const Excitation& excitation, std::uint64_t seed);

// Stacks the lifted matrices of all experiments and solves for the
// 2^L - 1 Markov parameters (SVD-based minimum-norm solution).
// Throws rank_deficiency_error when the stacked matrix does not have
// full column rank.
MarkovRecovery recover_markov(const ExperimentBatch& batch);

// Default experiment count for sequence length L: the last lifted block has
// 2^(L-1) columns that only the final row of each experiment populates, so
// fewer experiments leave the stacked system structurally rank-deficient.
inline Eigen::Index default_experiment_count(Eigen::Index L) {
    return Eigen::Index{1} << (L - 1);
}

}  // namespace bilin
