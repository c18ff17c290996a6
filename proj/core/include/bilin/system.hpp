#pragma once

// SISO bilinear state-space systems: discrete/continuous representations,
// simulation, backward-Euler time-domain conversion, and the reachability/
// observability recursions that define the bilinear Markov parameters.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "bilin/errors.hpp"

namespace bilin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// x_{k+1} = A x_k + N x_k u_k + B u_k [+ drift],  y_k = C x_k + D u_k [+ y_offset]
struct DiscreteBilinearSystem {
    Eigen::Index n = 0;
    Matrix A;
    Matrix N;
    Vector B;
    RowVector C;
    double D = 0.0;
    std::optional<Vector> drift;
    double y_offset = 0.0;
    Vector x0;

    DiscreteBilinearSystem() = default;
    DiscreteBilinearSystem(Matrix A_, Matrix N_, Vector B_, RowVector C_);

    // Throws std::invalid_argument on dimension mismatch or non-finite entries.
    void validate() const;
};

// Continuous-time counterpart; exists as the inverse image of the
// backward-Euler map and for serialization. Not integrated directly.
struct ContinuousBilinearSystem {
    Eigen::Index n = 0;
    Matrix A;
    Matrix N;
    Vector B;
    RowVector C;
    double D = 0.0;
    std::optional<Vector> drift;
    double y_offset = 0.0;
    Vector x0;

    ContinuousBilinearSystem() = default;
    ContinuousBilinearSystem(Matrix A_, Matrix N_, Vector B_, RowVector C_);

    void validate() const;
};

// The i/o invariants w_1..w_L, where block w_j has length 2^(j-1) and holds
// the Markov values of all words of length j-1 over {A, N}.
struct MarkovSequence {
    int depth = 0;
    std::vector<RowVector> blocks;
    Vector flat;  // concatenation of blocks, length 2^depth - 1

    static MarkovSequence from_flat(int depth, Vector flat);
    static MarkovSequence from_blocks(std::vector<RowVector> blocks);
};

// Number of Markov parameters activated by depth L: 2^L - 1.
inline Eigen::Index markov_count(int depth) {
    return (Eigen::Index{1} << depth) - 1;
}

// Simulate x_0 = sys.x0 through K state updates; returns y_1..y_K
// (the output after the first update comes first, y_0 is not emitted).
// Throws divergence_error when a state entry exceeds 1e12 in magnitude.
Vector simulate_discrete(const DiscreteBilinearSystem& sys, const Vector& u);

// Backward-Euler map: A = (I - dt*Ac)^-1, N = dt*A*Nc, B = dt*A*Bc, C = Cc.
// Drift maps like B. Throws singular_matrix_error when (I - dt*Ac) is singular.
DiscreteBilinearSystem discretize_backward_euler(const ContinuousBilinearSystem& csys,
                                                 double dt);

// Inverse of the backward-Euler map. Requires A invertible.
ContinuousBilinearSystem undiscretize(const DiscreteBilinearSystem& dsys, double dt);

// Reachability levels R_1..R_q concatenated: R_1 = B, R_j = [A R_{j-1}, N R_{j-1}].
// Result is n x (2^q - 1), A-half before N-half within each level.
Matrix reachability(const DiscreteBilinearSystem& sys, int q);

// Observability levels O_1..O_p stacked: O_1 = C, O_j = [O_{j-1} A; O_{j-1} N].
// Result is (2^p - 1) x n, A-block above N-block within each level.
Matrix observability(const DiscreteBilinearSystem& sys, int p);

// Exact Markov parameters from known operators: blocks[j] = C * R_j.
MarkovSequence markov_oracle(const DiscreteBilinearSystem& sys, int L);

}  // namespace bilin
