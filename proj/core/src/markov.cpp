#include "bilin/markov.hpp"

#include <cmath>
#include <lapacke.h>
#include <limits>
#include <random>
#include <string>

namespace bilin {

void ExperimentBatch::validate() const {
    if (inputs.rows() != outputs.rows() || inputs.cols() != outputs.cols())
        throw std::invalid_argument("ExperimentBatch: inputs and outputs must have equal shape");
    if (inputs.rows() < 1 || inputs.cols() < 1)
        throw std::invalid_argument("ExperimentBatch: batch must be non-empty");
    if (!inputs.allFinite() || !outputs.allFinite())
        throw std::invalid_argument("ExperimentBatch: entries must be finite");
}

LiftedInputMatrix lift_input(const Vector& u) {
    const Eigen::Index L = u.size();
    if (L < 1) throw std::invalid_argument("lift_input: input must be non-empty");
    if (!u.allFinite()) throw std::invalid_argument("lift_input: input must be finite");

    Matrix U = Matrix::Zero(L, markov_count(static_cast<int>(L)));
    for (Eigen::Index t = 1; t <= L; ++t) {
        // Row t collects u_j(t - j) for j = 1..t; each u_j(h) is built by
        // the doubling recursion u_j(h) = [u_{j-1}(h); u_{j-1}(h) * u(h + j - 1)].
        Eigen::Index col = 0;
        for (Eigen::Index j = 1; j <= t; ++j) {
            const Eigen::Index h = t - j;
            const Eigen::Index len = Eigen::Index{1} << (j - 1);
            Vector v(len);
            v(0) = u(h);
            Eigen::Index filled = 1;
            for (Eigen::Index i = 2; i <= j; ++i, filled *= 2)
                v.segment(filled, filled) = v.head(filled) * u(h + i - 1);
            U.row(t - 1).segment(col, len) = v.transpose();
            col += len;
        }
    }
    return LiftedInputMatrix{std::move(U)};
}

ExperimentBatch generate_experiments(const Simulator& source, Eigen::Index d, Eigen::Index L,
                                     const Excitation& excitation, std::uint64_t seed) {
    if (d < 1 || L < 1)
        throw std::invalid_argument("generate_experiments: d and L must be >= 1");

    Matrix inputs(d, L);
    if (const auto* g = std::get_if<GaussianExcitation>(&excitation)) {
        for (Eigen::Index i = 0; i < d; ++i) {
            // Per-experiment substream keyed by (seed, i).
            std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                               static_cast<std::uint32_t>(i)};
            std::mt19937_64 rng(sseq);
            std::normal_distribution<double> dist(g->mean, g->stddev);
            for (Eigen::Index t = 0; t < L; ++t) inputs(i, t) = dist(rng);
        }
    } else {
        const Matrix& prescribed = std::get<Matrix>(excitation);
        if (prescribed.rows() != d || prescribed.cols() != L)
            throw std::invalid_argument("generate_experiments: prescribed inputs must be d x L");
        inputs = prescribed;
    }

    Matrix outputs(d, L);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector y;
        try {
            y = source(inputs.row(i).transpose());
        } catch (const divergence_error& e) {
            throw divergence_error(
                "generate_experiments: experiment " + std::to_string(i) + " diverged: " + e.what(),
                e.step());
        }
        if (y.size() != L)
            throw std::invalid_argument("generate_experiments: simulator returned wrong length");
        outputs.row(i) = y.transpose();
    }
    return ExperimentBatch{std::move(inputs), std::move(outputs)};
}

MarkovRecovery recover_markov(const ExperimentBatch& batch) {
    batch.validate();
    const Eigen::Index d = batch.d();
    const int L = static_cast<int>(batch.L());
    const Eigen::Index m = markov_count(L);
    const Eigen::Index rows = d * L;
    if (rows < m)
        throw rank_deficiency_error("recover_markov: too few stacked equations",
                                    static_cast<std::size_t>(rows), static_cast<std::size_t>(m));

    Matrix U(rows, m);
    Vector b(rows);
    for (Eigen::Index i = 0; i < d; ++i) {
        U.middleRows(i * L, L) = lift_input(batch.inputs.row(i).transpose()).data;
        b.segment(i * L, L) = batch.outputs.row(i).transpose();
    }

    // Minimum-norm least squares through the divide-and-conquer SVD
    // (dgelsd); singular values below max(dims)*eps*sigma_max count as zero.
    const double rcond =
        static_cast<double>(std::max(rows, m)) * std::numeric_limits<double>::epsilon();
    Vector s(std::min(rows, m));
    lapack_int rank = 0;
    lapack_int info = LAPACKE_dgelsd(LAPACK_COL_MAJOR, static_cast<lapack_int>(rows),
                                     static_cast<lapack_int>(m), 1, U.data(),
                                     static_cast<lapack_int>(rows), b.data(),
                                     static_cast<lapack_int>(rows), s.data(), rcond, &rank);
    if (info != 0)
        throw numerical_error("recover_markov: SVD failed to converge (dgelsd info=" +
                              std::to_string(info) + ")");
    if (rank < m)
        throw rank_deficiency_error(
            "recover_markov: stacked lifted-input matrix is rank deficient "
            "(inputs not exciting enough; increase d or change the seed)",
            static_cast<std::size_t>(rank), static_cast<std::size_t>(m));

    Vector w = b.head(m);

    RecoveryDiagnostics diag;
    diag.rank = rank;
    diag.condition = s(0) / s(rank - 1);
    // dgelsd overwrote U, so accumulate the residual experiment by experiment.
    double res2 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector r = lift_input(batch.inputs.row(i).transpose()).data * w -
                   batch.outputs.row(i).transpose();
        res2 += r.squaredNorm();
    }
    diag.residual = std::sqrt(res2);

    return MarkovRecovery{MarkovSequence::from_flat(L, std::move(w)), diag};
}

}  // namespace bilin
