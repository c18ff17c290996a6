#include "bilin/system.hpp"

#include <cmath>
#include <string>

namespace bilin {

namespace {

constexpr double kDivergenceLimit = 1e12;

void check_quadruple(Eigen::Index n, const Matrix& A, const Matrix& N, const Vector& B,
                     const RowVector& C, const std::optional<Vector>& drift, const Vector& x0,
                     const char* kind) {
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument(std::string(kind) + ": " + msg);
    };
    if (n <= 0) fail("state dimension must be positive");
    if (A.rows() != n || A.cols() != n) fail("A must be n x n");
    if (N.rows() != n || N.cols() != n) fail("N must be n x n");
    if (B.size() != n) fail("B must be an n-vector");
    if (C.size() != n) fail("C must be an n-row-vector");
    if (x0.size() != 0 && x0.size() != n) fail("x0 must be an n-vector");
    if (drift && drift->size() != n) fail("drift must be an n-vector");
    if (!A.allFinite() || !N.allFinite() || !B.allFinite() || !C.allFinite())
        fail("operators must be finite");
    if (!x0.allFinite()) fail("x0 must be finite");
    if (drift && !drift->allFinite()) fail("drift must be finite");
}

// Inverts M, reporting a singularity with a condition estimate.
Matrix invert_or_throw(const Matrix& M, const char* what) {
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double smax = sv(0);
    double smin = sv(sv.size() - 1);
    double eps = std::numeric_limits<double>::epsilon();
    if (smax <= 0.0 || smin <= static_cast<double>(M.rows()) * eps * smax) {
        double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        throw singular_matrix_error(std::string(what) + " is numerically singular", cond);
    }
    return svd.solve(Matrix::Identity(M.rows(), M.cols()));
}

}  // namespace

DiscreteBilinearSystem::DiscreteBilinearSystem(Matrix A_, Matrix N_, Vector B_, RowVector C_)
    : n(A_.rows()), A(std::move(A_)), N(std::move(N_)), B(std::move(B_)), C(std::move(C_)) {
    x0 = Vector::Zero(n);
    validate();
}

void DiscreteBilinearSystem::validate() const {
    check_quadruple(n, A, N, B, C, drift, x0, "DiscreteBilinearSystem");
    if (!std::isfinite(D) || !std::isfinite(y_offset))
        throw std::invalid_argument("DiscreteBilinearSystem: D and y_offset must be finite");
}

ContinuousBilinearSystem::ContinuousBilinearSystem(Matrix A_, Matrix N_, Vector B_, RowVector C_)
    : n(A_.rows()), A(std::move(A_)), N(std::move(N_)), B(std::move(B_)), C(std::move(C_)) {
    x0 = Vector::Zero(n);
    validate();
}

void ContinuousBilinearSystem::validate() const {
    check_quadruple(n, A, N, B, C, drift, x0, "ContinuousBilinearSystem");
    if (!std::isfinite(D) || !std::isfinite(y_offset))
        throw std::invalid_argument("ContinuousBilinearSystem: D and y_offset must be finite");
}

MarkovSequence MarkovSequence::from_flat(int depth, Vector flat) {
    if (depth < 1) throw std::invalid_argument("MarkovSequence: depth must be >= 1");
    if (flat.size() != markov_count(depth))
        throw std::invalid_argument("MarkovSequence: flat length must be 2^depth - 1");
    MarkovSequence seq;
    seq.depth = depth;
    seq.flat = std::move(flat);
    Eigen::Index pos = 0;
    for (int j = 1; j <= depth; ++j) {
        Eigen::Index len = Eigen::Index{1} << (j - 1);
        seq.blocks.push_back(seq.flat.segment(pos, len).transpose());
        pos += len;
    }
    return seq;
}

MarkovSequence MarkovSequence::from_blocks(std::vector<RowVector> blocks) {
    int depth = static_cast<int>(blocks.size());
    if (depth < 1) throw std::invalid_argument("MarkovSequence: need at least one block");
    Vector flat(markov_count(depth));
    Eigen::Index pos = 0;
    for (int j = 1; j <= depth; ++j) {
        Eigen::Index len = Eigen::Index{1} << (j - 1);
        if (blocks[j - 1].size() != len)
            throw std::invalid_argument("MarkovSequence: block " + std::to_string(j) +
                                        " must have length 2^(j-1)");
        flat.segment(pos, len) = blocks[j - 1].transpose();
        pos += len;
    }
    MarkovSequence seq;
    seq.depth = depth;
    seq.blocks = std::move(blocks);
    seq.flat = std::move(flat);
    return seq;
}

Vector simulate_discrete(const DiscreteBilinearSystem& sys, const Vector& u) {
    sys.validate();
    if (!u.allFinite()) throw std::invalid_argument("simulate_discrete: input must be finite");

    const Eigen::Index K = u.size();
    Vector y(K);
    Vector x = sys.x0.size() == 0 ? Vector::Zero(sys.n) : sys.x0;
    for (Eigen::Index k = 0; k < K; ++k) {
        Vector xn = sys.A * x + sys.N * x * u(k) + sys.B * u(k);
        if (sys.drift) xn += *sys.drift;
        if (!xn.allFinite() || xn.cwiseAbs().maxCoeff() > kDivergenceLimit)
            throw divergence_error("simulate_discrete: state diverged",
                                   static_cast<std::size_t>(k + 1));
        x = std::move(xn);
        // y_k pairs with u_k in the output equation; past the end of the
        // input u_{K} is taken as zero (irrelevant for the D = 0 pipeline).
        double u_k = (k + 1 < K) ? u(k + 1) : 0.0;
        y(k) = sys.C * x + sys.D * u_k + sys.y_offset;
    }
    return y;
}

DiscreteBilinearSystem discretize_backward_euler(const ContinuousBilinearSystem& csys,
                                                 double dt) {
    csys.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("discretize_backward_euler: dt must be > 0");

    Matrix M = Matrix::Identity(csys.n, csys.n) - dt * csys.A;
    Matrix Minv = invert_or_throw(M, "discretize_backward_euler: (I - dt*A)");

    DiscreteBilinearSystem dsys(Minv, dt * Minv * csys.N, dt * Minv * csys.B, csys.C);
    dsys.D = csys.D;
    dsys.y_offset = csys.y_offset;
    dsys.x0 = csys.x0.size() == 0 ? Vector::Zero(csys.n) : csys.x0;
    if (csys.drift) dsys.drift = dt * Minv * (*csys.drift);
    return dsys;
}

ContinuousBilinearSystem undiscretize(const DiscreteBilinearSystem& dsys, double dt) {
    dsys.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("undiscretize: dt must be > 0");

    Matrix Ainv = invert_or_throw(dsys.A, "undiscretize: A");

    ContinuousBilinearSystem csys((Matrix::Identity(dsys.n, dsys.n) - Ainv) / dt,
                                  Ainv * dsys.N / dt, Ainv * dsys.B / dt, dsys.C);
    csys.D = dsys.D;
    csys.y_offset = dsys.y_offset;
    csys.x0 = dsys.x0.size() == 0 ? Vector::Zero(dsys.n) : dsys.x0;
    if (dsys.drift) csys.drift = Ainv * (*dsys.drift) / dt;
    return csys;
}

Matrix reachability(const DiscreteBilinearSystem& sys, int q) {
    sys.validate();
    if (q < 1) throw std::invalid_argument("reachability: depth must be >= 1");

    Matrix R(sys.n, markov_count(q));
    R.col(0) = sys.B;
    Eigen::Index prev_start = 0, prev_len = 1;
    for (int j = 2; j <= q; ++j) {
        Eigen::Index start = prev_start + prev_len;
        auto prev = R.middleCols(prev_start, prev_len);
        R.middleCols(start, prev_len) = sys.A * prev;
        R.middleCols(start + prev_len, prev_len) = sys.N * prev;
        prev_start = start;
        prev_len *= 2;
    }
    return R;
}

Matrix observability(const DiscreteBilinearSystem& sys, int p) {
    sys.validate();
    if (p < 1) throw std::invalid_argument("observability: depth must be >= 1");

    Matrix O(markov_count(p), sys.n);
    O.row(0) = sys.C;
    Eigen::Index prev_start = 0, prev_len = 1;
    for (int j = 2; j <= p; ++j) {
        Eigen::Index start = prev_start + prev_len;
        auto prev = O.middleRows(prev_start, prev_len);
        O.middleRows(start, prev_len) = prev * sys.A;
        O.middleRows(start + prev_len, prev_len) = prev * sys.N;
        prev_start = start;
        prev_len *= 2;
    }
    return O;
}

MarkovSequence markov_oracle(const DiscreteBilinearSystem& sys, int L) {
    if (L < 1) throw std::invalid_argument("markov_oracle: depth must be >= 1");
    Matrix R = reachability(sys, L);
    Vector flat = (sys.C * R).transpose();
    return MarkovSequence::from_flat(L, std::move(flat));
}

}  // namespace bilin
