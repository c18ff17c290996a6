#include <doctest.h>

#include <bilin/pipeline.hpp>
#include <bilin/system.hpp>

#include <random>

using namespace bilin;

namespace {

// The reference order-2 system used by most golden tests.
const double kGoldenW[15] = {1.0,   0.9,   0.4,   0.81,  0.33,  0.36,  0.22, 0.729,
                             0.273, 0.297, 0.183, 0.324, 0.18,  0.198, 0.118};

ContinuousBilinearSystem random_continuous(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    auto randn = [&](Eigen::Index r, Eigen::Index c) {
        Matrix M(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) M(i, j) = g(rng);
        return M;
    };
    Matrix A = randn(n, n);
    A -= (A.eigenvalues().real().maxCoeff() + 1.0) * Matrix::Identity(n, n);
    ContinuousBilinearSystem sys(A, randn(n, n), randn(n, 1), randn(1, n));
    return sys;
}

}  // namespace

TEST_CASE("simulation basics on the toy system") {
    auto sys = toy_system();

    SUBCASE("zero input gives zero output") {
        Vector y = simulate_discrete(sys, Vector::Zero(20));
        CHECK(y.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single unit impulse yields C*B") {
        Vector u(1);
        u << 1.0;
        Vector y = simulate_discrete(sys, u);
        CHECK(y.size() == 1);
        CHECK(y(0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("output offset shifts every sample") {
        auto shifted = sys;
        shifted.y_offset = 3.5;
        Vector u(5);
        u << 1, -1, 0.5, 0, 2;
        Vector base = simulate_discrete(sys, u);
        Vector y = simulate_discrete(shifted, u);
        CHECK((y - base - Vector::Constant(5, 3.5)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("simulation is causal") {
    auto sys = toy_system();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector u(40);
    for (int i = 0; i < 40; ++i) u(i) = g(rng);
    Vector full = simulate_discrete(sys, u);
    for (Eigen::Index K : {1, 7, 25}) {
        Vector head = simulate_discrete(sys, u.head(K));
        for (Eigen::Index k = 0; k < K; ++k) CHECK(head(k) == full(k));  // bitwise
    }
}

TEST_CASE("linear specialization matches the convolution formula") {
    auto sys = toy_system();
    sys.N.setZero();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector u(30);
    for (int i = 0; i < 30; ++i) u(i) = g(rng);
    Vector y = simulate_discrete(sys, u);
    for (Eigen::Index k = 1; k <= 30; ++k) {
        double conv = 0.0;
        Matrix Ap = Matrix::Identity(2, 2);
        for (Eigen::Index i = k - 1; i >= 0; --i) {
            conv += (sys.C * Ap * sys.B)(0) * u(i);
            Ap = sys.A * Ap;
        }
        CHECK(std::abs(y(k - 1) - conv) < 1e-10);
    }
}

TEST_CASE("divergent simulations raise with the step index") {
    Matrix A(1, 1), N(1, 1);
    A << 2.0;
    N << 0.0;
    Vector B(1);
    B << 1.0;
    RowVector C(1);
    C << 1.0;
    DiscreteBilinearSystem sys(A, N, B, C);
    Vector u = Vector::Ones(200);
    CHECK_THROWS_AS(simulate_discrete(sys, u), divergence_error);
    try {
        simulate_discrete(sys, u);
    } catch (const divergence_error& e) {
        CHECK(e.step() > 0);
        CHECK(e.step() <= 200);
    }
}

TEST_CASE("construction rejects inconsistent dimensions") {
    Matrix A = Matrix::Identity(2, 2);
    Matrix N = Matrix::Zero(3, 3);
    Vector B = Vector::Ones(2);
    RowVector C = RowVector::Ones(2);
    CHECK_THROWS_AS(DiscreteBilinearSystem(A, N, B, C), std::invalid_argument);
    Matrix bad = A;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(DiscreteBilinearSystem(bad, Matrix::Zero(2, 2), B, C),
                    std::invalid_argument);
}

TEST_CASE("backward-Euler map: identity and scalar cases") {
    SUBCASE("zero drift matrix") {
        Matrix Z = Matrix::Zero(3, 3);
        Matrix Nc = Matrix::Random(3, 3);
        Vector Bc = Vector::Random(3);
        RowVector Cc = RowVector::Random(3);
        ContinuousBilinearSystem csys(Z, Nc, Bc, Cc);
        auto d = discretize_backward_euler(csys, 0.25);
        CHECK((d.A - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((d.N - 0.25 * Nc).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((d.B - 0.25 * Bc).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((d.C - Cc).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("scalar formulas") {
        Matrix Ac(1, 1), Nc(1, 1);
        Ac << -1.0;
        Nc << 1.0;
        Vector Bc(1);
        Bc << 1.0;
        RowVector Cc(1);
        Cc << 1.0;
        ContinuousBilinearSystem csys(Ac, Nc, Bc, Cc);
        auto d = discretize_backward_euler(csys, 0.1);
        CHECK(d.A(0, 0) == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
        CHECK(d.N(0, 0) == doctest::Approx(0.1 / 1.1).epsilon(1e-14));
        CHECK(d.B(0) == doctest::Approx(0.1 / 1.1).epsilon(1e-14));
    }
}

TEST_CASE("time-domain conversion round trips") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 6);
        auto csys = random_continuous(n, seed);
        for (double dt : {0.01, 0.1}) {
            auto back = undiscretize(discretize_backward_euler(csys, dt), dt);
            CHECK((back.A - csys.A).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((back.N - csys.N).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((back.B - csys.B).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((back.C - csys.C).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("undiscretize inverts the identity case and rejects singular A") {
    Matrix M = Matrix::Random(2, 2);
    Vector b = Vector::Random(2);
    RowVector c = RowVector::Random(2);
    double dt = 0.05;
    DiscreteBilinearSystem dsys(Matrix::Identity(2, 2), dt * M, dt * b, c);
    auto csys = undiscretize(dsys, dt);
    CHECK(csys.A.cwiseAbs().maxCoeff() < 1e-13);
    CHECK((csys.N - M).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((csys.B - b).cwiseAbs().maxCoeff() < 1e-12);

    Matrix sing(2, 2);
    sing << 1, 0, 0, 0;
    DiscreteBilinearSystem bad(sing, Matrix::Zero(2, 2), b, c);
    CHECK_THROWS_AS(undiscretize(bad, dt), singular_matrix_error);
}

TEST_CASE("drift carries through the time-domain conversion like B") {
    auto csys = random_continuous(3, 77);
    csys.drift = Vector::Random(3);
    double dt = 0.1;
    auto d = discretize_backward_euler(csys, dt);
    REQUIRE(d.drift.has_value());
    Matrix Ainv = (Matrix::Identity(3, 3) - dt * csys.A).inverse();
    CHECK((*d.drift - dt * Ainv * *csys.drift).cwiseAbs().maxCoeff() < 1e-12);
    auto back = undiscretize(d, dt);
    REQUIRE(back.drift.has_value());
    CHECK((*back.drift - *csys.drift).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reachability structure") {
    auto sys = toy_system();
    SUBCASE("depth 1 is B") {
        Matrix R = reachability(sys, 1);
        CHECK((R - sys.B).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("depth 2 columns are B, AB, NB") {
        Matrix R = reachability(sys, 2);
        REQUIRE(R.cols() == 3);
        CHECK((R.col(0) - sys.B).cwiseAbs().maxCoeff() == 0.0);
        CHECK((R.col(1) - sys.A * sys.B).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((R.col(2) - sys.N * sys.B).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(R.col(1)(0) == doctest::Approx(0.9));
        CHECK(R.col(2)(0) == doctest::Approx(0.1));
        CHECK(R.col(2)(1) == doctest::Approx(0.3));
    }
    SUBCASE("zero coupling kills every mixed column") {
        auto lin = sys;
        lin.N.setZero();
        Matrix R = reachability(lin, 3);
        // Columns 0, 1, 3 are B, AB, AAB; all others contain an N letter.
        for (Eigen::Index k : {2, 4, 5, 6}) CHECK(R.col(k).cwiseAbs().maxCoeff() == 0.0);
        CHECK((R.col(3) - lin.A * lin.A * lin.B).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("observability structure") {
    auto sys = toy_system();
    SUBCASE("depth 1 is C") {
        Matrix O = observability(sys, 1);
        CHECK((O - sys.C).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("depth 2 rows are C, CA, CN") {
        Matrix O = observability(sys, 2);
        REQUIRE(O.rows() == 3);
        CHECK((O.row(0) - sys.C).cwiseAbs().maxCoeff() == 0.0);
        CHECK((O.row(1) - sys.C * sys.A).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((O.row(2) - sys.C * sys.N).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(O(1, 0) == doctest::Approx(0.9));
        CHECK(O(1, 1) == doctest::Approx(0.8));
        CHECK(O(2, 0) == doctest::Approx(0.4));
        CHECK(O(2, 1) == doctest::Approx(0.6));
    }
    SUBCASE("the toy system is observable at depth n") {
        Matrix O = observability(sys, 2);
        Eigen::JacobiSVD<Matrix> svd(O);
        CHECK(svd.singularValues()(1) > 1e-8);
    }
}

TEST_CASE("exact Markov parameters from known operators") {
    auto sys = toy_system();
    SUBCASE("depth 4 reproduces the reference vector") {
        auto W = markov_oracle(sys, 4);
        REQUIRE(W.flat.size() == 15);
        for (int i = 0; i < 15; ++i) CHECK(W.flat(i) == doctest::Approx(kGoldenW[i]).epsilon(1e-12));
    }
    SUBCASE("depth 1 is C*B") {
        auto W = markov_oracle(sys, 1);
        REQUIRE(W.flat.size() == 1);
        CHECK(W.flat(0) == doctest::Approx(1.0));
    }
    SUBCASE("linear specialization") {
        auto lin = sys;
        lin.N.setZero();
        auto W = markov_oracle(lin, 4);
        // Pure-A entries sit at flat positions 2^(j-1)-1 and equal C A^(j-1) B.
        Matrix Ap = Matrix::Identity(2, 2);
        for (int j = 1; j <= 4; ++j) {
            Eigen::Index flat = (Eigen::Index{1} << (j - 1)) - 1;
            CHECK(W.flat(flat) == doctest::Approx((lin.C * Ap * lin.B)(0)).epsilon(1e-12));
            Ap = lin.A * Ap;
        }
        for (Eigen::Index i = 0; i < W.flat.size(); ++i) {
            bool pure_a = ((i + 1) & i) == 0;  // positions 0,1,3,7 are powers of two minus one
            if (!pure_a) CHECK(std::abs(W.flat(i)) == 0.0);
        }
    }
}

TEST_CASE("MarkovSequence layout invariants") {
    auto W = markov_oracle(toy_system(), 5);
    CHECK(W.flat.size() == markov_count(5));
    Eigen::Index at = 0;
    for (int j = 0; j < 5; ++j) {
        CHECK(W.blocks[j].size() == (Eigen::Index{1} << j));
        CHECK((W.flat.segment(at, W.blocks[j].size()).transpose() - W.blocks[j])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        at += W.blocks[j].size();
    }
    auto round = MarkovSequence::from_flat(5, W.flat);
    for (int j = 0; j < 5; ++j)
        CHECK((round.blocks[j] - W.blocks[j]).cwiseAbs().maxCoeff() == 0.0);
    auto from_blocks = MarkovSequence::from_blocks(W.blocks);
    CHECK((from_blocks.flat - W.flat).cwiseAbs().maxCoeff() == 0.0);
}
