#include <doctest.h>

#include <bilin/pipeline.hpp>

#include <random>

using namespace bilin;

namespace {

Simulator make_source(const DiscreteBilinearSystem& sys) {
    return [sys](const Vector& u) { return simulate_discrete(sys, u); };
}

}  // namespace

TEST_CASE("direct identification of the toy system") {
    auto sys = toy_system();
    PipelineConfig cfg;
    cfg.L = 4;
    cfg.d = 8;
    cfg.seed = 42;
    auto report = identify_direct(make_source(sys), cfg, &sys);
    CHECK(report.realization.order == 2);
    REQUIRE(report.markov_max_error.has_value());
    CHECK(*report.markov_max_error < 1e-8);
    REQUIRE(report.response_max_error.has_value());
    CHECK(*report.response_max_error < 1e-8);
    CHECK(report.diagnostics.rank == 15);
}

TEST_CASE("direct identification is reproducible end to end") {
    auto sys = random_stable_system(3, 8);
    PipelineConfig cfg;
    cfg.L = 8;
    cfg.seed = 5;
    auto a = identify_direct(make_source(sys), cfg);
    auto b = identify_direct(make_source(sys), cfg);
    CHECK((a.realization.system.A - b.realization.system.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.realization.singular_values - b.realization.singular_values).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((a.batch.inputs - b.batch.inputs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reports carry a clean singular spectrum") {
    auto sys = random_stable_system(4, 12);
    PipelineConfig cfg;
    cfg.L = 10;
    cfg.seed = 3;
    auto report = identify_direct(make_source(sys), cfg);
    const Vector& sv = report.realization.singular_values;
    CHECK(sv.allFinite());
    for (Eigen::Index i = 1; i < sv.size(); ++i) CHECK(sv(i) <= sv(i - 1));
    CHECK(report.realization.order == 4);
}

TEST_CASE("configuration validation") {
    PipelineConfig cfg;
    cfg.L = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PipelineConfig{};
    cfg.hankel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PipelineConfig{};
    cfg.excitation_stddev = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PipelineConfig{};
    CHECK(cfg.experiment_count() == default_experiment_count(cfg.L));
    cfg.d = 24;
    CHECK(cfg.experiment_count() == 24);
}

TEST_CASE("trace metrics") {
    Vector a(3), b(3);
    a << 0, 5, 10;
    b = a;
    auto same = compute_metrics(a, b);
    CHECK(same.mpe == 0.0);
    CHECK(same.max_abs_error == 0.0);
    CHECK(same.rms_error == 0.0);

    b = a + Vector::Constant(3, 0.5);
    auto off = compute_metrics(a, b);
    CHECK(off.mpe == doctest::Approx(5.0));
    CHECK(off.max_abs_error == doctest::Approx(0.5));
    CHECK(off.rms_error == doctest::Approx(0.5));

    CHECK_THROWS_AS(compute_metrics(a, Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("synthetic system generators") {
    SUBCASE("toy quadruple entries") {
        auto sys = toy_system();
        CHECK(sys.n == 2);
        CHECK(sys.A(0, 0) == 0.9);
        CHECK(sys.A(1, 1) == 0.8);
        CHECK(sys.N(1, 0) == 0.3);
        CHECK(sys.B(0) == 1.0);
        CHECK(sys.C(1) == 1.0);
    }
    SUBCASE("random systems hit the requested norms and are reproducible") {
        auto a = random_stable_system(6, 123, 0.7, 0.3);
        auto b = random_stable_system(6, 123, 0.7, 0.3);
        CHECK((a.A - b.A).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.A.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.7).epsilon(1e-10));
        CHECK(a.N.operatorNorm() == doctest::Approx(0.3).epsilon(1e-10));
        CHECK(a.B.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("decaying input") {
        Vector u = decaying_input(4);
        CHECK(u(0) == 1.0);
        CHECK(u(3) == doctest::Approx(0.25));
    }
}

TEST_CASE("sequence identification smoke run") {
    // Full single-sequence pipeline on a short toy dataset with a small
    // training budget; the tight accuracy requirement lives in the
    // acceptance suite, this guards wiring and report consistency.
    auto sys = toy_system();
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector u(1200);
    for (int i = 0; i < 1200; ++i) u(i) = g(rng);
    Dataset ds;
    ds.u = u;
    ds.y = simulate_discrete(sys, u);

    PipelineConfig cfg;
    cfg.L = 4;
    cfg.d = 64;
    cfg.order_override = 2;
    cfg.seed = 1;
    cfg.training_prefix = 1000;
    cfg.narx.input_lags = 2;
    cfg.narx.output_lags = 2;
    cfg.narx.hidden_widths = {16, 16};
    cfg.narx.train.epochs = 300;
    cfg.narx.train.learning_rate = 5e-3;
    cfg.narx.train.patience = 300;
    cfg.narx.train.seed = 1;

    auto report = identify_from_sequence(ds, cfg);
    CHECK(report.realization.order == 2);
    CHECK(report.physical.y_offset == doctest::Approx(report.trend.y_mean));
    CHECK(report.y_model.size() == 1200);
    CHECK(report.y_model.allFinite());
    CHECK(std::isfinite(report.mpe_full));
    MESSAGE("smoke-run full-sequence MPE: " << report.mpe_full << "%");
    CHECK(report.mpe_full < 25.0);

    SUBCASE("datasets shorter than the lag requirement are rejected") {
        Dataset tiny;
        tiny.u = Vector::Ones(3);
        tiny.y = Vector::Ones(3);
        PipelineConfig big = cfg;
        big.narx.input_lags = 20;
        big.narx.output_lags = 20;
        CHECK_THROWS_AS(identify_from_sequence(tiny, big), std::invalid_argument);
    }
}
