#include <doctest.h>

#include <bilin/io.hpp>
#include <bilin/pipeline.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace bilin;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("bilin_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("csv ingestion") {
    TempDir dir;
    SUBCASE("t,u,y header") {
        auto p = dir.file("a.csv");
        write_file(p, "t,u,y\n0,1,2\n1,3,4\n");
        auto ds = ingest(p, DatasetFormat::csv);
        REQUIRE(ds.u.size() == 2);
        CHECK(ds.u(0) == 1.0);
        CHECK(ds.u(1) == 3.0);
        CHECK(ds.y(0) == 2.0);
        CHECK(ds.y(1) == 4.0);
    }
    SUBCASE("u,y header without time column") {
        auto p = dir.file("b.csv");
        write_file(p, "u,y\n1,2\n3,4\n");
        auto ds = ingest(p, DatasetFormat::csv);
        REQUIRE(ds.u.size() == 2);
        CHECK(ds.u(1) == 3.0);
    }
    SUBCASE("non-numeric token names the line") {
        auto p = dir.file("c.csv");
        write_file(p, "t,u,y\n0,1,2\n1,oops,4\n");
        CHECK_THROWS_AS(ingest(p, DatasetFormat::csv), data_error);
        try {
            ingest(p, DatasetFormat::csv);
        } catch (const data_error& e) {
            CHECK(std::string(e.what()).find("3") != std::string::npos);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(ingest(dir.file("missing.csv"), DatasetFormat::csv), data_error);
    }
}

TEST_CASE("whitespace-delimited ingestion with a column map") {
    TempDir dir;
    auto p = dir.file("d.dat");
    write_file(p, "  1.0   5.0   9.0\n  2.0   6.0  10.0\n  3.0   7.0  11.0\n");
    auto ds = ingest(p, DatasetFormat::daisy_whitespace, 1, 3);
    REQUIRE(ds.u.size() == 3);
    CHECK(ds.u(0) == 1.0);
    CHECK(ds.y(0) == 9.0);
    CHECK(ds.y(2) == 11.0);

    SUBCASE("column index out of range") {
        CHECK_THROWS_AS(ingest(p, DatasetFormat::daisy_whitespace, 1, 9), data_error);
    }
}

TEST_CASE("discrete model serialization round trip") {
    TempDir dir;
    auto sys = toy_system();
    sys.drift = Vector::Random(2);
    sys.y_offset = 96.9358;
    sys.x0 = Vector::Random(2);
    sys.D = 0.25;
    auto p = dir.file("model.json");
    save_model(sys, p);
    auto loaded = load_model(p);
    REQUIRE(std::holds_alternative<DiscreteBilinearSystem>(loaded.system));
    const auto& back = std::get<DiscreteBilinearSystem>(loaded.system);
    CHECK((back.A - sys.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.N - sys.N).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.B - sys.B).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.C - sys.C).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.D == sys.D);
    REQUIRE(back.drift.has_value());
    CHECK((*back.drift - *sys.drift).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.y_offset == sys.y_offset);
    CHECK((back.x0 - sys.x0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("continuous model serialization keeps the time domain and dt") {
    TempDir dir;
    ContinuousBilinearSystem csys(Matrix::Random(3, 3), Matrix::Random(3, 3), Vector::Random(3),
                                  RowVector::Random(3));
    auto p = dir.file("cmodel.json");
    save_model(csys, p, 0.05);
    auto loaded = load_model(p);
    REQUIRE(std::holds_alternative<ContinuousBilinearSystem>(loaded.system));
    REQUIRE(loaded.dt.has_value());
    CHECK(*loaded.dt == 0.05);
    const auto& back = std::get<ContinuousBilinearSystem>(loaded.system);
    CHECK((back.A - csys.A).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("network serialization preserves predictions bitwise") {
    TempDir dir;
    NarxModel model;
    model.n_u = 2;
    model.n_y = 2;
    model.layers.push_back({Matrix::Random(8, 4), Vector::Random(8)});
    model.layers.push_back({Matrix::Random(1, 8), Vector::Random(1)});
    model.trend = TrendStats{0.1, 2.0, -3.0, 4.0};
    auto p = dir.file("narx.json");
    save_narx(model, p);
    auto back = load_narx(p);
    CHECK(back.n_u == 2);
    CHECK(back.n_y == 2);
    CHECK(back.trend.y_std == 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        Vector x = Vector::Random(4);
        CHECK(back.predict(x) == model.predict(x));
    }
}

TEST_CASE("experiment batch serialization") {
    TempDir dir;
    auto sys = toy_system();
    Simulator src = [&](const Vector& u) { return simulate_discrete(sys, u); };
    auto batch = generate_experiments(src, 8, 4, GaussianExcitation{0.0, 1.0}, 42);
    BatchMetadata meta{42, "gaussian", 0.0, 1.0};
    auto p = dir.file("batch.txt");
    save_batch(batch, meta, p);
    auto [back, meta2] = load_batch(p);
    CHECK((back.inputs - batch.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.outputs - batch.outputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(meta2.seed == 42);
    CHECK(meta2.excitation == "gaussian");
    CHECK(meta2.stddev == 1.0);
}

TEST_CASE("spectrum emission is two normalized columns") {
    TempDir dir;
    Vector sv(3);
    sv << 4.0, 2.0, 1.0;
    auto p = dir.file("spec.txt");
    write_spectrum(p, sv);
    std::ifstream in(p);
    int idx;
    double ratio;
    REQUIRE((in >> idx >> ratio));
    CHECK(idx == 1);
    CHECK(ratio == 1.0);
    REQUIRE((in >> idx >> ratio));
    CHECK(idx == 2);
    CHECK(ratio == 0.5);
}

TEST_CASE("trace emission carries named columns") {
    TempDir dir;
    Vector a(2), b(2);
    a << 1, 2;
    b << 3, 4;
    auto p = dir.file("trace.csv");
    write_trace(p, {"u", "y"}, {a, b});
    std::ifstream in(p);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "u,y");
    std::getline(in, row);
    CHECK(row == "1,3");
}

TEST_CASE("decimal formatting round trips arbitrary doubles") {
    for (double v : {1.0 / 3.0, 0.1, 1e-300, -1.2345678901234567e17, 5.2501e-17, 0.0}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("dataset validation") {
    Dataset ds;
    ds.u = Vector::Ones(3);
    ds.y = Vector::Ones(2);
    CHECK_THROWS_AS(ds.validate(), data_error);
    ds.y = Vector::Ones(3);
    ds.y(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ds.validate(), data_error);
}
