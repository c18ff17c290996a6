#include <benchmark/benchmark.h>

#include <bilin/bilin.hpp>

#include <random>

using namespace bilin;

namespace {

Vector gaussian(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

void BM_simulate(benchmark::State& state) {
    auto sys = random_stable_system(state.range(0), 1);
    Vector u = gaussian(1000, 2);
    for (auto _ : state) {
        Vector y = simulate_discrete(sys, u);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_simulate)->Arg(2)->Arg(20)->Arg(100);

void BM_lift_input(benchmark::State& state) {
    Vector u = gaussian(state.range(0), 3);
    for (auto _ : state) {
        auto lifted = lift_input(u);
        benchmark::DoNotOptimize(lifted.data.data());
    }
}
BENCHMARK(BM_lift_input)->Arg(6)->Arg(10)->Arg(14);

void BM_recover_markov(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    auto sys = random_stable_system(4, 4);
    Simulator sim = [&sys](const Vector& u) { return simulate_discrete(sys, u); };
    auto batch = generate_experiments(sim, default_experiment_count(L), L,
                                      GaussianExcitation{0.0, 1.0}, 5);
    for (auto _ : state) {
        auto rec = recover_markov(batch);
        benchmark::DoNotOptimize(rec.markov.flat.data());
    }
}
BENCHMARK(BM_recover_markov)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_build_hankel(benchmark::State& state) {
    const int depth = static_cast<int>(state.range(0));
    auto W = markov_oracle(random_stable_system(4, 6), depth);
    const int p = depth / 2;
    for (auto _ : state) {
        auto hs = build_hankel(W, p, depth - p);
        benchmark::DoNotOptimize(hs.H.data());
    }
}
BENCHMARK(BM_build_hankel)->Arg(6)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

void BM_realize(benchmark::State& state) {
    const int depth = static_cast<int>(state.range(0));
    auto W = markov_oracle(random_stable_system(4, 7), depth);
    auto hs = build_hankel(W, depth / 2, depth - depth / 2);
    for (auto _ : state) {
        auto rr = realize(hs, 4);
        benchmark::DoNotOptimize(rr.system.A.data());
    }
}
BENCHMARK(BM_realize)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_narx_predict(benchmark::State& state) {
    NarxModel model;
    model.n_u = 20;
    model.n_y = 20;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 0.1);
    auto layer = [&](Eigen::Index rows, Eigen::Index cols) {
        NarxModel::Layer l;
        l.W.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) l.W(i, j) = g(rng);
        l.b = Vector::Zero(rows);
        return l;
    };
    model.layers.push_back(layer(16, 40));
    model.layers.push_back(layer(16, 16));
    model.layers.push_back(layer(1, 16));
    Vector u = gaussian(256, 9);
    for (auto _ : state) {
        Vector y = narx_simulate(model, u, NarxHistory::zero(model), NarxMode::closed_loop);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_narx_predict);

}  // namespace

BENCHMARK_MAIN();
