#include <benchmark/benchmark.h>

#include "canopy/ensemble.hpp"
#include "canopy/losses.hpp"
#include "canopy/matching.hpp"
#include "canopy/propagation.hpp"

using namespace canopy;

namespace {

uint64_t splitmix(uint64_t& s) {
    uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double u01(uint64_t& s) { return static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53; }

Raster random_heatmap(int side, uint64_t seed) {
    const WorldTransform grid{0.0, side * 0.2, 0.2, side, side};
    std::vector<Point> pts;
    uint64_t s = seed;
    const int n = side * side / 40000; // sparse canopy
    for (int i = 0; i < std::max(4, n); ++i)
        pts.push_back({u01(s) * side * 0.18 + 1.0, u01(s) * side * 0.18 + 1.0});
    return losses::render_target(pts, grid, {1.0, 3.0});
}

} // namespace

static void BM_RenderTarget(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const WorldTransform grid{0.0, side * 0.2, 0.2, side, side};
    std::vector<Point> pts;
    uint64_t s = 7;
    for (int i = 0; i < 64; ++i)
        pts.push_back({u01(s) * side * 0.18 + 1.0, u01(s) * side * 0.18 + 1.0});
    for (auto _ : state) {
        auto r = losses::render_target(pts, grid, {1.0, 3.0});
        benchmark::DoNotOptimize(r.values.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(side) * side);
}
BENCHMARK(BM_RenderTarget)->Arg(512)->Arg(2000);

static void BM_ExtractPeaks(benchmark::State& state) {
    const Raster heat = random_heatmap(static_cast<int>(state.range(0)), 11);
    const ensemble::PeakConfig cfg;
    for (auto _ : state) {
        auto dets = ensemble::extract_peaks(heat, cfg);
        benchmark::DoNotOptimize(dets.data());
    }
    state.SetItemsProcessed(state.iterations() * heat.values.size());
}
BENCHMARK(BM_ExtractPeaks)->Arg(512)->Arg(2000);

static void BM_AverageRasters(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    std::vector<Raster> stack;
    for (int k = 0; k < 9; ++k) stack.push_back(random_heatmap(side, 100 + k));
    for (auto _ : state) {
        auto mean = ensemble::average_rasters(stack);
        benchmark::DoNotOptimize(mean.values.data());
    }
}
BENCHMARK(BM_AverageRasters)->Arg(512)->Arg(1024);

static void BM_SolveAssignment(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    uint64_t s = 3;
    std::vector<Detection> dets(n);
    std::vector<std::pair<std::string, Point>> trees;
    for (int i = 0; i < n; ++i) {
        dets[i].det_id = "d" + std::to_string(i);
        dets[i].position = {u01(s) * 50, u01(s) * 50};
        dets[i].confidence = 0.5;
        trees.emplace_back("t" + std::to_string(i), Point{u01(s) * 50, u01(s) * 50});
    }
    const auto cost = matching::build_cost_matrix(dets, trees, 4.0);
    for (auto _ : state) {
        auto r = matching::solve_assignment_indices(cost);
        benchmark::DoNotOptimize(r.pairs.data());
    }
}
BENCHMARK(BM_SolveAssignment)->Arg(16)->Arg(64)->Arg(256);

static void BM_Diffuse(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    propagation::EmbeddingTable t;
    t.dim = 16;
    uint64_t s = 29;
    for (int i = 0; i < n; ++i) {
        t.ids.push_back("p" + std::to_string(i));
        t.labels.push_back(i % 10 == 0 ? "s" + std::to_string(i % 3) : "");
        for (int d = 0; d < t.dim; ++d)
            t.vectors.push_back(static_cast<float>(u01(s) + (d == 0 ? 1.0 : 0.0)));
    }
    t.normalize_and_validate();
    propagation::PropagationConfig cfg;
    cfg.k = 10;
    cfg.cg_max_iter = 500;
    const auto g = propagation::build_graph(t, cfg);
    for (auto _ : state) {
        auto z = propagation::diffuse(g, t.labels, cfg);
        benchmark::DoNotOptimize(z.scores.data());
    }
}
BENCHMARK(BM_Diffuse)->Arg(200)->Arg(1000);

BENCHMARK_MAIN();
