// Microbenchmarks for the raster hot paths.
#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "fieldbabel/kmeans.hpp"
#include "fieldbabel/raster_ops.hpp"
#include "fieldbabel/speckle.hpp"

using namespace fieldbabel;

namespace {

GridGeometry square_grid(int n) {
    GridGeometry g;
    g.width = n;
    g.height = n;
    g.origin_x = 500000;
    g.origin_y = 6100000;
    g.crs = 32632;
    return g;
}

Raster speckled(int n, std::uint64_t seed) {
    Raster r(square_grid(n), 0.0f);
    std::mt19937_64 rng(seed);
    std::exponential_distribution<float> speckle(1.0f);
    for (auto& v : r.values) v = 0.1f * speckle(rng);
    return r;
}

Polygon disk(Point c, double radius, int vertices) {
    Polygon p;
    for (int i = 0; i < vertices; ++i) {
        const double a = 2 * M_PI * i / vertices;
        p.exterior.push_back({c.x + radius * std::cos(a), c.y + radius * std::sin(a)});
    }
    p.exterior.push_back(p.exterior.front());
    return p;
}

void BM_LeeSigma(benchmark::State& state) {
    const auto in = speckled(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(lee_sigma_filter(in, {}, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.values.size()));
}
BENCHMARK(BM_LeeSigma)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = square_grid(n);
    const auto poly = disk(g.pixel_center(n / 2, n / 2), n * 4.0, 256);
    for (auto _ : state) benchmark::DoNotOptimize(rasterize_polygon(poly, g));
}
BENCHMARK(BM_Rasterize)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_Erode(benchmark::State& state) {
    const int n = 512;
    const auto g = square_grid(n);
    const auto mask = rasterize_polygon(disk(g.pixel_center(n / 2, n / 2), n * 4.0, 256), g);
    const double radius = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(erode_disk(mask, radius));
}
BENCHMARK(BM_Erode)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto r = speckled(n, 7);
    const Mask all(r.geometry, true);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_cluster(r, all, 3, 0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.values.size()));
}
BENCHMARK(BM_KMeans)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
