#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "coxflux/decay.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/point_process.hpp"
#include "coxflux/queue_maps.hpp"
#include "coxflux/rate_functions.hpp"
#include "coxflux/test_functions.hpp"

using namespace coxflux;

namespace {

const IntensityModel kMixture = IntensityModel::finite_mixture({1.0, 3.0}, {0.5, 0.5});
const ServiceDistribution kHyper = ServiceDistribution::hyperexponential({0.3, 0.7}, {0.5, 3.0});

void BM_StationarySample(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Truncation tr = choose_truncation(kHyper, n, kMixture.max_rate(), 0.0, 1e-6);
    std::uint64_t r = 0;
    for (auto _ : state) {
        Rng rng(1, r++);
        benchmark::DoNotOptimize(sample_stationary(kMixture, n, {0, 2}, kHyper, tr, rng));
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_StationarySample)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

void BM_OccupancyPath(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(2);
    const auto pts = sample_stationary(kMixture, n, {0, 2}, kHyper, 1e-6, rng);
    for (auto _ : state) benchmark::DoNotOptimize(occupancy_path(pts, {0, 2}));
    state.SetComplexityN(static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_OccupancyPath)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

void BM_KrDistance(benchmark::State& state) {
    const auto bins = static_cast<std::size_t>(state.range(0));
    const auto a = IntervalMeasure::from_density(0, 1, [](double t) { return 1 + std::sin(6 * t); }, bins);
    const auto b = IntervalMeasure::from_density(0, 1, [](double t) { return 1 + t * t; }, bins);
    for (auto _ : state) benchmark::DoNotOptimize(kr_distance(a, b));
    state.SetComplexityN(static_cast<std::int64_t>(bins));
}
BENCHMARK(BM_KrDistance)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_OccupancyRate(benchmark::State& state) {
    ContractionGrid grid;
    grid.ns = static_cast<int>(state.range(0));
    grid.nx = grid.ns / 4;
    const auto F = ServiceDistribution::exponential(1.0);
    const auto nu = IntervalMeasure::uniform(0, 1, 1.5, 32);
    const auto tests = hat_family(0, 1, 8);
    for (auto _ : state)
        benchmark::DoNotOptimize(queue_occupancy_rate(nu, IntensityModel::deterministic(1.0), F, grid, tests));
}
BENCHMARK(BM_OccupancyRate)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_QueueTailReplication(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    QueueTailExperiment exp(IntensityModel::deterministic(1.0), ServiceDistribution::exponential(1.0), 2.0, 1e-6, true);
    const std::vector<int> grid{n};
    exp.prepare(grid);
    Rng rng(3);
    for (auto _ : state) benchmark::DoNotOptimize(exp.replicate(n, rng));
}
BENCHMARK(BM_QueueTailReplication)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
