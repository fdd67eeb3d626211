// Serial reference kernels vs their OpenMP counterparts.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "polylearn/ensembles.hpp"
#include "polylearn/learner.hpp"
#include "polylearn/observation.hpp"

using namespace polylearn;

namespace {

PolymatrixGame bench_game(int p) { return random_game(RandomGameSpec{p, 2, 3, 1.4142135623730951, 7}); }

void BM_EnumerateSerial(benchmark::State& state) {
    const PolymatrixGame g = bench_game(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::enumerate_eps_ne(g, 0.1));
}

void BM_EnumerateParallel(benchmark::State& state) {
    const PolymatrixGame g = bench_game(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_eps_ne(g, 0.1));
}

const HardEnsemble& hard() {
    static const HardEnsemble e = hard_ensemble(HardEnsembleSpec{8, 3, 3, std::nullopt, std::nullopt, 5});
    return e;
}

void BM_SampleSerial(benchmark::State& state) {
    const ObservationModel model(hard().game, NoiseModel::local_uniform(8, 0.7));
    for (auto _ : state) benchmark::DoNotOptimize(model.sample_serial(static_cast<std::size_t>(state.range(0)), 3));
}

void BM_SampleParallel(benchmark::State& state) {
    const ObservationModel model(hard().game, NoiseModel::local_uniform(8, 0.7));
    for (auto _ : state) benchmark::DoNotOptimize(model.sample(static_cast<std::size_t>(state.range(0)), 3));
}

WeightedProfiles fit_data() {
    const ObservationModel model(hard().game, NoiseModel::local_uniform(8, 0.7));
    return WeightedProfiles::from_dataset(model.sample(20000, 4));
}

LearnerConfig fit_config() {
    LearnerConfig c;
    c.lambda = 0.02;
    return c;
}

void BM_FitSerial(benchmark::State& state) {
    const WeightedProfiles data = fit_data();
    for (auto _ : state) benchmark::DoNotOptimize(serial::fit_game(data, fit_config()));
}

void BM_FitParallel(benchmark::State& state) {
    const WeightedProfiles data = fit_data();
    for (auto _ : state) benchmark::DoNotOptimize(fit_game(data, fit_config()));
}

}  // namespace

BENCHMARK(BM_EnumerateSerial)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumerateParallel)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleParallel)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
