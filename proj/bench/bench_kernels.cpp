// Serial reference kernels against their OpenMP counterparts.

#include <cmath>
#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "qam/analysis.hpp"
#include "qam/parallel.hpp"
#include "qam/variational.hpp"
#include "qam/velocity.hpp"

namespace {

using namespace qam;

const GridSpec kGrid = build_grid(-8, 8, 801, 1e-3);
const FunctionVelocityField kGround([](double x, double) { return VelocityPair{0.0, -x}; }, -8, 8, true);

std::vector<double> ground_density() {
  std::vector<double> rho(kGrid.n_points);
  for (std::size_t i = 0; i < kGrid.n_points; ++i) rho[i] = std::exp(-kGrid.x(i) * kGrid.x(i)) / std::sqrt(std::numbers::pi);
  return rho;
}

SdeConfig config(std::size_t n_paths, double t_end, std::size_t record_every) {
  SdeConfig c;
  c.n_paths = n_paths;
  c.t_end = t_end;
  c.dt_sde = 1e-3;
  c.record_every = record_every;
  c.seed = 1;
  return c;
}

const TrajectoryEnsemble& ensemble() {
  static const TrajectoryEnsemble e = sample_forward(kGround, {}, config(512, 40.0, 20), kGrid, ground_density());
  return e;
}

void threads_from(const benchmark::State& state) { set_threads(static_cast<int>(state.range(0))); }

void BM_sampler_serial(benchmark::State& state) {
  const auto x0 = sample_initial_positions(kGrid, ground_density(), 2000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::sample_from_positions(kGround, {}, config(2000, 1.0, 10), x0));
}

void BM_sampler_parallel(benchmark::State& state) {
  threads_from(state);
  const auto x0 = sample_initial_positions(kGrid, ground_density(), 2000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_from_positions(kGround, {}, config(2000, 1.0, 10), x0));
}

void BM_action_serial(benchmark::State& state) {
  ActionFunctionalSpec spec;
  spec.horizon = 40.0;
  const Potential v = Potential::harmonic(1, 1);
  ensemble();
  for (auto _ : state) benchmark::DoNotOptimize(reference::action_per_path(ensemble(), kGround, {}, v, spec));
}

void BM_action_parallel(benchmark::State& state) {
  threads_from(state);
  ActionFunctionalSpec spec;
  spec.horizon = 40.0;
  const Potential v = Potential::harmonic(1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(action_per_path(ensemble(), kGround, {}, v, spec));
}

void BM_autocorrelation_direct(benchmark::State& state) {
  ensemble();
  for (auto _ : state) benchmark::DoNotOptimize(reference::autocorrelation(ensemble(), 10.0, Centering::global));
}

void BM_autocorrelation_fft(benchmark::State& state) {
  threads_from(state);
  for (auto _ : state) benchmark::DoNotOptimize(autocorrelation(ensemble(), 10.0, Centering::global));
}

void BM_psd_direct(benchmark::State& state) {
  ensemble();
  for (auto _ : state) benchmark::DoNotOptimize(reference::power_spectral_density(ensemble(), 256, 128));
}

void BM_psd_fft(benchmark::State& state) {
  threads_from(state);
  for (auto _ : state) benchmark::DoNotOptimize(power_spectral_density(ensemble(), 256, 128));
}

}  // namespace

BENCHMARK(BM_sampler_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sampler_parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_action_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_action_parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_autocorrelation_direct)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_autocorrelation_fft)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_psd_direct)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_psd_fft)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
