#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "rappx/fit.hpp"
#include "rappx/rapp.hpp"
#include "rappx/signals.hpp"
#include "rappx/surface.hpp"

namespace {

using namespace rappx;

void BM_ApplyToFrame(benchmark::State& state) {
  const Frame frame = generate_ofdm(OfdmConfig{});
  const RappParams prm{2.0, 1.6, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(apply_to_frame(prm, frame));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(frame.size()));
}
BENCHMARK(BM_ApplyToFrame)->Unit(benchmark::kMillisecond);

void BM_GenerateOfdm(benchmark::State& state) {
  OfdmConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_ofdm(cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_GenerateOfdm)->Unit(benchmark::kMillisecond);

void BM_FitRappPoint(benchmark::State& state) {
  const auto truth = synth_2534_truth();
  const OperatingPoint op{3.6, 1.5};
  const auto rec = simulate_measurement(truth, op, generate_ofdm(OfdmConfig{}), -50.0, 0, 0.0, 3);
  const auto pts = amam_points(rec);
  for (auto _ : state) benchmark::DoNotOptimize(fit_rapp_point(pts));
}
BENCHMARK(BM_FitRappPoint)->Unit(benchmark::kMillisecond);

void BM_FitSurfaceLinear(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> y(-1.0, 1.0);
  std::vector<SurfaceSample> samples;
  for (double v : zx60_2534_vsup_grid())
    for (double f : zx60_2534_freq_grid()) samples.push_back({{v, f}, y(rng)});
  const auto basis = full_basis(static_cast<unsigned>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_surface_linear(samples, basis));
}
BENCHMARK(BM_FitSurfaceLinear)->Arg(2)->Arg(3)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
