#include <benchmark/benchmark.h>

#include "bcle/exact.hpp"
#include "bcle/lattice.hpp"
#include "bcle/lcft.hpp"
#include "bcle/sle.hpp"

using namespace bcle;

static void one_arm_exponent(benchmark::State& st) {
  const auto c = exact::ColoredCleParams::make(24.0 / 5, 1.0 / 3);
  for (auto _ : st) benchmark::DoNotOptimize(exact::one_arm_exponent(c));
}
BENCHMARK(one_arm_exponent);

static void log_double_gamma(benchmark::State& st) {
  const auto c = lcft::LcftContext::make(1.6);
  double x = 0.3;
  for (auto _ : st) {
    benchmark::DoNotOptimize(lcft::log_double_gamma(c, lcft::cplx(x, 0.7)));
    x = x < 3 ? x + 0.01 : 0.3;  // defeat any caching
  }
}
BENCHMARK(log_double_gamma);

static void sample_bcle_loop(benchmark::State& st) {
  const auto p = sle::BcleParams::make(double(st.range(0)) / 10, -double(st.range(1)) / 10);
  std::uint64_t seed = 0;
  long steps = 0;
  for (auto _ : st) steps += sle::sample_bcle_loop(p, sle::SimConfig{}, seed++).steps;
  st.counters["steps"] = benchmark::Counter(double(steps), benchmark::Counter::kAvgIterations);
}
// (kappa, -rho) in tenths
BENCHMARK(sample_bcle_loop)->Args({30, 15})->Args({60, 5})->Unit(benchmark::kMillisecond);

static void sw_sweep(benchmark::State& st) {
  const auto c = lattice::LatticeConfig::make(int(st.range(0)), 2, 0.5);
  auto s = lattice::SpinField::uniform(lattice::Grid::box(c));
  lattice::FkBonds b;
  Rng rng = make_stream(1, 0);
  for (int i = 0; i < 20; ++i) lattice::sw_sweep(s, b, c, rng);
  for (auto _ : st) lattice::sw_sweep(s, b, c, rng);
  st.SetItemsProcessed(st.iterations() * s.grid.size());
}
BENCHMARK(sw_sweep)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void arm_profiles(benchmark::State& st) {
  const auto c = lattice::LatticeConfig::make(int(st.range(0)), 2, 0.5);
  const auto f = lattice::fuzzy_sample(c, 50, 3);
  for (auto _ : st) benchmark::DoNotOptimize(lattice::arm_profiles(f, c.L / 2));
}
BENCHMARK(arm_profiles)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
