#include <benchmark/benchmark.h>

#include <vector>

#include "zplkit/faddeeva.hpp"
#include "zplkit/magneto.hpp"
#include "zplkit/peakfit.hpp"
#include "zplkit/trpl.hpp"

using namespace zplkit;

static void BM_Faddeeva(benchmark::State& state) {
  std::complex<double> z{0.3, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(faddeeva_w(z));
    z += std::complex<double>{1e-7, 0.0};
  }
}
BENCHMARK(BM_Faddeeva);

static void BM_VoigtProfile(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = -2e-3 + 4e-3 * i / (n - 1);
  for (auto _ : state) {
    double s = 0.0;
    for (double v : x) s += voigt_profile(v, 2e-4, 1e-4);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_VoigtProfile)->Arg(1024)->Arg(16384);

static void BM_MagnetoProfile(benchmark::State& state) {
  const auto m = make_magneto_params(229e-6, 364e-6, 0.3);
  const auto mode = static_cast<BranchMode>(state.range(0));
  std::vector<double> x(2048);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -2e-3 + 4e-3 * i / (x.size() - 1);
  for (auto _ : state) benchmark::DoNotOptimize(eval_magneto_profile(m, 0.5, x, mode));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_MagnetoProfile)->Arg(0)->Arg(1)->Arg(2);

static void BM_RateEquations(benchmark::State& state) {
  RateModelParams p;
  std::vector<double> t(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.4 * static_cast<double>(i);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_rate_eqs(p, t));
}
BENCHMARK(BM_RateEquations)->Arg(1000)->Arg(4096)->Unit(benchmark::kMicrosecond);
