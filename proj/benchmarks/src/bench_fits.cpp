#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "zplkit/peakfit.hpp"
#include "zplkit/synth/generate.hpp"
#include "zplkit/thermo.hpp"
#include "zplkit/trpl.hpp"
#include "zplkit/units.hpp"

using namespace zplkit;

namespace {

Spectrum doublet(int n) {
  synth::GeneratorSpec g;
  g.model = "spectrum";
  g.params["c0"] = 100.0;
  g.peaks = {voigt_peak(0.94430, 1.5e-4, 0.5e-4, 2.0), voigt_peak(0.94486, 1.5e-4, 0.5e-4, 1.0)};
  for (int i = 0; i < n; ++i) g.grid.push_back(0.9430 + 0.003 * i / (n - 1));
  g.noise = synth::NoiseModel::gaussian;
  g.noise_sigma = 20.0;
  g.seed = 5;
  return std::get<Spectrum>(synth::generate(g));
}

DecayHistogram trace(const RateModelParams& p, int n_bins) {
  synth::GeneratorSpec g;
  g.model = "trpl";
  for (const auto& name : rate_param_names()) {
    if (name != "bkg") g.params[name] = get_rate_param(p, name);
  }
  g.params["bkg"] = 10.0;
  g.params["bin_width_ns"] = 1.0;
  g.params["n_bins"] = n_bins;
  g.noise = synth::NoiseModel::poisson;
  g.seed = 6;
  return std::get<DecayHistogram>(synth::generate(g));
}

}  // namespace

static void BM_FitVoigtDoublet(benchmark::State& state) {
  const auto s = doublet(static_cast<int>(state.range(0)));
  const std::vector<PeakModel> init = {voigt_peak(0.94425, 2e-4, 1e-4, 1.5),
                                       voigt_peak(0.94490, 2e-4, 1e-4, 1.5)};
  for (auto _ : state) benchmark::DoNotOptimize(fit_peaks(s, init));
}
BENCHMARK(BM_FitVoigtDoublet)->Arg(301)->Arg(2001)->Unit(benchmark::kMillisecond);

static void BM_FitPassler(benchmark::State& state) {
  synth::GeneratorSpec g;
  g.model = "passler";
  g.params = {{"E0", nm_to_ev(1325.1)}, {"alpha", 295e-6}, {"p", 2.36}};
  g.grid = {4.5, 10, 15, 20, 25, 30, 35, 40};
  g.noise = synth::NoiseModel::gaussian;
  g.noise_sigma = 5e-6;
  g.seed = 1;
  const auto pts = std::get<synth::PointSeries>(synth::generate(g)).points;
  for (auto _ : state) benchmark::DoNotOptimize(fit_passler(pts));
}
BENCHMARK(BM_FitPassler)->Unit(benchmark::kMicrosecond);

static void BM_FitTrplRate(benchmark::State& state) {
  RateModelParams truth;
  truth.scale = 2e4;
  const auto h = trace(truth, static_cast<int>(state.range(0)));
  RateModelParams init = truth;
  init.tau0 = 1300.0;
  init.tau_f = 14.0;
  init.tau_ex = 250.0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_trpl_rate(h, init, {"N0", "n0_init", "nex_init"}));
}
BENCHMARK(BM_FitTrplRate)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
