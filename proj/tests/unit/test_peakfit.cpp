#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "zplkit/errors.hpp"
#include "zplkit/faddeeva.hpp"
#include "zplkit/peakfit.hpp"
#include "zplkit/synth/generate.hpp"
#include "zplkit/synth/oracles.hpp"
#include "zplkit/units.hpp"

using namespace zplkit;

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

double integrate(const PeakModel& p, double half_span, int n = 400001) {
  const double lo = p.center - half_span, h = 2.0 * half_span / (n - 1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    s += w * eval_profile(p, lo + i * h);
  }
  return s * h;
}

Spectrum make_spectrum(const std::vector<PeakModel>& peaks, double lo, double hi, int n,
                       double noise_sigma, std::uint64_t seed, double baseline = 0.0) {
  synth::GeneratorSpec g;
  g.model = "spectrum";
  g.params["c0"] = baseline;
  g.peaks = peaks;
  for (int i = 0; i < n; ++i) g.grid.push_back(lo + (hi - lo) * i / (n - 1));
  g.noise = noise_sigma > 0 ? synth::NoiseModel::gaussian : synth::NoiseModel::none;
  g.noise_sigma = noise_sigma;
  g.seed = seed;
  return std::get<Spectrum>(synth::generate(g));
}

}  // namespace

TEST(Faddeeva, KnownValues) {
  // w(0) = 1, w(i) = exp(1) erfc(1), w(x) = exp(-x^2) + 2i Dawson(x)/sqrt(pi) on the real axis.
  EXPECT_NEAR(std::abs(faddeeva_w({0.0, 0.0}) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(faddeeva_w({0.0, 1.0}).real(), std::exp(1.0) * std::erfc(1.0), 1e-10);
  const double x = 1.5;
  EXPECT_NEAR(faddeeva_w({x, 0.0}).real(), std::exp(-x * x), 1e-10);
  // Dawson F(1.5) = 0.428249071085398...
  EXPECT_NEAR(faddeeva_w({x, 0.0}).imag(), 2.0 / kSqrtPi * 0.42824907108539867, 1e-9);
  // Reference value for w(1 + i) = 0.30474420525691259 + 0.20821893820283162i.
  const auto w = faddeeva_w({1.0, 1.0});
  EXPECT_NEAR(w.real(), 0.30474420525691259, 1e-9);
  EXPECT_NEAR(w.imag(), 0.20821893820283162, 1e-9);
}

TEST(Faddeeva, PurelyImaginaryAxisMatchesErfcx) {
  for (double y = 0.01; y < 20.0; y *= 1.3) {
    const double ref = std::exp(y * y) * std::erfc(y);
    if (y < 5.0) EXPECT_NEAR(faddeeva_w({0.0, y}).real() / ref, 1.0, 1e-8) << y;
  }
}

TEST(Faddeeva, DerivativeMatchesFiniteDifference) {
  for (const std::complex<double> z : {std::complex<double>{0.3, 0.2}, {2.0, 0.5}, {-1.0, 3.0}}) {
    const double h = 1e-6;
    const auto fd = (faddeeva_w(z + h) - faddeeva_w(z - h)) / (2.0 * h);
    EXPECT_NEAR(std::abs(faddeeva_w_derivative(z) - fd), 0.0, 1e-7);
  }
}

TEST(Profiles, GaussianPeakValue) {
  const double sigma = 150e-6;
  const auto p = gaussian_peak(0.944, kFwhmPerSigma * sigma, 1.0);
  EXPECT_NEAR(eval_profile(p, 0.944) * sigma * std::sqrt(2.0 * std::numbers::pi), 1.0, 1e-12);
}

TEST(Profiles, LorentzianHalfWidth) {
  const double G = 80e-6;
  const auto p = lorentzian_peak(0.935, G, 1.0);
  const double peak = eval_profile(p, 0.935);
  EXPECT_NEAR(eval_profile(p, 0.935 + G / 2) / peak, 0.5, 1e-12);
  EXPECT_NEAR(eval_profile(p, 0.935 - G / 2) / peak, 0.5, 1e-12);
}

TEST(Profiles, SymmetricNonNegativeAndPeakedAtCenter) {
  for (const auto& p : {gaussian_peak(1.0, 1e-3, 2.0), lorentzian_peak(1.0, 1e-3, 2.0),
                        voigt_peak(1.0, 1e-3, 5e-4, 2.0)}) {
    const double c = eval_profile(p, 1.0);
    for (double d = 1e-5; d < 2e-2; d *= 1.7) {
      EXPECT_NEAR(eval_profile(p, 1.0 + d), eval_profile(p, 1.0 - d), 1e-10 * c);
      EXPECT_GE(eval_profile(p, 1.0 + d), 0.0);
      EXPECT_LT(eval_profile(p, 1.0 + d), c);
    }
  }
}

TEST(Profiles, VoigtMatchesNumericConvolution) {
  const double G = 300e-6, L = 100e-6;
  const double ref = synth::voigt_convolution_oracle(0.0, G, L);
  EXPECT_NEAR(voigt_profile(0.0, G, L) / ref, 1.0, 1e-4);
  for (double x : {-5e-4, 1e-4, 2.5e-4, 1e-3}) {
    EXPECT_NEAR(voigt_profile(x, G, L) / synth::voigt_convolution_oracle(x, G, L), 1.0, 1e-4) << x;
  }
}

TEST(Profiles, VoigtDerivativeMatchesFiniteDifference) {
  const double G = 2e-4, L = 3e-4;
  for (double x : {-4e-4, -1e-4, 0.0, 2e-4, 7e-4}) {
    const double h = 1e-9;
    const double fd = (voigt_profile(x + h, G, L) - voigt_profile(x - h, G, L)) / (2 * h);
    EXPECT_NEAR(voigt_profile_derivative(x, G, L), fd, 1e-5 * std::abs(voigt_profile(0.0, G, L) / G));
  }
}

TEST(Profiles, AreaInvarianceAllShapes) {
  // Lorentzian wings beyond +-50 FWHM hold 2/(100 pi) of the area; integrate wider for it.
  EXPECT_NEAR(integrate(gaussian_peak(0.94, 2e-4, 3.0), 50 * 2e-4) / 3.0, 1.0, 1e-4);
  EXPECT_NEAR(integrate(lorentzian_peak(0.94, 2e-4, 3.0), 5000 * 2e-4, 2000001) / 3.0, 1.0, 1e-4);
  EXPECT_NEAR(integrate(voigt_peak(0.94, 2e-4, 1e-4, 3.0), 5000 * 2e-4, 2000001) / 3.0, 1.0, 1e-4);
}

TEST(VoigtFwhm, Limits) {
  EXPECT_DOUBLE_EQ(voigt_fwhm(2e-4, 0.0), 2e-4);
  // 0.5346 + sqrt(0.2166) = 1.0000030...; the formula is exact only to its stated accuracy.
  EXPECT_NEAR(voigt_fwhm(0.0, 2e-4) / 2e-4, 1.0, 1e-5);
  EXPECT_THROW(voigt_fwhm(0.0, 0.0), DomainError);
}

TEST(VoigtFwhm, MatchesHalfMaximumOfConvolution) {
  const double G = 229e-6, L = 229e-6;
  const double w = synth::half_max_width(
      [&](double x) { return synth::voigt_convolution_oracle(x, G, L); }, -2e-3, 2e-3);
  EXPECT_NEAR(voigt_fwhm(G, L) / w, 1.0, 1e-3);
}

TEST(FwhmConversion, ExactInterval) {
  const double E = nm_to_ev(1325.1), dE = 0.4e-3;
  EXPECT_NEAR(fwhm_ev_to_nm(E, dE), ev_to_nm(E - dE / 2) - ev_to_nm(E + dE / 2), 1e-12);
}

TEST(FitPeaks, SingleNoiselessGaussianExactStart) {
  const auto truth = gaussian_peak(0.9351, 4e-4, 2.0);
  const auto s = make_spectrum({truth}, 0.933, 0.937, 201, 0.0, 0);
  const auto r = fit_peaks(s, std::vector<PeakModel>{truth}, false);
  EXPECT_EQ(r.report.status, FitStatus::converged);
  EXPECT_NEAR(r.report.residual_norm, 0.0, 1e-9);
}

TEST(FitPeaks, CuDoubletAtSnr50) {
  const double E0 = 0.94429, E1 = 0.94485;
  const auto a = gaussian_peak(E0, 375e-6, 2.0), b = gaussian_peak(E1, 470e-6, 1.0);
  const double peak = eval_profile(a, E0) + eval_profile(b, E0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = make_spectrum({a, b}, 0.9425, 0.9466, 411, peak / 50.0, seed);
    std::vector<PeakModel> init = {gaussian_peak(E0 + 40e-6, 400e-6, 1.5),
                                   gaussian_peak(E1 - 40e-6, 400e-6, 1.5)};
    const auto r = fit_peaks(s, init, true);
    ASSERT_EQ(r.report.status, FitStatus::converged) << seed;
    ASSERT_EQ(r.peaks.size(), 2u);
    EXPECT_NEAR(r.peaks[0].value.center, E0, 10e-6);
    EXPECT_NEAR(r.peaks[1].value.center, E1, 10e-6);
    EXPECT_NEAR((r.peaks[1].value.center - r.peaks[0].value.center) / mev, 0.56, 0.02);
  }
}

TEST(FitPeaks, OverlappingPairConservesTotalArea) {
  const double fw = 400e-6;
  const auto a = gaussian_peak(0.9400, fw, 1.0), b = gaussian_peak(0.9400 + 0.2 * fw, fw, 0.7);
  const auto s = make_spectrum({a, b}, 0.938, 0.942, 201, 0.0, 0);
  std::vector<PeakModel> init = {gaussian_peak(0.93995, 0.9 * fw, 0.5),
                                 gaussian_peak(0.94012, 1.1 * fw, 1.1)};
  const auto r = fit_peaks(s, init, false);
  EXPECT_NEAR(r.total_area() / 1.7, 1.0, 0.01);
}

TEST(FitPeaks, SelfConsistencyWithinTenPercent) {
  const std::vector<PeakModel> truth = {voigt_peak(0.9350, 3e-4, 1e-4, 1.0),
                                        gaussian_peak(0.9368, 4e-4, 0.6)};
  auto s0 = make_spectrum(truth, 0.933, 0.939, 601, 0.0, 0);
  // Add the affine baseline to the generated data.
  std::vector<double> e(s0.energy().begin(), s0.energy().end()), y(s0.intensity().begin(), s0.intensity().end());
  for (std::size_t i = 0; i < e.size(); ++i) y[i] += 50.0 + 1000.0 * (e[i] - 0.935);
  const Spectrum s(e, y);
  std::vector<PeakModel> init = {voigt_peak(0.93502, 3.3e-4, 0.9e-4, 1.1), gaussian_peak(0.93678, 3.6e-4, 0.66)};
  const auto r = fit_peaks(s, init, true);
  ASSERT_EQ(r.report.status, FitStatus::converged);
  EXPECT_NEAR(r.peaks[0].value.center / 0.9350, 1.0, 1e-4);
  EXPECT_NEAR(r.peaks[0].value.fwhm_g / 3e-4, 1.0, 1e-4);
  EXPECT_NEAR(r.peaks[0].value.fwhm_l / 1e-4, 1.0, 1e-4);
  EXPECT_NEAR(r.peaks[0].value.area, 1.0, 1e-4);
  EXPECT_NEAR(r.peaks[1].value.fwhm_g / 4e-4, 1.0, 1e-4);
  EXPECT_NEAR(r.peaks[1].value.area / 0.6, 1.0, 1e-4);
  EXPECT_NEAR(r.baseline.c1 / 1000.0, 1.0, 1e-4);
  EXPECT_NEAR(r.baseline.c0 / (50.0 - 935.0), 1.0, 1e-4);
}

TEST(FitPeaks, UncertaintiesShrinkWithNoise) {
  const auto truth = gaussian_peak(0.94, 4e-4, 1.0);
  const double peak = eval_profile(truth, 0.94);
  const auto lo_snr = make_spectrum({truth}, 0.938, 0.942, 201, peak / 10.0, 3);
  const auto hi_snr = make_spectrum({truth}, 0.938, 0.942, 201, peak / 100.0, 3);
  const std::vector<PeakModel> init = {truth};
  const auto a = fit_peaks(lo_snr, init, true), b = fit_peaks(hi_snr, init, true);
  EXPECT_LT(b.peaks[0].sigma.center, a.peaks[0].sigma.center);
  EXPECT_LT(b.peaks[0].sigma.fwhm_g, a.peaks[0].sigma.fwhm_g);
  EXPECT_LT(b.peaks[0].sigma.area, a.peaks[0].sigma.area);
}

TEST(FitPeaks, ReportsBothUnitsAndSortsByCenter) {
  const auto a = gaussian_peak(0.9370, 4e-4, 1.0), b = gaussian_peak(0.9350, 4e-4, 1.0);
  const auto s = make_spectrum({a, b}, 0.933, 0.939, 301, 0.0, 0);
  const auto r = fit_peaks(s, std::vector<PeakModel>{a, b}, false);
  EXPECT_LT(r.peaks[0].value.center, r.peaks[1].value.center);
  EXPECT_NEAR(r.peaks[0].center_nm, ev_to_nm(0.9350), 1e-6);
  EXPECT_NEAR(r.peaks[0].fwhm_nm, fwhm_ev_to_nm(0.9350, 4e-4), 1e-6);
}

TEST(FitPeaks, RejectsPeaksOutsideWindow) {
  const auto s = make_spectrum({gaussian_peak(0.94, 4e-4, 1.0)}, 0.938, 0.942, 51, 0.0, 0);
  EXPECT_THROW(fit_peaks(s, std::vector<PeakModel>{gaussian_peak(1.2, 4e-4, 1.0)}), FitError);
  EXPECT_THROW(fit_peaks(s, std::vector<PeakModel>{}), FitError);
}

TEST(SeedPeaks, FindsProminentPeaksOnly) {
  const auto s = make_spectrum({gaussian_peak(0.9350, 3e-4, 1.0), gaussian_peak(0.9375, 3e-4, 0.5)},
                               0.933, 0.940, 701, 20.0, 11, 200.0);
  const auto seeds = seed_peaks(s, PeakShape::gaussian);
  ASSERT_EQ(seeds.size(), 2u);
  EXPECT_NEAR(seeds[0].center, 0.9350, 5e-5);
  EXPECT_NEAR(seeds[1].center, 0.9375, 5e-5);
}

TEST(DebyeWaller, Examples) {
  EXPECT_DOUBLE_EQ(debye_waller(2.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(debye_waller(1.0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(debye_waller(0.23, 1.0), 0.23);
  EXPECT_THROW(debye_waller(0.0, 1.0), DomainError);
  EXPECT_THROW(debye_waller(2.0, 1.0), DomainError);
}
