#include "zplkit/peakfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "zplkit/errors.hpp"
#include "zplkit/faddeeva.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

namespace {

const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);
constexpr double kMinWidth = 1e-12;

std::size_t params_per_peak(PeakShape s) { return s == PeakShape::voigt ? 4 : 3; }

// Unpacks a flat parameter vector: per peak [center offset, width(s)..., area],
// then optionally [c0, c1] of the centred baseline.
PeakModel unpack_peak(const PeakModel& ref, const double* p) {
  PeakModel m = ref;
  m.center = ref.center + p[0];
  switch (ref.shape) {
    case PeakShape::gaussian:
      m.fwhm_g = p[1];
      m.fwhm_l = 0.0;
      m.area = p[2];
      break;
    case PeakShape::lorentzian:
      m.fwhm_g = 0.0;
      m.fwhm_l = p[1];
      m.area = p[2];
      break;
    case PeakShape::voigt:
      m.fwhm_g = p[1];
      m.fwhm_l = p[2];
      m.area = p[3];
      break;
  }
  return m;
}

}  // namespace

std::string_view to_string(PeakShape s) {
  switch (s) {
    case PeakShape::gaussian: return "gaussian";
    case PeakShape::lorentzian: return "lorentzian";
    case PeakShape::voigt: return "voigt";
  }
  return "gaussian";
}

PeakShape parse_peak_shape(std::string_view s) {
  if (s == "gaussian") return PeakShape::gaussian;
  if (s == "lorentzian") return PeakShape::lorentzian;
  if (s == "voigt") return PeakShape::voigt;
  throw DomainError("unknown peak shape: " + std::string(s));
}

void validate(const PeakModel& p) {
  if (!std::isfinite(p.center) || !std::isfinite(p.area) || !std::isfinite(p.fwhm_g) ||
      !std::isfinite(p.fwhm_l)) {
    throw DomainError("PeakModel: non-finite field");
  }
  if (p.area < 0.0) throw DomainError("PeakModel: area must be non-negative");
  switch (p.shape) {
    case PeakShape::gaussian:
      if (!(p.fwhm_g > 0.0) || p.fwhm_l != 0.0)
        throw DomainError("PeakModel: gaussian needs fwhm_g > 0 and fwhm_l = 0");
      break;
    case PeakShape::lorentzian:
      if (!(p.fwhm_l > 0.0) || p.fwhm_g != 0.0)
        throw DomainError("PeakModel: lorentzian needs fwhm_l > 0 and fwhm_g = 0");
      break;
    case PeakShape::voigt:
      if (p.fwhm_g < 0.0 || p.fwhm_l < 0.0 || (p.fwhm_g == 0.0 && p.fwhm_l == 0.0))
        throw DomainError("PeakModel: voigt widths must be >= 0 and not both zero");
      break;
  }
}

PeakModel gaussian_peak(double center, double fwhm, double area) {
  PeakModel p{PeakShape::gaussian, center, fwhm, 0.0, area};
  validate(p);
  return p;
}

PeakModel lorentzian_peak(double center, double fwhm, double area) {
  PeakModel p{PeakShape::lorentzian, center, 0.0, fwhm, area};
  validate(p);
  return p;
}

PeakModel voigt_peak(double center, double fwhm_g, double fwhm_l, double area) {
  PeakModel p{PeakShape::voigt, center, fwhm_g, fwhm_l, area};
  validate(p);
  return p;
}

double gaussian_profile(double x, double fwhm_g) {
  const double sigma = fwhm_g / kFwhmPerSigma;
  const double u = x / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double lorentzian_profile(double x, double fwhm_l) {
  const double g = 0.5 * fwhm_l;
  return g / (std::numbers::pi * (x * x + g * g));
}

double voigt_profile(double x, double fwhm_g, double fwhm_l) {
  if (fwhm_l <= 0.0) return gaussian_profile(x, fwhm_g);
  if (fwhm_g <= 0.0) return lorentzian_profile(x, fwhm_l);
  const double sigma = fwhm_g / kFwhmPerSigma;
  const double s2 = sigma * std::numbers::sqrt2;
  const std::complex<double> z(x / s2, 0.5 * fwhm_l / s2);
  return faddeeva_w(z).real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double voigt_profile_derivative(double x, double fwhm_g, double fwhm_l) {
  if (fwhm_l <= 0.0) {
    const double sigma = fwhm_g / kFwhmPerSigma;
    return -x / (sigma * sigma) * gaussian_profile(x, fwhm_g);
  }
  if (fwhm_g <= 0.0) {
    const double g = 0.5 * fwhm_l;
    const double d = x * x + g * g;
    return -2.0 * g * x / (std::numbers::pi * d * d);
  }
  const double sigma = fwhm_g / kFwhmPerSigma;
  const double s2 = sigma * std::numbers::sqrt2;
  const std::complex<double> z(x / s2, 0.5 * fwhm_l / s2);
  return faddeeva_w_derivative(z).real() / (s2 * sigma * std::sqrt(2.0 * std::numbers::pi));
}

double eval_profile(const PeakModel& p, double energy) {
  const double x = energy - p.center;
  switch (p.shape) {
    case PeakShape::gaussian: return p.area * gaussian_profile(x, p.fwhm_g);
    case PeakShape::lorentzian: return p.area * lorentzian_profile(x, p.fwhm_l);
    case PeakShape::voigt: return p.area * voigt_profile(x, p.fwhm_g, p.fwhm_l);
  }
  return 0.0;
}

double voigt_fwhm(double fwhm_g, double fwhm_l) {
  if (fwhm_g < 0.0 || fwhm_l < 0.0 || (fwhm_g == 0.0 && fwhm_l == 0.0)) {
    throw DomainError("voigt_fwhm: widths must be >= 0 and not both zero");
  }
  return 0.5346 * fwhm_l + std::sqrt(0.2166 * fwhm_l * fwhm_l + fwhm_g * fwhm_g);
}

double peak_fwhm(const PeakModel& p) {
  switch (p.shape) {
    case PeakShape::gaussian: return p.fwhm_g;
    case PeakShape::lorentzian: return p.fwhm_l;
    case PeakShape::voigt: return voigt_fwhm(p.fwhm_g, p.fwhm_l);
  }
  return 0.0;
}

double fwhm_ev_to_nm(double center_ev, double fwhm_ev) {
  return ev_to_nm(center_ev - 0.5 * fwhm_ev) - ev_to_nm(center_ev + 0.5 * fwhm_ev);
}

double PeakFitResult::operator()(double e) const {
  double y = baseline(e);
  for (const auto& p : peaks) y += eval_profile(p.value, e);
  return y;
}

double PeakFitResult::total_area() const {
  double a = 0.0;
  for (const auto& p : peaks) a += p.value.area;
  return a;
}

PeakFitResult fit_peaks(const Spectrum& s, std::span<const PeakModel> init, bool baseline,
                        const FitOptions& options) {
  if (init.empty()) throw FitError("fit_peaks: at least one initial peak required");
  std::size_t inside = 0;
  for (const auto& p : init) {
    validate(p);
    if (p.center >= s.lo() && p.center <= s.hi()) ++inside;
  }
  if (inside == 0) throw FitError("fit_peaks: no initial peak inside the spectrum window");

  const double e_ref = 0.5 * (s.lo() + s.hi());
  std::vector<double> p0, lo, hi;
  std::vector<std::size_t> offset;
  for (const auto& p : init) {
    offset.push_back(p0.size());
    const double c = std::clamp(p.center, s.lo(), s.hi());
    p0.push_back(c - p.center);
    lo.push_back(s.lo() - p.center);
    hi.push_back(s.hi() - p.center);
    if (p.shape != PeakShape::lorentzian) {
      p0.push_back(std::max(p.fwhm_g, kMinWidth));
      lo.push_back(kMinWidth);
      hi.push_back(ParameterSet::inf);
    }
    if (p.shape != PeakShape::gaussian) {
      p0.push_back(std::max(p.fwhm_l, kMinWidth));
      lo.push_back(kMinWidth);
      hi.push_back(ParameterSet::inf);
    }
    p0.push_back(p.area);
    lo.push_back(0.0);
    hi.push_back(ParameterSet::inf);
  }
  const std::size_t base_at = p0.size();
  if (baseline) {
    auto y = s.intensity();
    p0.push_back(std::min(y.front(), y.back()));
    p0.push_back(0.0);
    lo.insert(lo.end(), 2, -ParameterSet::inf);
    hi.insert(hi.end(), 2, ParameterSet::inf);
  }

  auto energy = s.energy();
  auto intensity = s.intensity();
  const std::vector<PeakModel> ref(init.begin(), init.end());
  auto model_at = [&](const Vector& p, double e) {
    double y = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      y += eval_profile(unpack_peak(ref[k], p.data() + offset[k]), e);
    }
    if (baseline) y += p[static_cast<Eigen::Index>(base_at)] + p[static_cast<Eigen::Index>(base_at) + 1] * (e - e_ref);
    return y;
  };

  FitProblem prob;
  prob.initial = Eigen::Map<const Vector>(p0.data(), static_cast<Eigen::Index>(p0.size()));
  prob.lower = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  prob.upper = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  prob.options = options;
  prob.residuals = [&](const Vector& p) {
    Vector r(static_cast<Eigen::Index>(energy.size()));
    for (std::size_t i = 0; i < energy.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = model_at(p, energy[i]) - intensity[i];
    return r;
  };

  PeakFitResult out;
  out.report = solve_lsq(prob);
  const Vector& p = out.report.params;
  const Matrix& C = out.report.covariance;
  const Vector u = out.report.uncertainties();

  for (std::size_t k = 0; k < ref.size(); ++k) {
    const auto o = static_cast<Eigen::Index>(offset[k]);
    FittedPeak fp;
    fp.value = unpack_peak(ref[k], p.data() + o);
    fp.sigma.shape = ref[k].shape;
    fp.sigma.center = u[o];
    const auto np = static_cast<Eigen::Index>(params_per_peak(ref[k].shape));
    fp.sigma.area = u[o + np - 1];
    // Gradient of the total FWHM with respect to this peak's width parameters.
    std::vector<std::pair<Eigen::Index, double>> grad;
    switch (ref[k].shape) {
      case PeakShape::gaussian:
        fp.sigma.fwhm_g = u[o + 1];
        grad.emplace_back(o + 1, 1.0);
        break;
      case PeakShape::lorentzian:
        fp.sigma.fwhm_l = u[o + 1];
        grad.emplace_back(o + 1, 1.0);
        break;
      case PeakShape::voigt: {
        fp.sigma.fwhm_g = u[o + 1];
        fp.sigma.fwhm_l = u[o + 2];
        const double G = fp.value.fwhm_g, L = fp.value.fwhm_l;
        const double root = std::sqrt(0.2166 * L * L + G * G);
        grad.emplace_back(o + 1, root > 0.0 ? G / root : 0.0);
        grad.emplace_back(o + 2, 0.5346 + (root > 0.0 ? 0.2166 * L / root : 0.0));
        break;
      }
    }
    double var = 0.0;
    for (auto [i, gi] : grad)
      for (auto [j, gj] : grad) var += gi * gj * C(i, j);
    fp.fwhm_ev = peak_fwhm(fp.value);
    fp.fwhm_ev_sigma = std::sqrt(std::max(var, 0.0));
    fp.center_nm = ev_to_nm(fp.value.center);
    fp.fwhm_nm = fwhm_ev_to_nm(fp.value.center, fp.fwhm_ev);
    fp.fwhm_nm_sigma = fp.fwhm_ev > 0.0 ? fp.fwhm_nm * fp.fwhm_ev_sigma / fp.fwhm_ev : 0.0;
    out.peaks.push_back(fp);
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const FittedPeak& a, const FittedPeak& b) { return a.value.center < b.value.center; });

  if (baseline) {
    const auto b = static_cast<Eigen::Index>(base_at);
    out.baseline.enabled = true;
    out.baseline.c1 = p[b + 1];
    out.baseline.c0 = p[b] - p[b + 1] * e_ref;
    out.baseline.c1_sigma = u[b + 1];
    const double v0 = C(b, b) + e_ref * e_ref * C(b + 1, b + 1) - 2.0 * e_ref * C(b, b + 1);
    out.baseline.c0_sigma = std::sqrt(std::max(v0, 0.0));
  }
  return out;
}

double robust_noise(std::span<const double> y) {
  if (y.size() < 3) return 0.0;
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
  auto median = [](std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  const double med = median(d);
  for (auto& v : d) v = std::abs(v - med);
  // Differences of iid noise have variance 2 sigma^2.
  return 1.4826 * median(d) / std::numbers::sqrt2;
}

std::vector<PeakModel> seed_peaks(const Spectrum& s, PeakShape shape, double prominence_factor) {
  auto e = s.energy();
  auto y = s.intensity();
  const std::size_t n = y.size();
  const double noise = robust_noise(y);
  const double threshold = prominence_factor * noise;
  std::vector<PeakModel> seeds;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Topographic prominence: descend on each side until a higher sample.
    double left_min = y[i], right_min = y[i];
    std::size_t l = i;
    while (l > 0 && y[l - 1] <= y[i]) left_min = std::min(left_min, y[--l]);
    std::size_t r = i;
    while (r + 1 < n && y[r + 1] <= y[i]) right_min = std::min(right_min, y[++r]);
    const double base = std::max(left_min, right_min);
    const double prominence = y[i] - base;
    if (!(prominence >= threshold) || prominence <= 0.0) continue;
    const double half = base + 0.5 * prominence;
    std::size_t a = i, b = i;
    while (a > 0 && y[a] > half) --a;
    while (b + 1 < n && y[b] > half) ++b;
    double fwhm = std::max(e[b] - e[a], e[std::min(i + 1, n - 1)] - e[i - 1]);
    const double height = prominence;
    PeakModel p;
    p.shape = shape;
    p.center = e[i];
    switch (shape) {
      case PeakShape::gaussian:
        p.fwhm_g = fwhm;
        p.area = height * fwhm * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
        break;
      case PeakShape::lorentzian:
        p.fwhm_l = fwhm;
        p.area = height * fwhm * std::numbers::pi / 2.0;
        break;
      case PeakShape::voigt:
        p.fwhm_g = fwhm / std::sqrt(2.0);
        p.fwhm_l = fwhm / 2.0;
        p.area = height * fwhm * 1.2;
        break;
    }
    seeds.push_back(p);
  }
  return seeds;
}

double debye_waller(double zpl_area, double total_area) {
  if (!(zpl_area > 0.0) || !(zpl_area <= total_area)) {
    throw DomainError("debye_waller: requires 0 < zpl_area <= total_area");
  }
  return zpl_area / total_area;
}

}  // namespace zplkit
