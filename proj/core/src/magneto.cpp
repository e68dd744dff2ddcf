#include "zplkit/magneto.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "zplkit/errors.hpp"
#include "zplkit/peakfit.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

namespace {

const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);

}  // namespace

void validate(const MagnetoParams& m) {
  if (!(m.gamma_B0 > 0.0)) throw DomainError("MagnetoParams: gamma_B0 must be > 0");
  if (!(m.eps_eff >= 0.0)) throw DomainError("MagnetoParams: eps_eff must be >= 0");
  if (!(m.sigma_G >= 0.0) || !(m.sigma_L >= 0.0) || (m.sigma_G == 0.0 && m.sigma_L == 0.0)) {
    throw DomainError("MagnetoParams: need sigma_G, sigma_L >= 0, not both zero");
  }
}

MagnetoParams make_magneto_params(double gamma_B0, double eps_eff, double lorentz_fraction) {
  if (!(gamma_B0 > 0.0)) throw DomainError("make_magneto_params: gamma_B0 must be > 0");
  if (!(lorentz_fraction >= 0.0 && lorentz_fraction < 1.0)) {
    throw DomainError("make_magneto_params: lorentz_fraction must be in [0, 1)");
  }
  // Invert the Olivero-Longbothum relation for the Gaussian FWHM.
  const double fl = lorentz_fraction * gamma_B0;
  const double a = gamma_B0 - 0.5346 * fl;
  const double fg = std::sqrt(std::max(a * a - 0.2166 * fl * fl, 0.0));
  MagnetoParams m;
  m.gamma_B0 = gamma_B0;
  m.eps_eff = eps_eff;
  m.sigma_G = fg / kFwhmPerSigma;
  m.sigma_L = fl;
  validate(m);
  return m;
}

std::string_view to_string(BranchMode m) {
  switch (m) {
    case BranchMode::single: return "single";
    case BranchMode::symmetric: return "symmetric";
    case BranchMode::gaussian_ensemble: return "gaussian-ensemble";
  }
  return "?";
}

BranchMode parse_branch_mode(std::string_view s) {
  if (s == "single") return BranchMode::single;
  if (s == "symmetric") return BranchMode::symmetric;
  if (s == "gaussian-ensemble") return BranchMode::gaussian_ensemble;
  throw DomainError("unknown branch mode '" + std::string(s) + "'");
}

void validate(const ZeemanTerms& z) {
  // g_h = 0 describes a single-spin transition.
  if (!(z.g_e >= 0.0) || !(z.g_h >= 0.0) || (z.g_e == 0.0 && z.g_h == 0.0)) {
    throw DomainError("ZeemanTerms: g-factors must be >= 0 and not both zero");
  }
  if ((z.sign_e != 1 && z.sign_e != -1) || (z.sign_h != 1 && z.sign_h != -1)) {
    throw DomainError("ZeemanTerms: signs must be +1 or -1");
  }
  if (!std::isfinite(z.chi)) throw DomainError("ZeemanTerms: chi must be finite");
}

double zeeman_shift(const ZeemanTerms& z, double Bz) {
  validate(z);
  return (z.sign_e * z.g_e + z.sign_h * z.g_h) * PhysConstants::mu_B * Bz + z.chi * Bz * Bz;
}

double broadened_linewidth(double gamma_B0, double eps_eff, double Bz) {
  if (!(gamma_B0 > 0.0)) throw DomainError("broadened_linewidth: gamma_B0 must be > 0");
  if (!(eps_eff >= 0.0)) throw DomainError("broadened_linewidth: eps_eff must be >= 0");
  return std::hypot(gamma_B0, eps_eff * std::abs(Bz));
}

double magneto_profile(const MagnetoParams& m, double Bz, double detuning, BranchMode mode) {
  const double fg = m.sigma_G * kFwhmPerSigma;
  const double shift = m.eps_eff * std::abs(Bz);
  switch (mode) {
    case BranchMode::single:
      return voigt_profile(detuning - shift, fg, m.sigma_L);
    case BranchMode::symmetric:
      return 0.5 * (voigt_profile(detuning - shift, fg, m.sigma_L) +
                    voigt_profile(detuning + shift, fg, m.sigma_L));
    case BranchMode::gaussian_ensemble:
      // A Gaussian spread of shifts convolves into the Gaussian component.
      return voigt_profile(detuning, std::hypot(fg, shift), m.sigma_L);
  }
  return 0.0;
}

std::vector<double> eval_magneto_profile(const MagnetoParams& m, double Bz,
                                         std::span<const double> detuning, BranchMode mode) {
  validate(m);
  std::vector<double> out;
  out.reserve(detuning.size());
  for (double x : detuning) out.push_back(magneto_profile(m, Bz, x, mode));
  return out;
}

ZeemanFit fit_zeeman_broadening(std::span<const Sample> points, const FitOptions& options) {
  if (points.size() < 2) throw FitError("insufficient data: fit_zeeman_broadening needs >= 2 points");
  double bmin = std::abs(points.front().x), bmax = bmin, gmax = 0.0;
  bool weighted = true;
  for (const auto& s : points) {
    if (!std::isfinite(s.x) || !(s.y > 0.0)) {
      throw DomainError("fit_zeeman_broadening: need finite fields and linewidths > 0");
    }
    bmin = std::min(bmin, std::abs(s.x));
    bmax = std::max(bmax, std::abs(s.x));
    gmax = std::max(gmax, s.y);
    weighted = weighted && s.sigma > 0.0;
  }
  if (bmax == bmin) throw FitError("insufficient data: all linewidths measured at one field");

  // Widths are normalised by the largest one so the fit is scale-equivariant.
  const std::size_t n = points.size();
  std::vector<double> B(n), G(n);
  Vector w = weighted ? Vector(static_cast<Eigen::Index>(n)) : Vector{};
  for (std::size_t i = 0; i < n; ++i) {
    B[i] = std::abs(points[i].x);
    G[i] = points[i].y / gmax;
    if (weighted) w[static_cast<Eigen::Index>(i)] = std::pow(gmax / points[i].sigma, 2);
  }

  // Start from the straight line Gamma^2 = g0^2 + eps^2 B^2.
  double Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = B[i] * B[i], y = G[i] * G[i];
    Sx += x;
    Sy += y;
    Sxx += x * x;
    Sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double slope = (dn * Sxy - Sx * Sy) / (dn * Sxx - Sx * Sx);
  const double icpt = (Sy - slope * Sx) / dn;
  const double g0 = icpt > 0.0 ? std::sqrt(icpt) : *std::min_element(G.begin(), G.end());
  const double e0 = slope > 0.0 ? std::sqrt(slope) : 0.0;

  ParameterSet ps;
  ps.add("gamma_B0", g0, 1e-12, ParameterSet::inf);
  ps.add("eps_eff", e0, 0.0, ParameterSet::inf);
  auto residual = [&](std::span<const double> q) {
    Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) r[static_cast<Eigen::Index>(i)] = std::hypot(q[0], q[1] * B[i]) - G[i];
    return r;
  };
  auto fit = fit_parameters(ps, residual, w, options);
  ZeemanFit out;
  out.gamma_B0 = fit.values[0] * gmax;
  out.eps_eff = fit.values[1] * gmax;
  out.gamma_B0_sigma = fit.sigmas[0] * gmax;
  out.eps_eff_sigma = fit.sigmas[1] * gmax;
  out.report = std::move(fit.report);
  out.report.params *= gmax;
  out.report.covariance *= gmax * gmax;
  out.report.residual_norm *= weighted ? 1.0 : gmax;
  for (double& c : out.report.cost_history) c *= weighted ? 1.0 : gmax * gmax;
  return out;
}

double esr_g_factor(double freq_hz, double B_res_T) {
  if (!(freq_hz > 0.0) || !(B_res_T > 0.0)) {
    throw DomainError("esr_g_factor: frequency and field must be > 0");
  }
  return PhysConstants::h * freq_hz / (PhysConstants::mu_B * B_res_T);
}

void EsrSpectrum::validate() const {
  if (field_T.size() != signal.size()) throw DomainError("EsrSpectrum: length mismatch");
  if (field_T.size() < 3) throw DomainError("EsrSpectrum: need at least 3 samples");
  for (std::size_t i = 1; i < field_T.size(); ++i) {
    if (!(field_T[i] > field_T[i - 1])) throw DomainError("EsrSpectrum: field axis not increasing");
  }
  for (double v : signal) {
    if (!std::isfinite(v)) throw DomainError("EsrSpectrum: non-finite signal");
  }
  if (!(freq_hz > 0.0)) throw DomainError("EsrSpectrum: frequency must be > 0");
}

double esr_model(double B, double B_res, double gauss_width, double lorentz_width, double amplitude,
                 double offset) {
  return amplitude * voigt_profile_derivative(B - B_res, gauss_width, lorentz_width) + offset;
}

EsrFit fit_esr_line(const EsrSpectrum& s, const EsrFitOptions& options) {
  s.validate();
  const auto& B = s.field_T;
  const auto& y = s.signal;
  const std::size_t n = B.size();

  std::vector<double> sorted(y);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
  const double base = sorted[n / 2];
  const double noise = robust_noise(y);
  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  const double thr = options.detection_threshold * noise;
  if (!(y[imax] - base > thr) || !(base - y[imin] > thr) || imax == imin) {
    throw FitError("no derivative feature found: lobes below detection threshold");
  }
  const std::size_t a = std::min(imax, imin), b = std::max(imax, imin);
  std::size_t cross = n;
  for (std::size_t i = a; i < b; ++i) {
    if ((y[i] - base) * (y[i + 1] - base) <= 0.0) {
      cross = i;
      break;
    }
  }
  if (cross == n) throw FitError("no derivative zero crossing found between the lobes");

  // Work in units of the peak-to-peak separation about the crossing field.
  // The report therefore holds normalised coordinates; EsrFit carries physical ones.
  const double y0 = y[cross] - base, y1 = y[cross + 1] - base;
  const double bc = y0 == y1 ? B[cross] : B[cross] + (B[cross + 1] - B[cross]) * y0 / (y0 - y1);
  const double dpp = std::abs(B[imax] - B[imin]);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (B[i] - bc) / dpp;
  const double yscale = y[imax] - y[imin];
  std::vector<double> yn(n);
  for (std::size_t i = 0; i < n; ++i) yn[i] = y[i] / yscale;

  // A Lorentzian derivative has dpp = FWHM / sqrt(3); a Gaussian one dpp = sigma * 2.
  double fl0 = options.fit_gaussian ? 0.6 * std::sqrt(3.0) : std::sqrt(3.0);
  double fg0 = options.fit_gaussian ? 0.6 * kFwhmPerSigma / 2.0 : 0.0;

  // Amplitude and offset enter linearly; solve them for the starting shape.
  double amp0 = 0.0, off0 = 0.0;
  {
    double S = 0, Sf = 0, Sff = 0, Sy = 0, Sfy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = voigt_profile_derivative(x[i], fg0, fl0);
      S += 1;
      Sf += f;
      Sff += f * f;
      Sy += yn[i];
      Sfy += f * yn[i];
    }
    amp0 = (S * Sfy - Sf * Sy) / (S * Sff - Sf * Sf);
    off0 = (Sy - amp0 * Sf) / S;
  }

  auto residual = [&](std::span<const double> q) {
    Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      r[static_cast<Eigen::Index>(i)] = esr_model(x[i], q[0], q[1], q[2], q[3], q[4]) - yn[i];
    }
    return r;
  };
  auto run = [&](const std::array<double, 5>& start, bool gauss_free) {
    ParameterSet ps;
    ps.add("dB", start[0], x.front(), x.back());
    ps.add("gauss", start[1], 0.0, ParameterSet::inf, !gauss_free);
    ps.add("lorentz", start[2], 1e-9, ParameterSet::inf);
    ps.add("amp", start[3]);
    ps.add("offset", start[4]);
    return fit_parameters(ps, residual, Vector{}, options.solver);
  };
  auto fit = run({0.0, fg0, fl0, amp0, off0}, options.fit_gaussian);
  // The model is flat in the Gaussian width at zero, so a near-Lorentzian line
  // creeps towards that boundary. Compare against the boundary solution itself.
  if (options.fit_gaussian && fit.values[1] < 0.1 * fit.values[2]) {
    auto edge = run({fit.values[0], 0.0, fit.values[2], fit.values[3], fit.values[4]}, false);
    if (edge.report.status == FitStatus::converged &&
        edge.report.residual_norm <= fit.report.residual_norm) {
      fit = std::move(edge);
    }
  }

  EsrFit out;
  out.B_res = bc + fit.values[0] * dpp;
  out.gauss_width = fit.values[1] * dpp;
  out.lorentz_width = fit.values[2] * dpp;
  out.amplitude = fit.values[3] * yscale * dpp * dpp;
  out.offset = fit.values[4] * yscale;
  out.B_res_sigma = fit.sigmas[0] * dpp;
  out.gauss_width_sigma = fit.sigmas[1] * dpp;
  out.lorentz_width_sigma = fit.sigmas[2] * dpp;
  out.g = esr_g_factor(s.freq_hz, out.B_res);
  out.g_sigma = out.g * out.B_res_sigma / out.B_res;
  out.report = std::move(fit.report);
  out.report.residual_norm *= yscale;
  for (double& c : out.report.cost_history) c *= yscale * yscale;
  return out;
}

}  // namespace zplkit
