#include "zplkit/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zplkit/errors.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

namespace {

constexpr double kB = PhysConstants::k_B;

Vector sample_sigmas_weights(std::span<const Sample> pts) {
  std::vector<double> s;
  s.reserve(pts.size());
  for (const auto& p : pts) s.push_back(p.sigma);
  return sigma_weights(s);
}

// Weighted straight-line fit y = a + b x. Returns {a, b, residual SSE}.
struct Line {
  double a, b, sse;
};

Line weighted_line(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    S += w[i];
    Sx += w[i] * x[i];
    Sy += w[i] * y[i];
    Sxx += w[i] * x[i] * x[i];
    Sxy += w[i] * x[i] * y[i];
  }
  const double D = S * Sxx - Sx * Sx;
  Line l{};
  l.b = (S * Sxy - Sx * Sy) / D;
  l.a = (Sy - l.b * Sx) / S;
  l.sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - l.a - l.b * x[i];
    l.sse += w[i] * r * r;
  }
  return l;
}

double passler_shape(double T, double theta, double p, PasslerForm form) {
  if (T <= 0.0) return 0.0;
  const double x = std::pow(2.0 * T / theta, p);
  if (form == PasslerForm::low_temperature) return theta / (2.0 * p) * x;
  return 0.5 * theta * (std::pow(1.0 + x, 1.0 / p) - 1.0);
}

}  // namespace

void validate(const PasslerParams& p) {
  if (!(p.alpha > 0.0) || !(p.theta > 0.0) || !(p.p >= 1.0) || !std::isfinite(p.E0)) {
    throw DomainError("PasslerParams: need alpha > 0, theta > 0, p >= 1");
  }
}

double passler_coefficient(const PasslerParams& p) {
  return p.alpha * p.theta / (2.0 * p.p) * std::pow(2.0 / p.theta, p.p);
}

double passler_energy(const PasslerParams& p, double T, PasslerForm form) {
  if (T < 0.0) throw DomainError("passler_energy: T must be >= 0");
  return p.E0 - p.alpha * passler_shape(T, p.theta, p.p, form);
}

double passler_energy_polynomial(double E0, double A, double p, double T) {
  if (T < 0.0) throw DomainError("passler_energy_polynomial: T must be >= 0");
  return E0 - A * std::pow(T, p);
}

PasslerFit fit_passler(std::span<const Sample> points, double theta_fixed, PasslerForm form,
                       const PasslerParams* init, const FitOptions& options) {
  if (points.size() < 4) {
    throw FitError("insufficient data: fit_passler needs at least 4 points, got " +
                   std::to_string(points.size()));
  }
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  for (const auto& s : points) {
    if (!(s.x >= 0.0)) throw DomainError("fit_passler: temperatures must be >= 0");
    tmin = std::min(tmin, s.x);
    tmax = std::max(tmax, s.x);
  }
  if (tmax - tmin < 20.0) {
    throw FitError("insufficient data: fit_passler needs a temperature span of at least 20 K");
  }
  if (!(theta_fixed > 0.0)) throw DomainError("fit_passler: theta must be > 0");
  const Vector weights = sample_sigmas_weights(points);

  std::vector<double> T, E, w;
  for (std::size_t i = 0; i < points.size(); ++i) {
    T.push_back(points[i].x);
    E.push_back(points[i].y);
    w.push_back(weights.size() ? weights[static_cast<Eigen::Index>(i)] : 1.0);
  }

  // For fixed p the model is linear in (E0, alpha); profile over p for a start.
  PasslerParams start;
  start.theta = theta_fixed;
  if (init) {
    start = *init;
    start.theta = theta_fixed;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (double p = 1.0; p <= 4.0 + 1e-12; p += 0.05) {
      std::vector<double> g(T.size());
      for (std::size_t i = 0; i < T.size(); ++i) g[i] = -passler_shape(T[i], theta_fixed, p, form);
      const Line l = weighted_line(g, E, w);
      if (l.sse < best && l.b > 0.0) {
        best = l.sse;
        start.E0 = l.a;
        start.alpha = l.b;
        start.p = p;
      }
    }
    if (!std::isfinite(best)) {
      start.E0 = E.front();
      start.alpha = 1e-4;
      start.p = 2.0;
    }
  }

  // E0 is refined as an offset from its starting value so the finite-difference
  // step scales with the curvature of the data rather than the absolute energy.
  const double e_ref = start.E0;
  ParameterSet ps;
  ps.add("dE0", 0.0);
  ps.add("alpha", std::max(start.alpha, 1e-12), 1e-12, ParameterSet::inf);
  ps.add("p", std::max(start.p, 1.0), 1.0, 20.0);
  auto residual = [&](std::span<const double> q) {
    Vector r(static_cast<Eigen::Index>(T.size()));
    for (std::size_t i = 0; i < T.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] =
          (e_ref + q[0]) - q[1] * passler_shape(T[i], theta_fixed, q[2], form) - E[i];
    }
    return r;
  };
  auto fit = fit_parameters(ps, residual, weights, options);
  PasslerFit out;
  out.value = {e_ref + fit.values[0], fit.values[1], theta_fixed, fit.values[2]};
  out.sigma = {fit.sigmas[0], fit.sigmas[1], 0.0, fit.sigmas[2]};
  out.report = std::move(fit.report);
  out.report.params[0] += e_ref;
  return out;
}

void validate(const QuenchParams& q) {
  if (!(q.I0 > 0.0) || !(q.A >= 0.0) || !(q.B >= 0.0) || !(q.E1 > 0.0) || !(q.E2 > q.E1)) {
    throw DomainError("QuenchParams: need I0 > 0, A, B >= 0, 0 < E1 < E2");
  }
}

double quench_intensity(const QuenchParams& q, double T) {
  if (!(T > 0.0)) throw DomainError("quench_intensity: T must be > 0");
  const double kt = kB * T;
  return q.I0 / (1.0 + q.A * std::exp(-q.E1 / kt) + q.B * std::pow(T, 1.5) * std::exp(-q.E2 / kt));
}

QuenchFit fit_quench(std::span<const Sample> points, double E1_fixed, double E2, bool e2_free,
                     const QuenchParams* init, const FitOptions& options) {
  if (points.size() < 5) {
    throw FitError("insufficient data: fit_quench needs at least 5 points, got " +
                   std::to_string(points.size()));
  }
  if (!(E1_fixed > 0.0)) throw DomainError("fit_quench: E1 must be > 0");
  if (!e2_free && !(E2 > E1_fixed)) throw DomainError("fit_quench: fixed E2 must exceed E1");
  for (const auto& s : points) {
    if (!(s.x > 0.0) || !(s.y > 0.0)) throw DomainError("fit_quench: need T > 0 and I > 0");
  }
  const Vector weights = sample_sigmas_weights(points);

  // For a given E2, 1/I = c0 + c1 e1(T) + c2 T^1.5 e2(T) is linear in (c0, c1, c2).
  auto linear_start = [&](double e2, double& sse) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(points.size()), 3);
    Vector y(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double T = points[i].x, kt = kB * T;
      // Relative-error weighting on 1/I matches constant relative noise on I.
      const double s = points[i].y;
      X(k, 0) = s;
      X(k, 1) = s * std::exp(-E1_fixed / kt);
      X(k, 2) = s * std::pow(T, 1.5) * std::exp(-e2 / kt);
      y[k] = 1.0;
    }
    Vector coef = X.colPivHouseholderQr().solve(y);
    sse = (X * coef - y).squaredNorm();
    QuenchParams q{};
    const double c0 = coef[0] > 0.0 ? coef[0] : 1.0 / points.front().y;
    q.I0 = 1.0 / c0;
    q.A = std::max(coef[1] / c0, 0.0);
    q.B = std::max(coef[2] / c0, 0.0);
    q.E1 = E1_fixed;
    q.E2 = e2;
    return q;
  };

  QuenchParams start{};
  if (init) {
    start = *init;
    start.E1 = E1_fixed;
    if (!e2_free) start.E2 = E2;
  } else if (e2_free && !(E2 > E1_fixed)) {
    double best = std::numeric_limits<double>::infinity();
    for (double e2 = E1_fixed * 1.05; e2 <= 0.2; e2 *= 1.08) {
      double sse = 0.0;
      auto q = linear_start(e2, sse);
      if (sse < best) {
        best = sse;
        start = q;
      }
    }
  } else {
    double sse = 0.0;
    start = linear_start(E2, sse);
  }

  ParameterSet ps;
  ps.add("I0", std::max(start.I0, 1e-300), 1e-300, ParameterSet::inf);
  ps.add("A", std::max(start.A, 0.0), 0.0, ParameterSet::inf);
  ps.add("B", std::max(start.B, 0.0), 0.0, ParameterSet::inf);
  ps.add("E2", e2_free ? std::max(start.E2, E1_fixed * (1.0 + 1e-9)) : E2, E1_fixed * (1.0 + 1e-9),
         ParameterSet::inf, !e2_free);
  auto residual = [&](std::span<const double> q) {
    QuenchParams m{q[0], q[1], q[2], E1_fixed, q[3]};
    Vector r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = quench_intensity(m, points[i].x) - points[i].y;
    return r;
  };
  auto fit = fit_parameters(ps, residual, weights, options);
  QuenchFit out;
  out.value = {fit.values[0], fit.values[1], fit.values[2], E1_fixed, fit.values[3]};
  out.sigma = {fit.sigmas[0], fit.sigmas[1], fit.sigmas[2], 0.0, fit.sigmas[3]};
  out.report = std::move(fit.report);
  return out;
}

double ratio_activation(double r0, double Ea, double T) {
  if (!(T > 0.0)) throw DomainError("ratio_activation: T must be > 0");
  return r0 * std::exp(-Ea / (kB * T));
}

ActivationFit fit_ratio_activation(std::span<const Sample> points) {
  if (points.size() < 2) {
    throw FitError("insufficient data: fit_ratio_activation needs at least 2 points");
  }
  std::vector<double> x, y, w;
  bool have_sigma = true;
  for (const auto& s : points) have_sigma = have_sigma && s.sigma > 0.0;
  for (const auto& s : points) {
    if (!(s.y > 0.0)) throw DomainError("fit_ratio_activation: ratios must be > 0");
    if (!(s.x > 0.0)) throw DomainError("fit_ratio_activation: temperatures must be > 0");
    x.push_back(1.0 / s.x);
    y.push_back(std::log(s.y));
    // sigma(ln r) = sigma(r) / r
    w.push_back(have_sigma ? (s.y / s.sigma) * (s.y / s.sigma) : 1.0);
  }
  const auto xmin = *std::min_element(x.begin(), x.end());
  const auto xmax = *std::max_element(x.begin(), x.end());
  if (xmax - xmin <= 0.0) throw FitError("fit_ratio_activation: all points at one temperature");

  const Line l = weighted_line(x, y, w);
  double S = 0, Sx = 0, Sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    S += w[i];
    Sx += w[i] * x[i];
    Sxx += w[i] * x[i] * x[i];
  }
  const double D = S * Sxx - Sx * Sx;
  const int dof = static_cast<int>(x.size()) - 2;
  const double s2 = dof > 0 ? l.sse / dof : l.sse;
  // Covariance of (a, b) for y = a + b x.
  const double var_a = s2 * Sxx / D, var_b = s2 * S / D, cov_ab = -s2 * Sx / D;

  ActivationFit out;
  out.r0 = std::exp(l.a);
  out.Ea = -kB * l.b;
  // Propagate through r0 = exp(a), Ea = -k b.
  Matrix J = Matrix::Zero(2, 2);
  J(0, 0) = out.r0;
  J(1, 1) = -kB;
  Matrix Cab(2, 2);
  Cab << var_a, cov_ab, cov_ab, var_b;
  out.report.covariance = J * Cab * J.transpose();
  out.report.params = Vector(2);
  out.report.params << out.r0, out.Ea;
  out.report.residual_norm = std::sqrt(l.sse);
  out.report.cost_history = {l.sse};
  out.report.dof = dof;
  out.report.iterations = 1;
  out.report.status = std::isfinite(l.a) && std::isfinite(l.b) ? FitStatus::converged : FitStatus::invalid;
  const Vector u = out.report.uncertainties();
  out.r0_sigma = u[0];
  out.Ea_sigma = u[1];
  return out;
}

double saturation_intensity(const SaturationParams& s, double P) {
  if (!(P >= 0.0)) throw DomainError("saturation_intensity: P must be >= 0");
  return s.I_inf * P / (P + s.P_sat);
}

SaturationFit fit_saturation(std::span<const Sample> points, const SaturationParams* init,
                             const FitOptions& options) {
  if (points.size() < 3) {
    throw FitError("insufficient data: fit_saturation needs at least 3 points, got " +
                   std::to_string(points.size()));
  }
  for (const auto& s : points) {
    if (!(s.x > 0.0)) throw DomainError("fit_saturation: pump power must be > 0");
  }
  const Vector weights = sample_sigmas_weights(points);

  SaturationParams start{};
  if (init) {
    start = *init;
  } else {
    // 1/I = 1/I_inf + (P_sat/I_inf)(1/P), in relative-error weighting.
    std::vector<double> x, y, w;
    for (const auto& s : points) {
      if (s.y <= 0.0) continue;
      x.push_back(1.0 / s.x);
      y.push_back(1.0 / s.y);
      w.push_back(s.y * s.y);
    }
    bool ok = x.size() >= 2;
    if (ok) {
      const Line l = weighted_line(x, y, w);
      ok = l.a > 0.0 && l.b > 0.0;
      if (ok) {
        start.I_inf = 1.0 / l.a;
        start.P_sat = l.b / l.a;
      }
    }
    if (!ok) {
      double ymax = 0.0, pmid = 0.0;
      for (const auto& s : points) {
        ymax = std::max(ymax, s.y);
        pmid += std::log(s.x);
      }
      start.I_inf = ymax > 0.0 ? ymax : 1.0;
      start.P_sat = std::exp(pmid / static_cast<double>(points.size()));
    }
  }

  ParameterSet ps;
  ps.add("I_inf", std::max(start.I_inf, 1e-300), 1e-300, ParameterSet::inf);
  ps.add("P_sat", std::max(start.P_sat, 1e-300), 1e-300, ParameterSet::inf);
  auto residual = [&](std::span<const double> q) {
    SaturationParams m{q[0], q[1]};
    Vector r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = saturation_intensity(m, points[i].x) - points[i].y;
    return r;
  };
  auto fit = fit_parameters(ps, residual, weights, options);
  SaturationFit out;
  out.value = {fit.values[0], fit.values[1]};
  out.sigma = {fit.sigmas[0], fit.sigmas[1]};
  out.report = std::move(fit.report);
  return out;
}

}  // namespace zplkit
