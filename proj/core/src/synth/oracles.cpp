#include "zplkit/synth/oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <numbers>

#include "zplkit/errors.hpp"

namespace zplkit::synth {

namespace {

// k_B in eV/K from the exact SI definitions, kept separate from units.hpp.
constexpr double kBoltzmannEv = 1.380649e-23 / 1.602176634e-19;

}  // namespace

double voigt_convolution_oracle(double x, double fwhm_g, double fwhm_l) {
  if (!(fwhm_g > 0.0) || !(fwhm_l > 0.0)) throw DomainError("voigt oracle: widths must be > 0");
  const double sigma = fwhm_g / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double gamma = 0.5 * fwhm_l;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * std::numbers::pi);
  auto f = [&](double th) {
    const double u = (x - gamma * std::tan(th)) / sigma;
    return std::exp(-0.5 * u * u);
  };
  // The integrand is a bump at theta0 = atan(x / gamma) of angular width
  // ~ sigma cos^2(theta0) / gamma; split there so each panel is smooth.
  const double th0 = std::atan(x / gamma);
  const double c = std::cos(th0);
  const double w = std::min(1.0, 8.0 * sigma * c * c / gamma + 1e-3);
  const double h = std::numbers::pi / 2.0;
  std::vector<double> cuts = {-h, th0 - w, th0, th0 + w, h};
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(cuts[i], -h), b = std::min(cuts[i + 1], h);
    if (b <= a) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
  }
  return norm * total;
}

double half_max_width(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) throw DomainError("half_max_width: need lo < hi");
  // Coarse scan then golden-section refinement of the maximum.
  constexpr int n = 2001;
  double best_x = lo, best = f(lo);
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  const double step = (hi - lo) / (n - 1);
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 200 && b - a > 1e-15 * (std::abs(a) + std::abs(b) + 1e-300); ++i) {
    const double c = b - gr * (b - a), d = a + gr * (b - a);
    if (f(c) > f(d)) b = d;
    else a = c;
  }
  const double xm = 0.5 * (a + b);
  const double half = 0.5 * f(xm);
  auto bisect = [&](double inside, double outside) {
    if (f(outside) > half) throw DomainError("half_max_width: bracket does not reach half maximum");
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (f(mid) > half ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  return bisect(xm, hi) - bisect(xm, lo);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

ArrheniusPair two_point_arrhenius(double T1, double r1, double T2, double r2) {
  if (!(T1 > 0.0) || !(T2 > 0.0) || T1 == T2 || !(r1 > 0.0) || !(r2 > 0.0)) {
    throw DomainError("two_point_arrhenius: need distinct T > 0 and ratios > 0");
  }
  // ln r = ln r0 - Ea / (k T)
  const double Ea = kBoltzmannEv * std::log(r2 / r1) / (1.0 / T1 - 1.0 / T2);
  return {r1 * std::exp(Ea / (kBoltzmannEv * T1)), Ea};
}

HyperbolicPair two_point_hyperbolic(double B1, double G1, double B2, double G2) {
  const double b1 = B1 * B1, b2 = B2 * B2;
  if (b1 == b2) throw DomainError("two_point_hyperbolic: need distinct |B|");
  const double e2 = (G2 * G2 - G1 * G1) / (b2 - b1);
  const double g2 = G1 * G1 - e2 * b1;
  if (e2 < 0.0 || g2 <= 0.0) throw DomainError("two_point_hyperbolic: no real solution");
  return {std::sqrt(g2), std::sqrt(e2)};
}

LinearLimit linear_limit_oracle(const RateModelParams& p, double t) {
  const double kc = 1.0 / p.tau_ex + 1.0 / p.tau_f;
  const double k0 = 1.0 / p.tau0;
  LinearLimit r;
  r.nex = p.nex_init * std::exp(-kc * t);
  // n0 = n0(0) e^{-k0 t} + (nex0 / tau_f) e^{-k0 t} (1 - e^{-delta t}) / delta, delta = kc - k0.
  const double delta = kc - k0;
  const double x = delta * t;
  const double frac = std::abs(x) < 1e-300 ? t : -std::expm1(-x) / delta;
  r.n0 = std::exp(-k0 * t) * (p.n0_init + p.nex_init / p.tau_f * frac);
  return r;
}

double linear_limit_peak_time(const RateModelParams& p) {
  const double kc = 1.0 / p.tau_ex + 1.0 / p.tau_f;
  const double k0 = 1.0 / p.tau0;
  const double F = p.nex_init / p.tau_f;
  // dn0/dt = 0  <=>  F e^{-kc t} = k0 n0(t); solved by bisection on the sign change.
  auto deriv = [&](double t) { return F * std::exp(-kc * t) - k0 * linear_limit_oracle(p, t).n0; };
  if (deriv(0.0) <= 0.0) return 0.0;
  double a = 0.0, b = 1.0 / std::min(kc, k0);
  while (deriv(b) > 0.0) b *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (deriv(m) > 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

double quench_oracle(const QuenchParams& q, double T) {
  using boost::multiprecision::cpp_dec_float_50;
  const cpp_dec_float_50 k = cpp_dec_float_50("1.380649e-23") / cpp_dec_float_50("1.602176634e-19");
  const cpp_dec_float_50 t(T), kt = k * t;
  const cpp_dec_float_50 d = 1 + cpp_dec_float_50(q.A) * exp(-cpp_dec_float_50(q.E1) / kt) +
                             cpp_dec_float_50(q.B) * pow(t, cpp_dec_float_50(1.5)) *
                                 exp(-cpp_dec_float_50(q.E2) / kt);
  return static_cast<double>(cpp_dec_float_50(q.I0) / d);
}

double passler_oracle(const PasslerParams& p, double T) {
  using boost::multiprecision::cpp_dec_float_50;
  const cpp_dec_float_50 th(p.theta), pp(p.p), t(T);
  return static_cast<double>(cpp_dec_float_50(p.E0) -
                             cpp_dec_float_50(p.alpha) * th / (2 * pp) * pow(2 * t / th, pp));
}

const std::vector<std::string>& oracle_names() {
  static const std::vector<std::string> names = {
      "voigt_convolution_oracle", "half_max_width", "trapezoid", "two_point_arrhenius",
      "two_point_hyperbolic", "linear_limit_oracle", "linear_limit_peak_time", "quench_oracle",
      "passler_oracle"};
  return names;
}

}  // namespace zplkit::synth
