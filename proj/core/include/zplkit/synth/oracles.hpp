#pragma once

#include <functional>
#include <string>
#include <vector>

#include "zplkit/thermo.hpp"
#include "zplkit/trpl.hpp"

namespace zplkit::synth {

// Independent reference evaluations. None of these share code with the
// production evaluators they are used to check.

/// Gaussian (FWHM fwhm_g) convolved with a Lorentzian (FWHM fwhm_l) at x, by
/// adaptive Gauss-Kronrod quadrature after the substitution t = gamma tan(theta),
/// which maps the Lorentzian to a uniform density on (-pi/2, pi/2).
double voigt_convolution_oracle(double x, double fwhm_g, double fwhm_l);

/// Full width at half maximum of a unimodal function with its peak inside
/// [lo, hi]: golden-section search for the maximum, then bisection on each side.
double half_max_width(const std::function<double(double)>& f, double lo, double hi);

/// Trapezoidal integral of samples y on x.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

struct ArrheniusPair {
  double r0 = 0.0;
  double Ea = 0.0;
};

/// Exact r0, Ea through two (T, ratio) points of r0 exp(-Ea / kT).
ArrheniusPair two_point_arrhenius(double T1, double r1, double T2, double r2);

struct HyperbolicPair {
  double gamma_B0 = 0.0;
  double eps_eff = 0.0;
};

/// Exact sqrt(g0^2 + (eps B)^2) through (B1, G1), (B2, G2) with |B1| != |B2|.
HyperbolicPair two_point_hyperbolic(double B1, double G1, double B2, double G2);

struct LinearLimit {
  double n0 = 0.0;
  double nex = 0.0;
};

/// Closed-form rate equations for N0 -> infinity. The tau0 = tau_c case uses
/// the confluent limit t exp(-t / tau).
LinearLimit linear_limit_oracle(const RateModelParams& p, double t);

/// Time of the n0 maximum in the linear limit (0 when n0 decays from t = 0).
double linear_limit_peak_time(const RateModelParams& p);

/// Quench intensity evaluated in 50-digit decimal arithmetic.
double quench_oracle(const QuenchParams& q, double T);

/// Low-temperature Passler form evaluated in 50-digit arithmetic.
double passler_oracle(const PasslerParams& p, double T);

/// Registry of the oracle names, for pairing checks in the test suite.
const std::vector<std::string>& oracle_names();

}  // namespace zplkit::synth
