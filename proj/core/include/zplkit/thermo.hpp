#pragma once

#include <span>

#include "zplkit/data.hpp"
#include "zplkit/fit.hpp"

namespace zplkit {

/// Zero-phonon-line redshift model parameters. alpha in eV/K, theta in K.
struct PasslerParams {
  double E0 = 0.0;
  double alpha = 0.0;
  double theta = 406.0;
  double p = 2.0;
};

enum class PasslerForm {
  low_temperature,  ///< E0 - (alpha theta / 2p) (2T/theta)^p
  full,             ///< E0 - (alpha theta / 2) [(1 + (2T/theta)^p)^(1/p) - 1]
};

void validate(const PasslerParams& p);

/// Polynomial coefficient A = (alpha theta / 2p)(2/theta)^p, so that the
/// low-temperature form reads E0 - A T^p.
double passler_coefficient(const PasslerParams& p);

double passler_energy(const PasslerParams& p, double T, PasslerForm form = PasslerForm::low_temperature);

/// E0 - A T^p evaluated from the polynomial coefficient directly.
double passler_energy_polynomial(double E0, double A, double p, double T);

struct PasslerFit {
  PasslerParams value;
  PasslerParams sigma;  ///< theta sigma is zero (held fixed)
  FitReport report;
};

/// Fits E0, alpha and p with theta held at `theta_fixed`.
/// Needs >= 4 points spanning >= 20 K; throws FitError otherwise.
PasslerFit fit_passler(std::span<const Sample> points, double theta_fixed = 406.0,
                       PasslerForm form = PasslerForm::low_temperature,
                       const PasslerParams* init = nullptr, const FitOptions& options = {});

/// Thermal quenching through two activated channels. E1, E2 in eV; B in K^-3/2.
struct QuenchParams {
  double I0 = 1.0;
  double A = 0.0;
  double B = 0.0;
  double E1 = 0.0;
  double E2 = 0.0;
};

void validate(const QuenchParams& q);

/// I0 / (1 + A exp(-E1/kT) + B T^1.5 exp(-E2/kT)), T > 0.
double quench_intensity(const QuenchParams& q, double T);

struct QuenchFit {
  QuenchParams value;
  QuenchParams sigma;
  FitReport report;
};

/// Fits I0, A, B with E1 fixed. E2 is fixed at `E2` when `e2_free` is false,
/// otherwise `E2` is the starting value (<= 0 selects a grid search).
QuenchFit fit_quench(std::span<const Sample> points, double E1_fixed, double E2, bool e2_free,
                     const QuenchParams* init = nullptr, const FitOptions& options = {});

struct ActivationFit {
  double r0 = 0.0;
  double Ea = 0.0;  ///< eV
  double r0_sigma = 0.0;
  double Ea_sigma = 0.0;
  FitReport report;  ///< params/covariance in (r0, Ea)
};

/// ratio(T) = r0 exp(-Ea / kT) by weighted linear regression of ln(ratio) on 1/T.
/// Sample sigmas, when present, are absolute ratio uncertainties.
ActivationFit fit_ratio_activation(std::span<const Sample> points);

double ratio_activation(double r0, double Ea, double T);

struct SaturationParams {
  double I_inf = 1.0;
  double P_sat = 1.0;  ///< W/cm^2
};

/// I_inf P / (P + P_sat).
double saturation_intensity(const SaturationParams& s, double P);

struct SaturationFit {
  SaturationParams value;
  SaturationParams sigma;
  FitReport report;
};

SaturationFit fit_saturation(std::span<const Sample> points, const SaturationParams* init = nullptr,
                             const FitOptions& options = {});

}  // namespace zplkit
