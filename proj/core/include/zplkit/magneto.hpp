#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "zplkit/data.hpp"
#include "zplkit/fit.hpp"

namespace zplkit {

/// Field-dependent ensemble lineshape. Energies in eV, fields in T.
///
/// sigma_G is the Gaussian standard deviation and sigma_L the Lorentzian FWHM,
/// matching the integrand of the magneto-PL profile. gamma_B0 is the
/// zero-field Voigt FWHM of that pair.
struct MagnetoParams {
  double gamma_B0 = 0.0;
  double eps_eff = 0.0;  ///< eV/T
  double sigma_G = 0.0;
  double sigma_L = 0.0;
};

void validate(const MagnetoParams& m);

/// Chooses sigma_G, sigma_L so that the zero-field Voigt FWHM equals gamma_B0,
/// with the Lorentzian carrying `lorentz_fraction` (in [0, 1)) of it.
MagnetoParams make_magneto_params(double gamma_B0, double eps_eff, double lorentz_fraction = 0.0);

/// How the +-eps|B| Zeeman branches enter the ensemble profile.
enum class BranchMode {
  single,             ///< one Lorentzian displaced by +eps|B|
  symmetric,          ///< equal-weight branches at +eps|B| and -eps|B|
  gaussian_ensemble,  ///< shifts Gaussian-distributed with FWHM eps|B| about zero
};

std::string_view to_string(BranchMode m);
BranchMode parse_branch_mode(std::string_view s);

struct ZeemanTerms {
  double g_e = 2.0005;
  double g_h = 0.0;
  double chi = 0.0;  ///< eV/T^2
  int sign_e = +1;
  int sign_h = +1;
};

void validate(const ZeemanTerms& z);

/// (sign_e g_e + sign_h g_h) mu_B Bz + chi Bz^2, in eV.
double zeeman_shift(const ZeemanTerms& z, double Bz);

/// sqrt(gamma_B0^2 + (eps_eff |Bz|)^2).
double broadened_linewidth(double gamma_B0, double eps_eff, double Bz);

/// Unit-area magneto-PL profile at one detuning (eV).
double magneto_profile(const MagnetoParams& m, double Bz, double detuning,
                       BranchMode mode = BranchMode::symmetric);

std::vector<double> eval_magneto_profile(const MagnetoParams& m, double Bz,
                                         std::span<const double> detuning,
                                         BranchMode mode = BranchMode::symmetric);

struct ZeemanFit {
  double gamma_B0 = 0.0;
  double eps_eff = 0.0;
  double gamma_B0_sigma = 0.0;
  double eps_eff_sigma = 0.0;
  FitReport report;
};

/// Least-squares fit of the hyperbolic linewidth law to (Bz, FWHM) samples.
/// Needs at least two distinct |Bz| values; sigma > 0 on every sample enables weighting.
ZeemanFit fit_zeeman_broadening(std::span<const Sample> points, const FitOptions& options = {});

/// g = h nu / (mu_B B_res).
double esr_g_factor(double freq_hz, double B_res_T);

/// CW-ESR first-derivative spectrum.
struct EsrSpectrum {
  std::vector<double> field_T;  ///< strictly increasing
  std::vector<double> signal;
  double freq_hz = 0.0;

  void validate() const;
  bool operator==(const EsrSpectrum&) const = default;
};

struct EsrFitOptions {
  bool fit_gaussian = true;  ///< false holds the Gaussian width at zero
  double detection_threshold = 5.0;  ///< lobe height in units of the robust noise
  FitOptions solver{};
};

/// Widths are FWHM of the absorption profile, in T.
struct EsrFit {
  double B_res = 0.0;
  double lorentz_width = 0.0;
  double gauss_width = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double g = 0.0;
  double B_res_sigma = 0.0;
  double lorentz_width_sigma = 0.0;
  double gauss_width_sigma = 0.0;
  double g_sigma = 0.0;
  FitReport report;  ///< in field units of the peak-to-peak separation, signal scaled to unit span
};

/// amplitude * d/dB Voigt(B - B_res) + offset. Throws FitError when no
/// derivative feature (two opposite lobes with a zero crossing) is present.
EsrFit fit_esr_line(const EsrSpectrum& s, const EsrFitOptions& options = {});

/// Model evaluation matching fit_esr_line.
double esr_model(double B, double B_res, double gauss_width, double lorentz_width, double amplitude,
                 double offset);

}  // namespace zplkit
