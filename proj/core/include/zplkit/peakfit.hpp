#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "zplkit/data.hpp"
#include "zplkit/fit.hpp"

namespace zplkit {

enum class PeakShape { gaussian, lorentzian, voigt };

std::string_view to_string(PeakShape s);
PeakShape parse_peak_shape(std::string_view s);

/// One spectral component. Energies in eV; `area` is the integrated intensity.
struct PeakModel {
  PeakShape shape = PeakShape::gaussian;
  double center = 0.0;
  double fwhm_g = 0.0;
  double fwhm_l = 0.0;
  double area = 1.0;
};

/// Throws DomainError unless the widths match the shape and area >= 0.
void validate(const PeakModel& p);

PeakModel gaussian_peak(double center, double fwhm, double area);
PeakModel lorentzian_peak(double center, double fwhm, double area);
PeakModel voigt_peak(double center, double fwhm_g, double fwhm_l, double area);

// Unit-area line profiles centred at zero, parameterised by FWHM.
double gaussian_profile(double x, double fwhm_g);
double lorentzian_profile(double x, double fwhm_l);
double voigt_profile(double x, double fwhm_g, double fwhm_l);
/// d/dx of voigt_profile.
double voigt_profile_derivative(double x, double fwhm_g, double fwhm_l);

double eval_profile(const PeakModel& p, double energy);

/// Olivero-Longbothum FWHM of a Voigt profile (0.02% accuracy).
double voigt_fwhm(double fwhm_g, double fwhm_l);

/// Total FWHM of a peak in eV, whatever its shape.
double peak_fwhm(const PeakModel& p);

/// Width in nm of an energy interval of `fwhm_ev` centred at `center_ev`.
double fwhm_ev_to_nm(double center_ev, double fwhm_ev);

struct FittedPeak {
  PeakModel value;
  PeakModel sigma;  ///< 1-sigma uncertainties in the same fields
  double fwhm_ev = 0.0;
  double fwhm_ev_sigma = 0.0;
  double fwhm_nm = 0.0;
  double fwhm_nm_sigma = 0.0;
  double center_nm = 0.0;
};

/// Affine background c0 + c1 * E.
struct Baseline {
  double c0 = 0.0;
  double c1 = 0.0;
  double c0_sigma = 0.0;
  double c1_sigma = 0.0;
  bool enabled = false;

  double operator()(double e) const { return enabled ? c0 + c1 * e : 0.0; }
};

struct PeakFitResult {
  std::vector<FittedPeak> peaks;  ///< sorted by centre, ascending
  Baseline baseline;
  FitReport report;

  double operator()(double e) const;
  double total_area() const;
};

/// Least-squares decomposition of `s` into the shapes given by `init`.
/// Shapes are kept; centres, widths and areas are refined.
PeakFitResult fit_peaks(const Spectrum& s, std::span<const PeakModel> init, bool baseline = true,
                        const FitOptions& options = {});

/// Noise estimate from the MAD of first differences, scaled to a Gaussian sigma.
double robust_noise(std::span<const double> y);

/// Local maxima whose prominence is at least `prominence_factor` times the
/// robust noise, as initial guesses of the requested shape.
std::vector<PeakModel> seed_peaks(const Spectrum& s, PeakShape shape,
                                  double prominence_factor = 8.0);

/// ZPL fraction of the total emission, in (0, 1].
double debye_waller(double zpl_area, double total_area);

}  // namespace zplkit
