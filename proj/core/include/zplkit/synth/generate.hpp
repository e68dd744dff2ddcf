#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "zplkit/data.hpp"
#include "zplkit/magneto.hpp"
#include "zplkit/peakfit.hpp"

namespace zplkit::synth {

enum class NoiseModel {
  none,
  gaussian,           ///< additive, standard deviation `noise_sigma`
  gaussian_relative,  ///< multiplicative, y (1 + noise_sigma N(0,1))
  poisson,            ///< y replaced by a Poisson draw with mean y
};

std::string_view to_string(NoiseModel n);
NoiseModel parse_noise_model(std::string_view s);

/// Named x/y observations, e.g. temperature_K / energy_ev.
struct PointSeries {
  std::string x_name;
  std::string y_name;
  std::vector<Sample> points;

  bool operator==(const PointSeries&) const = default;
};

using Dataset = std::variant<Spectrum, DecayHistogram, PointSeries, EsrSpectrum>;

/// Model ids and their parameters (defaults in parentheses):
///
///   passler         E0, alpha, theta (406), p, full (0)        grid: T [K]
///   quench          I0 (1), A, B, E1, E2                       grid: T [K]
///   ratio           r0, Ea                                     grid: T [K]
///   saturation      I_inf (1), P_sat                           grid: P [W/cm^2]
///   zeeman          gamma_B0, eps_eff                          grid: B [T]
///   spectrum        c0 (0), c1 (0) plus `peaks`                grid: E [eV]
///   cu-doublet      split_mev (0.56), ratio (2), fwhm_mev (0.38), area (1),
///                   center_ev (*Cu doublet midpoint), c0 (0)   grid: E [eV]
///   trpl            tau0, tau_ex, tau_f, N0, n0_init, nex_init, scale, bkg (0),
///                   irf_fwhm_ns (0.4), bin_width_ns, n_bins, bin_start_ns (0)
///   single-exp      tau, amp, bkg (0), bin_width_ns, n_bins, bin_start_ns (0)
///   esr             B_res, lorentz_width, gauss_width (0), amplitude (1),
///                   offset (0), freq_hz                        grid: B [T]
///
/// Point-series outputs carry the noise standard deviation as the sample sigma.
struct GeneratorSpec {
  std::string model;
  std::map<std::string, double> params;
  std::vector<PeakModel> peaks;
  std::vector<double> grid;
  NoiseModel noise = NoiseModel::none;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic for a fixed spec. With NoiseModel::none the output equals the
/// model evaluation. Throws DomainError for unknown models or parameters.
Dataset generate(const GeneratorSpec& spec);

/// Grid syntax: "linspace(a, b, n)", "logspace(a, b, n)" (decades) or "x1, x2, ...".
std::vector<double> parse_grid(std::string_view text);

/// Builds a spec from key-value config entries: model, seed, noise,
/// noise_sigma, grid, peakN = "shape center fwhm_g fwhm_l area"; every other
/// key is a numeric model parameter.
GeneratorSpec parse_generator_spec(const std::map<std::string, std::string>& cfg);

/// Writes the dataset in the CSV dialect its parser reads.
void write_dataset(std::ostream& out, const Dataset& d);

}  // namespace zplkit::synth
