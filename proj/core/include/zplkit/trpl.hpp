#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zplkit/data.hpp"
#include "zplkit/fit.hpp"
#include "zplkit/ode.hpp"

namespace zplkit {

/// Two-level feeding model: an effective higher excited reservoir n_ex feeds
/// the emitting state n0 through a saturable channel with N0 available states.
///
///   dn0/dt  = -n0/tau0 + (nex/tau_f)(N0 - n0)/N0
///   dnex/dt = -nex/tau_ex - (nex/tau_f)(N0 - n0)/N0
///
/// Times in ns. N0 may be +infinity (unsaturable limit).
struct RateModelParams {
  double tau0 = 1560.0;
  double tau_ex = 200.0;
  double tau_f = 11.0;
  double N0 = 1.0;
  double n0_init = 0.0;
  double nex_init = 1.0;
  double scale = 1.0;
};

void validate(const RateModelParams& p);

/// Parameter names accepted by fit_trpl_rate's `fix` set.
inline const std::vector<std::string>& rate_param_names() {
  static const std::vector<std::string> names = {"tau0", "tau_ex", "tau_f", "N0",
                                                 "n0_init", "nex_init", "scale", "bkg"};
  return names;
}
double get_rate_param(const RateModelParams& p, std::string_view name);
void set_rate_param(RateModelParams& p, std::string_view name, double v);

struct RateTrajectory {
  std::vector<double> t;
  std::vector<double> n0;
  std::vector<double> nex;
  /// Cumulative populations lost through the tau0 and tau_ex channels.
  std::vector<double> lost0;
  std::vector<double> lost_ex;
  std::vector<double> signal;  ///< scale * n0
};

/// Integrates the rate equations onto `t_grid` (strictly increasing, starting at 0).
RateTrajectory simulate_rate_eqs(const RateModelParams& p, std::span<const double> t_grid,
                                 const OdeOptions& options = {});

/// Time of the signal maximum of a trajectory (first argmax).
double peak_time(const RateTrajectory& traj);

/// Discrete convolution with a unit-area Gaussian IRF over +-5 sigma.
/// Kernel weights are renormalised at the array ends so the summed signal is conserved.
std::vector<double> convolve_irf(std::span<const double> signal, double bin_ns, double irf_fwhm_ns);

struct TrplFitOptions {
  double irf_fwhm_ns = 0.4;
  bool neyman_weights = true;
  double bkg_init = -1.0;  ///< < 0: estimate from the data
  OdeOptions ode{};
  FitOptions solver{};
};

struct RateFit {
  RateModelParams value;
  RateModelParams sigma;
  double bkg = 0.0;
  double bkg_sigma = 0.0;
  FitReport report;
};

/// Model counts for histogram bins: IRF-convolved scale * n0(t) + bkg, zero signal for t < 0.
std::vector<double> trpl_model_counts(const DecayHistogram& h, const RateModelParams& p, double bkg,
                                      double irf_fwhm_ns, const OdeOptions& ode = {});

/// Weighted least-squares fit of the rate model to a decay histogram.
/// Names in `fix` ("tau0", "N0", "bkg", ...) are held at their initial values.
RateFit fit_trpl_rate(const DecayHistogram& h, const RateModelParams& init,
                      const std::set<std::string>& fix, const TrplFitOptions& options = {});

/// Number of bins between excitation (t = 0) and the count maximum.
std::size_t rise_bins(const DecayHistogram& h);

struct ExpFit {
  double tau = 0.0;
  double amp = 0.0;  ///< amplitude at t = tail_start
  double bkg = 0.0;
  double tau_sigma = 0.0;
  double amp_sigma = 0.0;
  double bkg_sigma = 0.0;
  double tail_start = 0.0;
  FitReport report;
};

/// amp exp(-(t - tail_start)/tau) + bkg on bins with t >= tail_start (>= 10 bins).
ExpFit fit_single_exp(const DecayHistogram& h, double tail_start_ns, bool neyman = true,
                      const FitOptions& options = {});

enum class FourierConvention {
  hbar_gamma,       ///< FWHM = hbar * Gamma_r
  half_hbar_gamma,  ///< FWHM = hbar * Gamma_r / 2
};

/// Rates in 1/us, linewidth in eV.
struct RateDecomposition {
  double gamma_tot = 0.0;
  double gamma_r = 0.0;
  double gamma_nr = 0.0;
  double fourier_fwhm = 0.0;
};

/// Splits Gamma_tot with the quantum efficiency I_T / I_0 (0 < I_T <= I_0).
RateDecomposition decompose_rates(double gamma_tot_per_us, double I_T, double I_0,
                                  FourierConvention convention = FourierConvention::hbar_gamma);

/// Transform-limited FWHM (eV) for a radiative rate in 1/us.
double fourier_limited_fwhm(double gamma_r_per_us, FourierConvention convention);

}  // namespace zplkit
