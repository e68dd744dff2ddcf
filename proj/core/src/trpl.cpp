#include "zplkit/trpl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "zplkit/errors.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

namespace {

double saturation_factor(double N0, double n0) {
  return std::isinf(N0) ? 1.0 : (N0 - n0) / N0;
}

}  // namespace

void validate(const RateModelParams& p) {
  if (!(p.tau0 > 0.0) || !(p.tau_ex > 0.0) || !(p.tau_f > 0.0)) {
    throw DomainError("RateModelParams: time constants must be > 0");
  }
  if (!(p.N0 > 0.0)) throw DomainError("RateModelParams: N0 must be > 0");
  if (!(p.n0_init >= 0.0) || p.n0_init > p.N0) {
    throw DomainError("RateModelParams: need 0 <= n0_init <= N0");
  }
  if (!(p.nex_init >= 0.0) || !std::isfinite(p.nex_init)) {
    throw DomainError("RateModelParams: need nex_init >= 0");
  }
  if (!std::isfinite(p.scale)) throw DomainError("RateModelParams: scale must be finite");
}

double get_rate_param(const RateModelParams& p, std::string_view name) {
  if (name == "tau0") return p.tau0;
  if (name == "tau_ex") return p.tau_ex;
  if (name == "tau_f") return p.tau_f;
  if (name == "N0") return p.N0;
  if (name == "n0_init") return p.n0_init;
  if (name == "nex_init") return p.nex_init;
  if (name == "scale") return p.scale;
  throw DomainError("unknown rate parameter '" + std::string(name) + "'");
}

void set_rate_param(RateModelParams& p, std::string_view name, double v) {
  if (name == "tau0") p.tau0 = v;
  else if (name == "tau_ex") p.tau_ex = v;
  else if (name == "tau_f") p.tau_f = v;
  else if (name == "N0") p.N0 = v;
  else if (name == "n0_init") p.n0_init = v;
  else if (name == "nex_init") p.nex_init = v;
  else if (name == "scale") p.scale = v;
  else throw DomainError("unknown rate parameter '" + std::string(name) + "'");
}

RateTrajectory simulate_rate_eqs(const RateModelParams& p, std::span<const double> t_grid,
                                 const OdeOptions& options) {
  validate(p);
  if (t_grid.empty()) throw DomainError("simulate_rate_eqs: empty time grid");
  if (t_grid.front() != 0.0) throw DomainError("simulate_rate_eqs: time grid must start at 0");

  auto rhs = [&p](double, const std::array<double, 4>& y) {
    const double n0 = y[0], nex = y[1];
    const double feed = nex / p.tau_f * saturation_factor(p.N0, n0);
    return std::array<double, 4>{-n0 / p.tau0 + feed, -nex / p.tau_ex - feed, n0 / p.tau0,
                                 nex / p.tau_ex};
  };
  const auto ys = integrate_dopri5<4>(rhs, {p.n0_init, p.nex_init, 0.0, 0.0}, t_grid, options);

  RateTrajectory tr;
  tr.t.assign(t_grid.begin(), t_grid.end());
  const std::size_t n = ys.size();
  tr.n0.resize(n);
  tr.nex.resize(n);
  tr.lost0.resize(n);
  tr.lost_ex.resize(n);
  tr.signal.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Populations that have decayed below abs_tol can dip to -1e-12; clip them.
    tr.n0[i] = std::max(0.0, ys[i][0]);
    tr.nex[i] = std::max(0.0, ys[i][1]);
    tr.lost0[i] = ys[i][2];
    tr.lost_ex[i] = ys[i][3];
    tr.signal[i] = p.scale * tr.n0[i];
  }
  return tr;
}

double peak_time(const RateTrajectory& traj) {
  if (traj.signal.empty()) throw DomainError("peak_time: empty trajectory");
  const auto it = std::max_element(traj.signal.begin(), traj.signal.end());
  return traj.t[static_cast<std::size_t>(it - traj.signal.begin())];
}

std::vector<double> convolve_irf(std::span<const double> signal, double bin_ns, double irf_fwhm_ns) {
  if (!(irf_fwhm_ns >= 0.0)) throw DomainError("convolve_irf: irf_fwhm must be >= 0");
  if (!(bin_ns > 0.0)) throw DomainError("convolve_irf: bin width must be > 0");
  std::vector<double> out(signal.begin(), signal.end());
  if (irf_fwhm_ns == 0.0 || signal.empty()) return out;

  const double sigma = irf_fwhm_ns / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(5.0 * sigma / bin_ns));
  if (half == 0) return out;
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    const double x = static_cast<double>(k) * bin_ns / sigma;
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
  }
  const double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= ksum;

  // Scatter each sample into its neighbours; where the kernel runs past the
  // ends, the in-range weights are rescaled so every sample is conserved.
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double v = signal[static_cast<std::size_t>(i)];
    if (v == 0.0) continue;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double wsum = 1.0;
    if (lo > i - half || hi < i + half) {
      wsum = 0.0;
      for (std::ptrdiff_t j = lo; j <= hi; ++j) wsum += kernel[static_cast<std::size_t>(j - i + half)];
    }
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      out[static_cast<std::size_t>(j)] += v * kernel[static_cast<std::size_t>(j - i + half)] / wsum;
    }
  }
  return out;
}

std::vector<double> trpl_model_counts(const DecayHistogram& h, const RateModelParams& p, double bkg,
                                      double irf_fwhm_ns, const OdeOptions& ode) {
  const std::size_t n = h.size();
  std::size_t first = 0;
  while (first < n && h.time(first) < 0.0) ++first;
  std::vector<double> signal(n, 0.0);
  if (first < n) {
    std::vector<double> grid;
    grid.reserve(n - first + 1);
    const bool prepend = h.time(first) > 0.0;
    if (prepend) grid.push_back(0.0);
    for (std::size_t i = first; i < n; ++i) grid.push_back(h.time(i));
    const auto tr = simulate_rate_eqs(p, grid, ode);
    for (std::size_t i = first; i < n; ++i) signal[i] = tr.signal[i - first + (prepend ? 1 : 0)];
  }
  auto model = convolve_irf(signal, h.bin_width(), irf_fwhm_ns);
  for (double& m : model) m += bkg;
  return model;
}

RateFit fit_trpl_rate(const DecayHistogram& h, const RateModelParams& init,
                      const std::set<std::string>& fix, const TrplFitOptions& options) {
  validate(init);
  const auto& names = rate_param_names();
  for (const auto& f : fix) {
    if (std::find(names.begin(), names.end(), f) == names.end()) {
      throw DomainError("fit_trpl_rate: unknown parameter '" + f + "' in fix set");
    }
  }

  const auto counts = h.counts();
  double bkg0 = options.bkg_init;
  if (bkg0 < 0.0) {
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < h.size() && h.time(i) < 0.0; ++i, ++k) s += counts[i];
    bkg0 = k ? s / static_cast<double>(k) : 0.0;
  }

  constexpr double inf = ParameterSet::inf;
  ParameterSet ps;
  for (const auto& name : names) {
    if (name == "bkg") {
      ps.add(name, bkg0, 0.0, inf, fix.count(name) > 0);
      continue;
    }
    const double v = get_rate_param(init, name);
    double lo = 0.0;
    if (name == "tau0" || name == "tau_ex" || name == "tau_f" || name == "N0") lo = 1e-9 * v;
    // An infinite N0 can only be held fixed.
    const bool fixed = fix.count(name) > 0 || std::isinf(v);
    ps.add(name, v, lo, inf, fixed);
  }

  const Vector weights = options.neyman_weights ? neyman_weights(counts) : Vector{};
  auto residual = [&](std::span<const double> q) {
    RateModelParams m;
    for (std::size_t i = 0; i + 1 < names.size(); ++i) set_rate_param(m, names[i], q[i]);
    m.n0_init = std::min(m.n0_init, m.N0);
    const auto model = trpl_model_counts(h, m, q[7], options.irf_fwhm_ns, options.ode);
    Vector r(static_cast<Eigen::Index>(model.size()));
    for (std::size_t i = 0; i < model.size(); ++i) r[static_cast<Eigen::Index>(i)] = model[i] - counts[i];
    return r;
  };
  auto fit = fit_parameters(ps, residual, weights, options.solver);

  RateFit out;
  for (std::size_t i = 0; i + 1 < names.size(); ++i) {
    set_rate_param(out.value, names[i], fit.values[i]);
    set_rate_param(out.sigma, names[i], fit.sigmas[i]);
  }
  out.bkg = fit.values[7];
  out.bkg_sigma = fit.sigmas[7];
  out.report = std::move(fit.report);
  return out;
}

std::size_t rise_bins(const DecayHistogram& h) {
  const auto c = h.counts();
  const auto peak = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  std::size_t n = 0;
  for (std::size_t i = 0; i < peak; ++i) {
    if (h.time(i) >= 0.0) ++n;
  }
  return n;
}

ExpFit fit_single_exp(const DecayHistogram& h, double tail_start_ns, bool neyman,
                      const FitOptions& options) {
  std::vector<double> t, y;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.time(i) >= tail_start_ns) {
      t.push_back(h.time(i));
      y.push_back(h.counts()[i]);
    }
  }
  if (t.size() < 10) {
    throw FitError("insufficient data: fit_single_exp needs at least 10 bins after tail_start, got " +
                   std::to_string(t.size()));
  }

  // Start: background from the last tenth of the window, slope from a log-linear
  // regression of the background-subtracted head.
  const std::size_t m = t.size();
  const std::size_t ntail = std::max<std::size_t>(m / 10, 1);
  double bkg0 = 0.0;
  for (std::size_t i = m - ntail; i < m; ++i) bkg0 += y[i];
  bkg0 /= static_cast<double>(ntail);
  const double amp0 = std::max(y.front() - bkg0, 1e-12);
  double Sx = 0, Sy = 0, Sxx = 0, Sxy = 0, S = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = y[i] - bkg0;
    if (v <= 0.2 * amp0) break;
    const double x = t[i] - tail_start_ns, l = std::log(v);
    S += 1;
    Sx += x;
    Sy += l;
    Sxx += x * x;
    Sxy += x * l;
  }
  double tau0 = 0.3 * (t.back() - tail_start_ns);
  if (S >= 2) {
    const double slope = (S * Sxy - Sx * Sy) / (S * Sxx - Sx * Sx);
    if (slope < 0.0 && std::isfinite(slope)) tau0 = -1.0 / slope;
  }

  ParameterSet ps;
  ps.add("tau", tau0, 1e-9 * h.bin_width(), ParameterSet::inf);
  ps.add("amp", amp0, 0.0, ParameterSet::inf);
  ps.add("bkg", std::max(bkg0, 0.0), 0.0, ParameterSet::inf);
  auto residual = [&](std::span<const double> q) {
    Vector r(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      r[static_cast<Eigen::Index>(i)] = q[1] * std::exp(-(t[i] - tail_start_ns) / q[0]) + q[2] - y[i];
    }
    return r;
  };
  const Vector weights = neyman ? neyman_weights(y) : Vector{};
  auto fit = fit_parameters(ps, residual, weights, options);
  ExpFit out;
  out.tau = fit.values[0];
  out.amp = fit.values[1];
  out.bkg = fit.values[2];
  out.tau_sigma = fit.sigmas[0];
  out.amp_sigma = fit.sigmas[1];
  out.bkg_sigma = fit.sigmas[2];
  out.tail_start = tail_start_ns;
  out.report = std::move(fit.report);
  return out;
}

double fourier_limited_fwhm(double gamma_r_per_us, FourierConvention convention) {
  if (!(gamma_r_per_us >= 0.0)) throw DomainError("fourier_limited_fwhm: rate must be >= 0");
  const double w = PhysConstants::hbar * gamma_r_per_us * 1e6;
  return convention == FourierConvention::hbar_gamma ? w : 0.5 * w;
}

RateDecomposition decompose_rates(double gamma_tot_per_us, double I_T, double I_0,
                                  FourierConvention convention) {
  if (!(gamma_tot_per_us > 0.0) || !std::isfinite(gamma_tot_per_us)) {
    throw DomainError("decompose_rates: gamma_tot must be > 0");
  }
  if (!(I_T > 0.0) || !(I_0 > 0.0)) throw DomainError("decompose_rates: intensities must be > 0");
  if (I_T > I_0) throw DomainError("decompose_rates: I_T > I_0 implies quantum efficiency > 1");
  RateDecomposition d;
  d.gamma_tot = gamma_tot_per_us;
  d.gamma_r = gamma_tot_per_us * (I_T / I_0);
  d.gamma_nr = gamma_tot_per_us - d.gamma_r;
  d.fourier_fwhm = fourier_limited_fwhm(d.gamma_r, convention);
  return d;
}

}  // namespace zplkit
