#include "zplkit/synth/generate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "zplkit/catalog.hpp"
#include "zplkit/errors.hpp"
#include "zplkit/io.hpp"
#include "zplkit/synth/rng.hpp"
#include "zplkit/thermo.hpp"
#include "zplkit/trpl.hpp"
#include "zplkit/units.hpp"

namespace zplkit::synth {

namespace {

struct ModelInfo {
  std::vector<std::string> required;
  std::map<std::string, double> defaults;
  bool needs_grid = true;
};

const std::map<std::string, ModelInfo>& models() {
  static const std::map<std::string, ModelInfo> m = {
      {"passler", {{"E0", "alpha", "p"}, {{"theta", 406.0}, {"full", 0.0}}}},
      {"quench", {{"A", "B", "E1", "E2"}, {{"I0", 1.0}}}},
      {"ratio", {{"r0", "Ea"}, {}}},
      {"saturation", {{"P_sat"}, {{"I_inf", 1.0}}}},
      {"zeeman", {{"gamma_B0", "eps_eff"}, {}}},
      {"spectrum", {{}, {{"c0", 0.0}, {"c1", 0.0}}}},
      {"cu-doublet",
       {{},
        {{"split_mev", 0.56},
         {"ratio", 2.0},
         {"fwhm_mev", 0.38},
         {"area", 1.0},
         {"center_ev", 0.0},
         {"c0", 0.0}}}},
      {"trpl",
       {{"tau0", "tau_ex", "tau_f", "N0", "n0_init", "nex_init", "scale", "bin_width_ns", "n_bins"},
        {{"bkg", 0.0}, {"irf_fwhm_ns", 0.4}, {"bin_start_ns", 0.0}},
        false}},
      {"single-exp",
       {{"tau", "amp", "bin_width_ns", "n_bins"}, {{"bkg", 0.0}, {"bin_start_ns", 0.0}}, false}},
      {"esr",
       {{"B_res", "lorentz_width", "freq_hz"},
        {{"gauss_width", 0.0}, {"amplitude", 1.0}, {"offset", 0.0}}}},
  };
  return m;
}

std::map<std::string, double> resolve_params(const GeneratorSpec& spec, const ModelInfo& info) {
  std::map<std::string, double> p = info.defaults;
  std::set<std::string> known(info.required.begin(), info.required.end());
  for (const auto& [k, v] : info.defaults) known.insert(k);
  for (const auto& [k, v] : spec.params) {
    if (!known.count(k)) throw DomainError("generate: model '" + spec.model + "' has no parameter '" + k + "'");
    p[k] = v;
  }
  for (const auto& r : info.required) {
    if (!p.count(r)) throw DomainError("generate: model '" + spec.model + "' needs parameter '" + r + "'");
  }
  return p;
}

std::vector<double> apply_noise(const GeneratorSpec& spec, std::span<const double> y, double floor) {
  std::vector<double> out(y.begin(), y.end());
  if (spec.noise == NoiseModel::none) return out;
  Philox4x32 rng(spec.seed);
  for (double& v : out) {
    switch (spec.noise) {
      case NoiseModel::gaussian: v += spec.noise_sigma * rng.normal(); break;
      case NoiseModel::gaussian_relative: v *= 1.0 + spec.noise_sigma * rng.normal(); break;
      case NoiseModel::poisson: v = static_cast<double>(rng.poisson(std::max(v, 0.0))); break;
      case NoiseModel::none: break;
    }
    v = std::max(v, floor);
  }
  return out;
}

double noise_sd(const GeneratorSpec& spec, double y) {
  switch (spec.noise) {
    case NoiseModel::gaussian: return spec.noise_sigma;
    case NoiseModel::gaussian_relative: return spec.noise_sigma * std::abs(y);
    case NoiseModel::poisson: return std::sqrt(std::max(y, 1.0));
    case NoiseModel::none: return 0.0;
  }
  return 0.0;
}

PointSeries make_points(const GeneratorSpec& spec, std::string x_name, std::string y_name,
                        const std::vector<double>& y) {
  const auto noisy = apply_noise(spec, y, -std::numeric_limits<double>::infinity());
  PointSeries ps{std::move(x_name), std::move(y_name), {}};
  for (std::size_t i = 0; i < y.size(); ++i) ps.points.push_back({spec.grid[i], noisy[i], noise_sd(spec, y[i])});
  return ps;
}

std::size_t bin_count(double n) {
  if (!(n >= 10.0) || n != std::floor(n)) throw DomainError("generate: n_bins must be an integer >= 10");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string_view to_string(NoiseModel n) {
  switch (n) {
    case NoiseModel::none: return "none";
    case NoiseModel::gaussian: return "gaussian";
    case NoiseModel::gaussian_relative: return "gaussian-relative";
    case NoiseModel::poisson: return "poisson";
  }
  return "?";
}

NoiseModel parse_noise_model(std::string_view s) {
  if (s == "none") return NoiseModel::none;
  if (s == "gaussian") return NoiseModel::gaussian;
  if (s == "gaussian-relative") return NoiseModel::gaussian_relative;
  if (s == "poisson") return NoiseModel::poisson;
  throw DomainError("unknown noise model '" + std::string(s) + "'");
}

Dataset generate(const GeneratorSpec& spec) {
  const auto it = models().find(spec.model);
  if (it == models().end()) throw DomainError("generate: unknown model id '" + spec.model + "'");
  const auto& info = it->second;
  auto p = resolve_params(spec, info);
  if (info.needs_grid && spec.grid.empty()) throw DomainError("generate: model '" + spec.model + "' needs a grid");
  if (!(spec.noise_sigma >= 0.0)) throw DomainError("generate: noise_sigma must be >= 0");
  const auto& g = spec.grid;
  std::vector<double> y(g.size());

  const std::string& m = spec.model;
  if (m == "passler") {
    const PasslerParams pp{p["E0"], p["alpha"], p["theta"], p["p"]};
    validate(pp);
    const auto form = p["full"] != 0.0 ? PasslerForm::full : PasslerForm::low_temperature;
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = passler_energy(pp, g[i], form);
    return make_points(spec, "temperature_K", "energy_ev", y);
  }
  if (m == "quench") {
    const QuenchParams q{p["I0"], p["A"], p["B"], p["E1"], p["E2"]};
    validate(q);
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = quench_intensity(q, g[i]);
    return make_points(spec, "temperature_K", "intensity", y);
  }
  if (m == "ratio") {
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = ratio_activation(p["r0"], p["Ea"], g[i]);
    return make_points(spec, "temperature_K", "ratio", y);
  }
  if (m == "saturation") {
    const SaturationParams s{p["I_inf"], p["P_sat"]};
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = saturation_intensity(s, g[i]);
    return make_points(spec, "pump_W_cm2", "intensity", y);
  }
  if (m == "zeeman") {
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = broadened_linewidth(p["gamma_B0"], p["eps_eff"], g[i]);
    return make_points(spec, "B_T", "fwhm_ev", y);
  }
  if (m == "spectrum" || m == "cu-doublet") {
    std::vector<PeakModel> peaks = spec.peaks;
    double c0 = p["c0"], c1 = m == "spectrum" ? p["c1"] : 0.0;
    if (m == "cu-doublet") {
      const auto& cat = Catalog::builtin();
      double center = p["center_ev"];
      if (center == 0.0) center = 0.5 * (cat.at("*Cu_0^0").energy_ev() + cat.at("*Cu_1^0").energy_ev());
      const double half = 0.5 * p["split_mev"] * mev;
      const double fw = p["fwhm_mev"] * mev;
      const double a1 = p["area"] / (1.0 + p["ratio"]);
      // *Cu_0^0 is the low-energy line and the brighter one.
      peaks = {gaussian_peak(center - half, fw, a1 * p["ratio"]), gaussian_peak(center + half, fw, a1)};
    }
    if (peaks.empty() && m == "spectrum") throw DomainError("generate: spectrum model needs peaks");
    for (const auto& pk : peaks) validate(pk);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double v = c0 + c1 * g[i];
      for (const auto& pk : peaks) v += eval_profile(pk, g[i]);
      y[i] = v;
    }
    return Spectrum(g, apply_noise(spec, y, 0.0));
  }
  if (m == "trpl" || m == "single-exp") {
    const std::size_t n = bin_count(p["n_bins"]);
    const double width = p["bin_width_ns"], start = p["bin_start_ns"];
    std::vector<double> counts;
    if (m == "trpl") {
      RateModelParams rp;
      for (const auto& name : rate_param_names()) {
        if (name != "bkg") set_rate_param(rp, name, p[name]);
      }
      const DecayHistogram grid_h(start, width, std::vector<double>(n, 0.0));
      counts = trpl_model_counts(grid_h, rp, p["bkg"], p["irf_fwhm_ns"]);
    } else {
      if (!(p["tau"] > 0.0)) throw DomainError("generate: tau must be > 0");
      counts.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = start + static_cast<double>(i) * width;
        counts[i] = (t >= 0.0 ? p["amp"] * std::exp(-t / p["tau"]) : 0.0) + p["bkg"];
      }
    }
    return DecayHistogram(start, width, apply_noise(spec, counts, 0.0));
  }
  if (m == "esr") {
    EsrSpectrum s;
    s.field_T = g;
    s.freq_hz = p["freq_hz"];
    for (std::size_t i = 0; i < g.size(); ++i) {
      y[i] = esr_model(g[i], p["B_res"], p["gauss_width"], p["lorentz_width"], p["amplitude"], p["offset"]);
    }
    s.signal = apply_noise(spec, y, -std::numeric_limits<double>::infinity());
    s.validate();
    return s;
  }
  throw DomainError("generate: unhandled model '" + m + "'");
}

std::vector<double> parse_grid(std::string_view text) {
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
  };
  text = trim(text);
  std::vector<double> out;
  auto split = [&](std::string_view s) {
    std::vector<double> v;
    while (true) {
      const auto c = s.find(',');
      v.push_back(parse_double(s.substr(0, c), 0));
      if (c == std::string_view::npos) break;
      s.remove_prefix(c + 1);
    }
    return v;
  };
  for (const std::string_view fn : {"linspace", "logspace"}) {
    if (text.substr(0, fn.size()) != fn) continue;
    auto body = trim(text.substr(fn.size()));
    if (body.size() < 2 || body.front() != '(' || body.back() != ')') {
      throw ParseError("grid: expected " + std::string(fn) + "(a, b, n)");
    }
    const auto args = split(body.substr(1, body.size() - 2));
    if (args.size() != 3 || args[2] < 1 || args[2] != std::floor(args[2])) {
      throw ParseError("grid: expected " + std::string(fn) + "(a, b, n) with integer n >= 1");
    }
    const auto n = static_cast<std::size_t>(args[2]);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      const double x = args[0] + f * (args[1] - args[0]);
      out.push_back(fn == "logspace" ? std::pow(10.0, x) : x);
    }
    return out;
  }
  return split(text);
}

GeneratorSpec parse_generator_spec(const std::map<std::string, std::string>& cfg) {
  GeneratorSpec s;
  for (const auto& [k, v] : cfg) {
    if (k == "model") {
      s.model = v;
    } else if (k == "seed") {
      const double d = parse_double(v, 0);
      if (d < 0 || d != std::floor(d) || d > 1.8e19) throw ParseError("seed must be a non-negative integer");
      s.seed = std::stoull(v);
    } else if (k == "noise") {
      try {
        s.noise = parse_noise_model(v);
      } catch (const DomainError& e) {
        throw ParseError(e.what());
      }
    } else if (k == "noise_sigma") {
      s.noise_sigma = parse_double(v, 0);
    } else if (k == "grid") {
      s.grid = parse_grid(v);
    } else if (k.rfind("peak", 0) == 0) {
      std::istringstream in(v);
      std::string shape;
      double c, fg, fl, a;
      if (!(in >> shape >> c >> fg >> fl >> a)) {
        throw ParseError("'" + k + "': expected 'shape center fwhm_g fwhm_l area'");
      }
      PeakModel pk{parse_peak_shape(shape), c, fg, fl, a};
      s.peaks.push_back(pk);
    } else {
      s.params[k] = parse_double(v, 0);
    }
  }
  if (s.model.empty()) throw ParseError("generator spec needs 'model'");
  return s;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Spectrum>) write_spectrum_csv(out, v);
        else if constexpr (std::is_same_v<T, DecayHistogram>) write_histogram_csv(out, v);
        else if constexpr (std::is_same_v<T, PointSeries>) write_points_csv(out, v.points, v.x_name, v.y_name);
        else write_esr_csv(out, v);
      },
      d);
}

}  // namespace zplkit::synth
