#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "report.hpp"
#include "zplkit/catalog.hpp"
#include "zplkit/errors.hpp"
#include "zplkit/io.hpp"
#include "zplkit/magneto.hpp"
#include "zplkit/peakfit.hpp"
#include "zplkit/synth/generate.hpp"
#include "zplkit/thermo.hpp"
#include "zplkit/trpl.hpp"
#include "zplkit/units.hpp"

namespace zplkit::cli {

namespace {

/// Columns for the optional tab-separated plot-data file.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "\t" : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "\t" : "") << format_number(r[i]);
      out << '\n';
    }
  }
};

/// Options every subcommand accepts.
struct Common {
  std::string output;
  std::string plot_data;
  std::string init;
  bool no_timestamp = false;
};

struct Context {
  Common common;
  std::map<std::string, double> init;  ///< parameters of the --init report

  std::optional<double> init_value(const std::string& name) const {
    auto it = init.find(name);
    if (it == init.end()) return std::nullopt;
    return it->second;
  }
};

using Action = std::function<void(Context&, Report&, Table&)>;

struct Command {
  std::string name;
  std::string help;
  std::function<Action(CLI::App&)> setup;
};

/// `key = value` config file in the same syntax as every other zplkit config.
/// Keys are long option names without the leading dashes.
class KeyValueConfig : public CLI::Config {
 public:
  explicit KeyValueConfig(std::string command) : command_(std::move(command)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::vector<CLI::ConfigItem> items;
    for (const auto& [k, v] : parse_config(in)) {
      CLI::ConfigItem item;
      item.parents = {command_};
      item.name = k;
      item.inputs = {v};
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  std::string command_;
};

void add_common(CLI::App& sub, Common& c, bool fits) {
  sub.add_option("-o,--output", c.output, "Report path (default: stdout)");
  sub.add_option("--plot-data", c.plot_data, "Write model curves as tab-separated values");
  sub.add_flag("--no-timestamp", c.no_timestamp, "Omit the timestamp so reports are byte-reproducible");
  if (fits) sub.add_option("--init", c.init, "Start from the parameters of an earlier report");
}

void set_status(Report& r, const FitReport& f) {
  r.status = std::string(to_string(f.status));
  r.residual_norm = f.residual_norm;
  r.has_residual = true;
  r.iterations = f.iterations;
}

Json samples_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

double from_report(const Context& ctx, const std::string& name, double fallback) {
  return ctx.init_value(name).value_or(fallback);
}

// ---------------------------------------------------------------------------
// Point-series fits

struct PointsInput {
  std::string path;
  std::string x_col;
  std::string y_col;
};

void add_points_input(CLI::App& sub, PointsInput& in, std::string x, std::string y) {
  in.x_col = std::move(x);
  in.y_col = std::move(y);
  sub.add_option("input", in.path, "CSV file")->required();
  sub.add_option("--x-col", in.x_col, "Abscissa column")->capture_default_str();
  sub.add_option("--y-col", in.y_col, "Ordinate column")->capture_default_str();
}

std::vector<Sample> load_points(const PointsInput& in, Report& r) {
  r.inputs["file"] = in.path;
  r.inputs["x_col"] = in.x_col;
  r.inputs["y_col"] = in.y_col;
  return parse_points_csv(std::filesystem::path(in.path), in.x_col, in.y_col);
}

void fill_points_table(Table& t, const PointsInput& in, std::span<const Sample> pts,
                       const std::function<double(double)>& model) {
  t.columns = {in.x_col, in.y_col, "model"};
  for (const auto& p : pts) t.rows.push_back({p.x, p.y, model(p.x)});
}

Action setup_fit_passler(CLI::App& sub) {
  struct O {
    PointsInput in;
    double theta = 406.0;
    std::string form = "low";
  };
  auto o = std::make_shared<O>();
  add_points_input(sub, o->in, "temperature_K", "energy_ev");
  sub.add_option("--theta", o->theta, "Phonon temperature held fixed [K]")->capture_default_str();
  sub.add_option("--form", o->form, "Model form: low or full")
      ->check(CLI::IsMember({"low", "full"}))
      ->capture_default_str();
  return [o](Context& ctx, Report& r, Table& t) {
    const auto pts = load_points(o->in, r);
    r.inputs["theta_K"] = number(o->theta);
    r.inputs["form"] = o->form;
    const auto form = o->form == "full" ? PasslerForm::full : PasslerForm::low_temperature;
    std::optional<PasslerParams> init;
    if (ctx.init_value("E0") && ctx.init_value("alpha") && ctx.init_value("p")) {
      init = PasslerParams{*ctx.init_value("E0"), *ctx.init_value("alpha"), o->theta, *ctx.init_value("p")};
    }
    const auto f = fit_passler(pts, o->theta, form, init ? &*init : nullptr);
    r.set("E0", f.value.E0, f.sigma.E0);
    r.set("alpha", f.value.alpha, f.sigma.alpha);
    r.set("p", f.value.p, f.sigma.p);
    r.set_fixed("theta", o->theta);
    set_status(r, f.report);
    r.derived["E0_nm"] = number(ev_to_nm(f.value.E0));
    r.derived["alpha_ueV_per_K"] = number(f.value.alpha / uev);
    r.derived["A_coefficient"] = number(passler_coefficient(f.value));
    fill_points_table(t, o->in, pts, [v = f.value, form](double T) { return passler_energy(v, T, form); });
  };
}

Action setup_fit_quench(CLI::App& sub) {
  struct O {
    PointsInput in;
    double E1_mev = 0.56;
    double E2_mev = -1.0;
    bool e2_free = false;
  };
  auto o = std::make_shared<O>();
  add_points_input(sub, o->in, "temperature_K", "intensity");
  sub.add_option("--E1-mev", o->E1_mev, "First activation energy, held fixed [meV]")->capture_default_str();
  sub.add_option("--E2-mev", o->E2_mev, "Second activation energy [meV]; the start value with --e2-free");
  sub.add_flag("--e2-free", o->e2_free, "Fit E2 (without --E2-mev the start is found by grid search)");
  return [o](Context& ctx, Report& r, Table& t) {
    const auto pts = load_points(o->in, r);
    r.inputs["E1_mev"] = number(o->E1_mev);
    r.inputs["E2_mev"] = number(o->E2_mev);
    r.inputs["e2_free"] = o->e2_free;
    if (!o->e2_free && !(o->E2_mev > 0.0)) throw DomainError("fit-quench: --E2-mev is required unless --e2-free");
    double E2 = o->E2_mev > 0.0 ? o->E2_mev * mev : 0.0;
    std::optional<QuenchParams> init;
    if (ctx.init_value("I0") && ctx.init_value("A") && ctx.init_value("B")) {
      if (o->e2_free) E2 = from_report(ctx, "E2", E2);
      init = QuenchParams{*ctx.init_value("I0"), *ctx.init_value("A"), *ctx.init_value("B"), o->E1_mev * mev, E2};
    }
    const auto f = fit_quench(pts, o->E1_mev * mev, E2, o->e2_free, init ? &*init : nullptr);
    r.set("I0", f.value.I0, f.sigma.I0);
    r.set("A", f.value.A, f.sigma.A);
    r.set("B", f.value.B, f.sigma.B);
    r.set_fixed("E1", f.value.E1);
    if (o->e2_free) {
      r.set("E2", f.value.E2, f.sigma.E2);
    } else {
      r.set_fixed("E2", f.value.E2);
    }
    set_status(r, f.report);
    r.derived["E1_mev"] = number(f.value.E1 / mev);
    r.derived["E2_mev"] = number(f.value.E2 / mev);
    r.derived["E2_sigma_mev"] = number(f.sigma.E2 / mev);
    fill_points_table(t, o->in, pts, [v = f.value](double T) { return quench_intensity(v, T); });
  };
}

Action setup_fit_ratio(CLI::App& sub) {
  auto o = std::make_shared<PointsInput>();
  add_points_input(sub, *o, "temperature_K", "ratio");
  return [o](Context&, Report& r, Table& t) {
    const auto pts = load_points(*o, r);
    const auto f = fit_ratio_activation(pts);
    r.set("r0", f.r0, f.r0_sigma);
    r.set("Ea", f.Ea, f.Ea_sigma);
    set_status(r, f.report);
    r.derived["Ea_mev"] = number(f.Ea / mev);
    r.derived["Ea_sigma_mev"] = number(f.Ea_sigma / mev);
    fill_points_table(t, *o, pts, [f](double T) { return ratio_activation(f.r0, f.Ea, T); });
  };
}

Action setup_fit_saturation(CLI::App& sub) {
  auto o = std::make_shared<PointsInput>();
  add_points_input(sub, *o, "pump_W_cm2", "intensity");
  return [o](Context& ctx, Report& r, Table& t) {
    const auto pts = load_points(*o, r);
    std::optional<SaturationParams> init;
    if (ctx.init_value("I_inf") && ctx.init_value("P_sat")) {
      init = SaturationParams{*ctx.init_value("I_inf"), *ctx.init_value("P_sat")};
    }
    const auto f = fit_saturation(pts, init ? &*init : nullptr);
    r.set("I_inf", f.value.I_inf, f.sigma.I_inf);
    r.set("P_sat", f.value.P_sat, f.sigma.P_sat);
    set_status(r, f.report);
    fill_points_table(t, *o, pts, [v = f.value](double P) { return saturation_intensity(v, P); });
  };
}

Action setup_fit_magneto(CLI::App& sub) {
  auto o = std::make_shared<PointsInput>();
  add_points_input(sub, *o, "B_T", "fwhm_ev");
  return [o](Context&, Report& r, Table& t) {
    const auto pts = load_points(*o, r);
    const auto f = fit_zeeman_broadening(pts);
    r.set("gamma_B0", f.gamma_B0, f.gamma_B0_sigma);
    r.set("eps_eff", f.eps_eff, f.eps_eff_sigma);
    set_status(r, f.report);
    r.derived["gamma_B0_ueV"] = number(f.gamma_B0 / uev);
    r.derived["eps_eff_ueV_per_T"] = number(f.eps_eff / uev);
    fill_points_table(t, *o, pts, [f](double B) { return broadened_linewidth(f.gamma_B0, f.eps_eff, B); });
  };
}

// ---------------------------------------------------------------------------
// Spectra

std::string peak_key(std::size_t i, const char* field) { return "peak" + std::to_string(i + 1) + "_" + field; }

std::vector<PeakModel> peaks_from_report(const Context& ctx) {
  std::vector<PeakModel> out;
  for (std::size_t i = 0;; ++i) {
    const auto c = ctx.init_value(peak_key(i, "center_ev"));
    const auto a = ctx.init_value(peak_key(i, "area"));
    if (!c || !a) break;
    const auto g = ctx.init_value(peak_key(i, "fwhm_g_ev"));
    const auto l = ctx.init_value(peak_key(i, "fwhm_l_ev"));
    if (g && l) {
      out.push_back(voigt_peak(*c, *g, *l, *a));
    } else if (g) {
      out.push_back(gaussian_peak(*c, *g, *a));
    } else if (l) {
      out.push_back(lorentzian_peak(*c, *l, *a));
    } else {
      throw ParseError("init report: " + peak_key(i, "*") + " has no width");
    }
  }
  return out;
}

std::vector<PeakModel> peaks_at(const Spectrum& s, std::span<const double> centers_nm, double fwhm_nm,
                                PeakShape shape) {
  const auto e = s.energy();
  const auto y = s.intensity();
  const double floor = *std::min_element(y.begin(), y.end());
  std::vector<PeakModel> out;
  for (double c_nm : centers_nm) {
    const double c = nm_to_ev(c_nm);
    const double fw = std::abs(nm_to_ev(c_nm - 0.5 * fwhm_nm) - nm_to_ev(c_nm + 0.5 * fwhm_nm));
    const auto it = std::lower_bound(e.begin(), e.end(), c);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - e.begin()), e.size() - 1);
    const double area = std::max(y[k] - floor, 0.0) * fw * 1.0645;
    switch (shape) {
      case PeakShape::gaussian: out.push_back(gaussian_peak(c, fw, area)); break;
      case PeakShape::lorentzian: out.push_back(lorentzian_peak(c, fw, area)); break;
      // Equal Gaussian and Lorentzian widths with the requested total FWHM.
      case PeakShape::voigt: out.push_back(voigt_peak(c, fw / 1.6376, fw / 1.6376, area)); break;
    }
  }
  return out;
}

Action setup_fit_peaks(CLI::App& sub) {
  struct O {
    std::string path;
    std::string shape = "voigt";
    std::vector<double> window;
    std::vector<double> centers;
    double fwhm_nm = 0.6;
    double prominence = 8.0;
    double tol = 0.5;
    bool no_baseline = false;
    std::string catalog;
  };
  auto o = std::make_shared<O>();
  sub.add_option("input", o->path, "Spectrum CSV")->required();
  sub.add_option("--shape", o->shape, "gaussian, lorentzian or voigt")
      ->check(CLI::IsMember({"gaussian", "lorentzian", "voigt"}))
      ->capture_default_str();
  sub.add_option("--window", o->window, "Wavelength window LO HI [nm]")->expected(2)->delimiter(',');
  sub.add_option("--peaks", o->centers, "Initial centres [nm]; default: automatic seeding")->delimiter(',');
  sub.add_option("--fwhm-nm", o->fwhm_nm, "Initial FWHM for --peaks [nm]")->capture_default_str();
  sub.add_option("--prominence", o->prominence, "Seeding threshold in robust-noise units")->capture_default_str();
  sub.add_option("--tol", o->tol, "Catalog matching tolerance [nm]")->capture_default_str();
  sub.add_option("--catalog", o->catalog, "Extra catalog CSV");
  sub.add_flag("--no-baseline", o->no_baseline, "Fit without the affine background");
  return [o](Context& ctx, Report& r, Table& t) {
    r.inputs["file"] = o->path;
    r.inputs["shape"] = o->shape;
    Spectrum s = parse_spectrum_csv(std::filesystem::path(o->path));
    if (o->window.size() == 2) {
      const double lo = std::min(o->window[0], o->window[1]), hi = std::max(o->window[0], o->window[1]);
      r.inputs["window_nm"] = {number(lo), number(hi)};
      s = resample_window(s, nm_to_ev(hi), nm_to_ev(lo));
    }
    const auto shape = parse_peak_shape(o->shape);
    auto init = peaks_from_report(ctx);
    if (init.empty()) {
      init = o->centers.empty() ? seed_peaks(s, shape, o->prominence) : peaks_at(s, o->centers, o->fwhm_nm, shape);
    }
    if (init.empty()) throw FitError("fit-peaks: no peak above the seeding threshold");

    const auto f = fit_peaks(s, init, !o->no_baseline);
    Catalog cat = load_default_catalog();
    if (!o->catalog.empty()) cat = cat.extended(parse_catalog_csv(std::filesystem::path(o->catalog)));
    const double total = f.total_area();
    for (std::size_t i = 0; i < f.peaks.size(); ++i) {
      const auto& p = f.peaks[i];
      r.set(peak_key(i, "center_ev"), p.value.center, p.sigma.center);
      if (p.value.shape != PeakShape::lorentzian) r.set(peak_key(i, "fwhm_g_ev"), p.value.fwhm_g, p.sigma.fwhm_g);
      if (p.value.shape != PeakShape::gaussian) r.set(peak_key(i, "fwhm_l_ev"), p.value.fwhm_l, p.sigma.fwhm_l);
      r.set(peak_key(i, "area"), p.value.area, p.sigma.area);
      Json d;
      d["shape"] = std::string(to_string(p.value.shape));
      d["center_nm"] = number(p.center_nm);
      d["fwhm_ev"] = number(p.fwhm_ev);
      d["fwhm_ev_sigma"] = number(p.fwhm_ev_sigma);
      d["fwhm_nm"] = number(p.fwhm_nm);
      d["fwhm_nm_sigma"] = number(p.fwhm_nm_sigma);
      d["area_fraction"] = number(total > 0.0 ? p.value.area / total : 0.0);
      Json labels = Json::array();
      for (const auto& l : identify(p.center_nm, o->tol, cat)) labels.push_back(l.label);
      d["candidates"] = labels;
      r.derived["peak" + std::to_string(i + 1)] = d;
    }
    if (f.baseline.enabled) {
      r.set("c0", f.baseline.c0, f.baseline.c0_sigma);
      r.set("c1", f.baseline.c1, f.baseline.c1_sigma);
    }
    r.derived["total_area"] = number(total);
    set_status(r, f.report);

    t.columns = {"energy_ev", "wavelength_nm", "intensity", "model", "baseline"};
    for (std::size_t i = 0; i < f.peaks.size(); ++i) t.columns.push_back("peak" + std::to_string(i + 1));
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double e = s.energy()[k];
      std::vector<double> row = {e, ev_to_nm(e), s.intensity()[k], f(e), f.baseline(e)};
      for (const auto& p : f.peaks) row.push_back(eval_profile(p.value, e));
      t.rows.push_back(std::move(row));
    }
  };
}

// ---------------------------------------------------------------------------
// Time-resolved PL

struct RateOptions {
  RateModelParams p;
  double bkg = 0.0;
  double irf_fwhm = 0.4;
};

void add_rate_options(CLI::App& sub, RateOptions& o) {
  sub.add_option("--tau0", o.p.tau0, "Emitting-state lifetime [ns]")->capture_default_str();
  sub.add_option("--tau-ex", o.p.tau_ex, "Reservoir lifetime [ns]")->capture_default_str();
  sub.add_option("--tau-f", o.p.tau_f, "Feeding time [ns]")->capture_default_str();
  sub.add_option("--N0", o.p.N0, "Available emitting states")->capture_default_str();
  sub.add_option("--n0-init", o.p.n0_init, "Initial emitting population")->capture_default_str();
  sub.add_option("--nex-init", o.p.nex_init, "Initial reservoir population")->capture_default_str();
  sub.add_option("--irf-fwhm", o.irf_fwhm, "Instrument response FWHM [ns]")->capture_default_str();
}

void rate_inputs(Report& r, const RateOptions& o) {
  for (const auto& n : rate_param_names()) {
    if (n != "bkg") r.inputs[n] = number(get_rate_param(o.p, n));
  }
  r.inputs["irf_fwhm_ns"] = number(o.irf_fwhm);
}

Action setup_simulate_trpl(CLI::App& sub) {
  struct O {
    RateOptions rate;
    double bin_width = 0.4;
    std::size_t n_bins = 4096;
    double bin_start = 0.0;
    std::string signal;
  };
  auto o = std::make_shared<O>();
  add_rate_options(sub, o->rate);
  sub.add_option("--scale", o->rate.p.scale, "Counts per unit population")->capture_default_str();
  sub.add_option("--bkg", o->rate.bkg, "Constant background [counts/bin]")->capture_default_str();
  sub.add_option("--bin-width", o->bin_width, "Bin width [ns]")->capture_default_str();
  sub.add_option("--n-bins", o->n_bins, "Number of bins")->capture_default_str();
  sub.add_option("--bin-start", o->bin_start, "Time of the first bin [ns]")->capture_default_str();
  sub.add_option("--signal", o->signal, "Write the noiseless histogram as time_ns,counts CSV");
  return [o](Context&, Report& r, Table& t) {
    rate_inputs(r, o->rate);
    r.inputs["scale"] = number(o->rate.p.scale);
    r.inputs["bkg"] = number(o->rate.bkg);
    r.inputs["bin_width_ns"] = number(o->bin_width);
    r.inputs["n_bins"] = o->n_bins;
    r.inputs["bin_start_ns"] = number(o->bin_start);
    validate(o->rate.p);
    if (o->n_bins < 2) throw DomainError("simulate-trpl: --n-bins must be >= 2");
    const DecayHistogram grid(o->bin_start, o->bin_width, std::vector<double>(o->n_bins, 0.0));
    const auto counts = trpl_model_counts(grid, o->rate.p, o->rate.bkg, o->rate.irf_fwhm);
    const DecayHistogram h(o->bin_start, o->bin_width, counts);

    // Trajectory on the bin stamps from excitation on, with t = 0 prepended when no stamp hits it.
    std::size_t first = 0;
    while (first < h.size() && h.time(first) < 0.0) ++first;
    std::vector<double> tt;
    const std::size_t lead = first < h.size() && h.time(first) > 0.0 ? 1 : 0;
    if (lead) tt.push_back(0.0);
    for (std::size_t i = first; i < h.size(); ++i) tt.push_back(h.time(i));
    const auto tr = simulate_rate_eqs(o->rate.p, tt);

    for (const auto& n : rate_param_names()) {
      if (n != "bkg") r.set_fixed(n, get_rate_param(o->rate.p, n));
    }
    r.set_fixed("bkg", o->rate.bkg);
    r.status = "ok";
    const auto peak = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    r.derived["peak_time_ns"] = number(h.time(peak));
    r.derived["signal_peak_time_ns"] = number(peak_time(tr));
    r.derived["peak_counts"] = number(counts[peak]);
    if (!o->signal.empty()) {
      std::ofstream f(o->signal);
      if (!f) throw ParseError("cannot write '" + o->signal + "'");
      write_histogram_csv(f, h);
      r.inputs["signal_file"] = o->signal;
    }
    t.columns = {"time_ns", "n0", "nex", "signal", "counts"};
    for (std::size_t i = 0; i < h.size(); ++i) {
      const bool on = i >= first;
      const std::size_t k = on ? i - first + lead : 0;
      t.rows.push_back({h.time(i), on ? tr.n0[k] : 0.0, on ? tr.nex[k] : 0.0, on ? tr.signal[k] : 0.0, counts[i]});
    }
  };
}

std::set<std::string> split_names(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) out.insert(tok);
  }
  return out;
}

Action setup_fit_trpl(CLI::App& sub) {
  struct O {
    std::string path;
    std::string model = "rate";
    RateOptions rate;
    double scale = -1.0;
    double bkg = -1.0;
    std::string fix = "auto";
    bool no_neyman = false;
    double tail_start = std::numeric_limits<double>::quiet_NaN();
  };
  auto o = std::make_shared<O>();
  sub.add_option("input", o->path, "Histogram CSV")->required();
  sub.add_option("--model", o->model, "rate or single-exp")
      ->check(CLI::IsMember({"rate", "single-exp"}))
      ->capture_default_str();
  add_rate_options(sub, o->rate);
  sub.add_option("--scale", o->scale, "Initial scale (default: from the count maximum)");
  sub.add_option("--bkg", o->bkg, "Initial background (default: mean of the t < 0 bins)");
  sub.add_option("--fix", o->fix,
                 "Comma-separated parameters held fixed; 'auto' fixes N0, n0_init, nex_init and, "
                 "when the rise spans < 20 bins, tau_ex")
      ->capture_default_str();
  sub.add_flag("--no-neyman", o->no_neyman, "Unit weights instead of 1/max(counts, 1)");
  sub.add_option("--tail-start", o->tail_start, "single-exp: first time fitted [ns] (default: count maximum)");
  return [o](Context& ctx, Report& r, Table& t) {
    r.inputs["file"] = o->path;
    r.inputs["model"] = o->model;
    const auto h = parse_histogram_csv(std::filesystem::path(o->path));
    const auto times = h.times();
    const auto counts = h.counts();

    if (o->model == "single-exp") {
      double ts = o->tail_start;
      if (std::isnan(ts)) ts = h.time(static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
      r.inputs["tail_start_ns"] = number(ts);
      r.inputs["neyman"] = !o->no_neyman;
      const auto f = fit_single_exp(h, ts, !o->no_neyman);
      r.set("tau", f.tau, f.tau_sigma);
      r.set("amp", f.amp, f.amp_sigma);
      r.set("bkg", f.bkg, f.bkg_sigma);
      set_status(r, f.report);
      r.derived["gamma_tot_per_us"] = number(1e3 / f.tau);
      t.columns = {"time_ns", "counts", "model"};
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double m = times[i] >= f.tail_start ? f.amp * std::exp(-(times[i] - f.tail_start) / f.tau) + f.bkg
                                                  : std::numeric_limits<double>::quiet_NaN();
        t.rows.push_back({times[i], counts[i], m});
      }
      return;
    }

    RateModelParams init = o->rate.p;
    for (const auto& n : rate_param_names()) {
      if (n != "bkg") set_rate_param(init, n, from_report(ctx, n, get_rate_param(init, n)));
    }
    TrplFitOptions fo;
    fo.irf_fwhm_ns = o->rate.irf_fwhm;
    fo.neyman_weights = !o->no_neyman;
    fo.bkg_init = from_report(ctx, "bkg", o->bkg);
    double scale = ctx.init_value("scale").value_or(o->scale);
    if (!(scale > 0.0)) {
      // Match the model maximum to the background-subtracted count maximum.
      RateModelParams unit = init;
      unit.scale = 1.0;
      const auto m = trpl_model_counts(h, unit, 0.0, fo.irf_fwhm_ns, fo.ode);
      const double mmax = *std::max_element(m.begin(), m.end());
      const double cmax = *std::max_element(counts.begin(), counts.end());
      scale = mmax > 0.0 ? std::max(cmax - std::max(fo.bkg_init, 0.0), 1.0) / mmax : 1.0;
    }
    init.scale = scale;
    const auto rb = rise_bins(h);
    std::set<std::string> fix;
    if (o->fix == "auto") {
      fix = {"N0", "n0_init", "nex_init"};
      if (rb < 20) fix.insert("tau_ex");
    } else {
      fix = split_names(o->fix);
    }
    Json fixed = Json::array();
    for (const auto& f : fix) fixed.push_back(f);
    rate_inputs(r, o->rate);
    r.inputs["fix"] = fixed;
    r.inputs["neyman"] = fo.neyman_weights;

    const auto f = fit_trpl_rate(h, init, fix, fo);
    for (const auto& n : rate_param_names()) {
      if (n == "bkg") {
        fix.count(n) ? r.set_fixed(n, f.bkg) : r.set(n, f.bkg, f.bkg_sigma);
      } else {
        const double v = get_rate_param(f.value, n), s = get_rate_param(f.sigma, n);
        fix.count(n) ? r.set_fixed(n, v) : r.set(n, v, s);
      }
    }
    set_status(r, f.report);
    r.derived["rise_bins"] = rb;
    r.derived["tau0_us"] = number(f.value.tau0 * 1e-3);
    r.derived["gamma_tot_per_us"] = number(1e3 / f.value.tau0);
    const auto model = trpl_model_counts(h, f.value, f.bkg, fo.irf_fwhm_ns, fo.ode);
    t.columns = {"time_ns", "counts", "model"};
    for (std::size_t i = 0; i < h.size(); ++i) t.rows.push_back({times[i], counts[i], model[i]});
  };
}

Action setup_decompose_rates(CLI::App& sub) {
  struct O {
    double gamma_tot = 0.0;
    double I_T = std::numeric_limits<double>::quiet_NaN();
    double I_0 = 1.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    std::string convention = "hbar";
  };
  auto o = std::make_shared<O>();
  sub.add_option("--gamma-tot", o->gamma_tot, "Total decay rate [1/us]")->required();
  auto* ratio = sub.add_option("--ratio", o->ratio, "Quantum efficiency I_T/I_0");
  auto* it = sub.add_option("--I-T", o->I_T, "Integrated intensity at temperature T");
  sub.add_option("--I-0", o->I_0, "Integrated intensity extrapolated to T = 0")->capture_default_str();
  ratio->excludes(it);
  sub.add_option("--convention", o->convention, "Transform limit: hbar (FWHM = hbar Gamma_r) or half-hbar")
      ->check(CLI::IsMember({"hbar", "half-hbar"}))
      ->capture_default_str();
  return [o](Context&, Report& r, Table& t) {
    const double IT = std::isnan(o->ratio) ? o->I_T : o->ratio;
    const double I0 = std::isnan(o->ratio) ? o->I_0 : 1.0;
    if (std::isnan(IT)) throw DomainError("decompose-rates: give --ratio or --I-T");
    r.inputs["gamma_tot_per_us"] = number(o->gamma_tot);
    r.inputs["I_T"] = number(IT);
    r.inputs["I_0"] = number(I0);
    r.inputs["convention"] = o->convention;
    const auto conv = o->convention == "hbar" ? FourierConvention::hbar_gamma : FourierConvention::half_hbar_gamma;
    const auto d = decompose_rates(o->gamma_tot, IT, I0, conv);
    r.set_fixed("gamma_r", d.gamma_r);
    r.set_fixed("gamma_nr", d.gamma_nr);
    r.status = "ok";
    r.derived["quantum_efficiency"] = number(IT / I0);
    r.derived["fourier_fwhm_ev"] = number(d.fourier_fwhm);
    r.derived["fourier_fwhm_nev"] = number(d.fourier_fwhm / nev);
    t.columns = {"gamma_tot_per_us", "gamma_r_per_us", "gamma_nr_per_us", "fourier_fwhm_ev"};
    t.rows.push_back({d.gamma_tot, d.gamma_r, d.gamma_nr, d.fourier_fwhm});
  };
}

// ---------------------------------------------------------------------------
// Magnetic field

Action setup_eval_zeeman(CLI::App& sub) {
  struct O {
    ZeemanTerms z;
    std::string fields = "linspace(0, 1, 11)";
    double gamma_B0 = 0.0;
    double eps_eff = 0.0;
    double profile_field = std::numeric_limits<double>::quiet_NaN();
    double lorentz_fraction = 0.0;
    std::string mode = "symmetric";
    std::string detuning;
  };
  auto o = std::make_shared<O>();
  sub.add_option("--g-e", o->z.g_e, "Electron g-factor")->capture_default_str();
  sub.add_option("--g-h", o->z.g_h, "Hole g-factor")->capture_default_str();
  sub.add_option("--chi", o->z.chi, "Diamagnetic coefficient [eV/T^2]")->capture_default_str();
  sub.add_option("--sign-e", o->z.sign_e, "Electron branch sign (+1 or -1)")->capture_default_str();
  sub.add_option("--sign-h", o->z.sign_h, "Hole branch sign (+1 or -1)")->capture_default_str();
  sub.add_option("--fields", o->fields, "Field grid [T]: linspace(a, b, n), logspace(...) or a list")
      ->capture_default_str();
  sub.add_option("--gamma-b0", o->gamma_B0, "Zero-field FWHM [eV] for the broadened linewidth");
  sub.add_option("--eps-eff", o->eps_eff, "Effective splitting slope [eV/T]");
  sub.add_option("--profile-field", o->profile_field, "Evaluate the ensemble lineshape at this field [T]");
  sub.add_option("--lorentz-fraction", o->lorentz_fraction, "Lorentzian share of the zero-field FWHM")
      ->capture_default_str();
  sub.add_option("--mode", o->mode, "Branch mode: single, symmetric or gaussian_ensemble")->capture_default_str();
  sub.add_option("--detuning", o->detuning, "Detuning grid [eV] for --profile-field");
  return [o](Context&, Report& r, Table& t) {
    validate(o->z);
    const auto B = synth::parse_grid(o->fields);
    r.inputs["fields"] = o->fields;
    r.set_fixed("g_e", o->z.g_e);
    r.set_fixed("g_h", o->z.g_h);
    r.set_fixed("chi", o->z.chi);
    const bool widths = o->gamma_B0 > 0.0;
    if (widths) {
      r.set_fixed("gamma_B0", o->gamma_B0);
      r.set_fixed("eps_eff", o->eps_eff);
    }
    std::vector<double> shift, width;
    for (double b : B) {
      shift.push_back(zeeman_shift(o->z, b));
      if (widths) width.push_back(broadened_linewidth(o->gamma_B0, o->eps_eff, b));
    }
    r.status = "ok";
    r.derived["fields_T"] = samples_json(B);
    r.derived["shift_ev"] = samples_json(shift);
    if (widths) r.derived["linewidth_ev"] = samples_json(width);

    if (!std::isnan(o->profile_field)) {
      if (!widths) throw DomainError("eval-zeeman: --profile-field needs --gamma-b0 and --eps-eff");
      const auto mode = parse_branch_mode(o->mode);
      const auto m = make_magneto_params(o->gamma_B0, o->eps_eff, o->lorentz_fraction);
      const double span = 4.0 * broadened_linewidth(o->gamma_B0, o->eps_eff, o->profile_field);
      const auto det = o->detuning.empty()
                           ? synth::parse_grid("linspace(" + format_number(-span) + ", " + format_number(span) + ", 801)")
                           : synth::parse_grid(o->detuning);
      const auto prof = eval_magneto_profile(m, o->profile_field, det, mode);
      r.inputs["profile_field_T"] = number(o->profile_field);
      r.inputs["mode"] = std::string(to_string(mode));
      r.inputs["lorentz_fraction"] = number(o->lorentz_fraction);
      r.derived["sigma_G"] = number(m.sigma_G);
      r.derived["sigma_L"] = number(m.sigma_L);
      t.columns = {"detuning_ev", "intensity"};
      for (std::size_t i = 0; i < det.size(); ++i) t.rows.push_back({det[i], prof[i]});
      return;
    }
    t.columns = {"B_T", "shift_ev"};
    if (widths) t.columns.push_back("linewidth_ev");
    for (std::size_t i = 0; i < B.size(); ++i) {
      t.rows.push_back({B[i], shift[i]});
      if (widths) t.rows.back().push_back(width[i]);
    }
  };
}

Action setup_fit_esr(CLI::App& sub) {
  struct O {
    std::string path;
    bool no_gaussian = false;
    double threshold = 5.0;
  };
  auto o = std::make_shared<O>();
  sub.add_option("input", o->path, "ESR CSV (field_T,signal with '# freq_hz:')")->required();
  sub.add_flag("--no-gaussian", o->no_gaussian, "Hold the Gaussian width at zero");
  sub.add_option("--threshold", o->threshold, "Lobe detection threshold in robust-noise units")
      ->capture_default_str();
  return [o](Context&, Report& r, Table& t) {
    r.inputs["file"] = o->path;
    r.inputs["fit_gaussian"] = !o->no_gaussian;
    const auto s = parse_esr_csv(std::filesystem::path(o->path));
    r.inputs["freq_hz"] = number(s.freq_hz);
    EsrFitOptions fo;
    fo.fit_gaussian = !o->no_gaussian;
    fo.detection_threshold = o->threshold;
    const auto f = fit_esr_line(s, fo);
    r.set("B_res", f.B_res, f.B_res_sigma);
    r.set("lorentz_width", f.lorentz_width, f.lorentz_width_sigma);
    o->no_gaussian ? r.set_fixed("gauss_width", 0.0) : r.set("gauss_width", f.gauss_width, f.gauss_width_sigma);
    r.set_fixed("amplitude", f.amplitude);
    r.set_fixed("offset", f.offset);
    r.uncertainties["amplitude"] = nullptr;
    r.uncertainties["offset"] = nullptr;
    set_status(r, f.report);
    r.derived["g"] = number(f.g);
    r.derived["g_sigma"] = number(f.g_sigma);
    r.derived["B_res_mT"] = number(f.B_res * 1e3);
    r.derived["lorentz_width_G"] = number(f.lorentz_width * 1e4);
    r.derived["gauss_width_G"] = number(f.gauss_width * 1e4);
    t.columns = {"field_T", "signal", "model"};
    for (std::size_t i = 0; i < s.field_T.size(); ++i) {
      const double b = s.field_T[i];
      t.rows.push_back({b, s.signal[i], esr_model(b, f.B_res, f.gauss_width, f.lorentz_width, f.amplitude, f.offset)});
    }
  };
}

// ---------------------------------------------------------------------------
// Catalog

Action setup_identify(CLI::App& sub) {
  struct O {
    double center = 0.0;
    double tol = 0.5;
    std::string catalog;
    bool allow_override = false;
  };
  auto o = std::make_shared<O>();
  sub.add_option("--center", o->center, "Line centre [nm]")->required();
  sub.add_option("--tol", o->tol, "Tolerance [nm]")->capture_default_str();
  sub.add_option("--catalog", o->catalog, "Extra catalog CSV (ZPLKIT_CATALOG is read too)");
  sub.add_flag("--allow-override", o->allow_override, "Let the extra catalog replace built-in labels");
  return [o](Context&, Report& r, Table& t) {
    r.inputs["center_nm"] = number(o->center);
    r.inputs["tol_nm"] = number(o->tol);
    Catalog cat = load_default_catalog(o->allow_override);
    if (!o->catalog.empty()) {
      r.inputs["catalog"] = o->catalog;
      cat = cat.extended(parse_catalog_csv(std::filesystem::path(o->catalog)), o->allow_override);
    }
    const auto hits = identify(o->center, o->tol, cat);
    Json list = Json::array();
    t.columns = {"center_nm", "offset_nm", "energy_ev"};
    for (const auto& l : hits) {
      Json e;
      e["label"] = l.label;
      e["center_nm"] = number(l.center_nm);
      e["energy_ev"] = number(l.energy_ev());
      e["offset_nm"] = number(l.center_nm - o->center);
      e["fwhm_hint_nm"] = l.fwhm_hint_nm ? number(*l.fwhm_hint_nm) : Json(nullptr);
      e["kind"] = std::string(to_string(l.kind));
      e["notes"] = l.notes;
      list.push_back(e);
      t.rows.push_back({l.center_nm, l.center_nm - o->center, l.energy_ev()});
    }
    r.status = "ok";
    r.derived["count"] = hits.size();
    r.extra["candidates"] = list;
  };
}

const std::vector<Command>& commands() {
  static const std::vector<Command> c = {
      {"fit-peaks", "Decompose a PL spectrum into Gaussian, Lorentzian or Voigt lines", setup_fit_peaks},
      {"fit-passler", "Fit the zero-phonon-line redshift E(T)", setup_fit_passler},
      {"fit-quench", "Fit two-channel thermal quenching I(T)", setup_fit_quench},
      {"fit-ratio", "Fit an Arrhenius intensity ratio r(T)", setup_fit_ratio},
      {"fit-saturation", "Fit pump-power saturation I(P)", setup_fit_saturation},
      {"simulate-trpl", "Evaluate the rate-equation model on a histogram grid", setup_simulate_trpl},
      {"fit-trpl", "Fit a TCSPC decay histogram", setup_fit_trpl},
      {"decompose-rates", "Split a decay rate into radiative and nonradiative parts", setup_decompose_rates},
      {"fit-magneto", "Fit linewidth against magnetic field", setup_fit_magneto},
      {"eval-zeeman", "Evaluate Zeeman shifts, linewidths and the ensemble lineshape", setup_eval_zeeman},
      {"fit-esr", "Fit a CW-ESR derivative line and report the g-factor", setup_fit_esr},
      {"identify", "Match a line centre against the emitter catalog", setup_identify},
  };
  return c;
}

std::string usage() {
  std::ostringstream os;
  os << "Usage: zplkit <command> [options]\n\nCommands:\n";
  for (const auto& c : commands()) os << "  " << c.name << std::string(18 - c.name.size(), ' ') << c.help << '\n';
  os << "  synth             Generate a synthetic dataset from a generator config\n";
  os << "\nRun 'zplkit <command> --help' for the options of one command.\n";
  return os.str();
}

/// Opens `path` for writing, or returns `fallback` for an empty path or "-".
std::ostream& open_output(const std::string& path, std::ostream& fallback, std::unique_ptr<std::ofstream>& hold) {
  if (path.empty() || path == "-") return fallback;
  hold = std::make_unique<std::ofstream>(path);
  if (!*hold) throw ParseError("cannot write '" + path + "'");
  return *hold;
}

int run_synth(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::string spec_path, output;
  std::optional<std::uint64_t> seed;
  auto* sub = app.add_subcommand("synth", "Generate a synthetic dataset from a generator config");
  sub->add_option("--spec", spec_path, "Generator config (model, grid, noise, seed, parameters)")->required();
  sub->add_option("--seed", seed, "Override the config seed");
  sub->add_option("-o,--output", output, "Dataset path (default: stdout)");
  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }
  try {
    auto spec = synth::parse_generator_spec(parse_config_file(spec_path));
    if (seed) spec.seed = *seed;
    const auto d = synth::generate(spec);
    std::unique_ptr<std::ofstream> hold;
    synth::write_dataset(open_output(output, out, hold), d);
    return exit_ok;
  } catch (const std::exception& e) {
    err << "zplkit synth: " << e.what() << '\n';
    return exit_io;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return exit_usage;
  }
  if (args[0] == "-h" || args[0] == "--help") {
    out << usage();
    return exit_ok;
  }
  if (args[0] == "--version") {
    out << "zplkit " << Report{}.to_json(false)["version"].get<std::string>() << '\n';
    return exit_ok;
  }
  const std::string name = args[0];
  CLI::App app{"Photoluminescence analysis of silicon color centers", "zplkit"};
  app.require_subcommand(1, 1);
  if (name == "synth") return run_synth(app, args, out, err);

  const auto it = std::find_if(commands().begin(), commands().end(), [&](const Command& c) { return c.name == name; });
  if (it == commands().end()) {
    err << "zplkit: unknown command '" << name << "'\n\n" << usage();
    return exit_usage;
  }

  Context ctx;
  auto* sub = app.add_subcommand(it->name, it->help);
  const bool fits = name.rfind("fit-", 0) == 0;
  add_common(*sub, ctx.common, fits);
  Action action = it->setup(*sub);
  sub->fallthrough();
  app.set_config("--config", "", "key = value file of option defaults; command-line flags win");
  app.config_formatter(std::make_shared<KeyValueConfig>(name));

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    err << "zplkit " << name << ": " << e.what() << '\n';
    return exit_io;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }

  Report report;
  report.command = name;
  Table table;
  try {
    if (!ctx.common.init.empty()) {
      ctx.init = read_report_parameters(ctx.common.init);
      report.inputs["init"] = ctx.common.init;
    }
    try {
      action(ctx, report, table);
    } catch (const FitError& e) {
      report.status = "failed";
      report.message = e.what();
    } catch (const IntegrationError& e) {
      report.status = "failed";
      report.message = e.what();
    }
    std::unique_ptr<std::ofstream> hold;
    open_output(ctx.common.output, out, hold) << report.to_json(!ctx.common.no_timestamp).dump(2) << '\n';
    if (!ctx.common.plot_data.empty() && !table.columns.empty()) {
      std::ofstream p(ctx.common.plot_data);
      if (!p) throw ParseError("cannot write '" + ctx.common.plot_data + "'");
      table.write(p);
    }
  } catch (const std::exception& e) {
    err << "zplkit " << name << ": " << e.what() << '\n';
    return exit_io;
  }
  if (report.status == "failed") err << "zplkit " << name << ": " << report.message << '\n';
  return report.status == "converged" || report.status == "ok" ? exit_ok : exit_fit;
}

}  // namespace zplkit::cli
