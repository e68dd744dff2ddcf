#include "zplkit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "zplkit/errors.hpp"

namespace zplkit {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  out.push_back(was_quoted ? cur : std::string(trim(cur)));
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return in;
}

template <class F>
auto with_source(const std::filesystem::path& path, F&& f) {
  auto in = open_input(path);
  try {
    return f(in);
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
}

std::size_t require_column(const CsvTable& t, std::string_view name) {
  const auto c = t.column(name);
  if (c == CsvTable::npos) throw ParseError("missing column '" + std::string(name) + "'", 1);
  return c;
}

std::optional<double> meta_number(const CsvTable& t, const std::string& key) {
  auto it = t.meta.find(key);
  if (it == t.meta.end()) return std::nullopt;
  return parse_double(it->second, 0);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return npos;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto body = trim(s.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        const auto key = trim(body.substr(0, colon));
        if (!key.empty() && key.find(' ') == std::string_view::npos) {
          t.meta[std::string(key)] = std::string(trim(body.substr(colon + 1)));
        }
      }
      continue;
    }
    auto cells = split_csv_line(s, lineno);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    t.rows.push_back(std::move(cells));
    t.row_lines.push_back(lineno);
  }
  if (!have_header) throw ParseError("no header row");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return read_csv(in); });
}

double parse_double(std::string_view cell, std::size_t line) {
  const auto s = trim(cell);
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (s.empty() || ec != std::errc{} || ptr != e || !std::isfinite(v)) {
    throw ParseError("not a finite number: '" + std::string(s) + "'", line);
  }
  return v;
}

Spectrum parse_spectrum_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto wl = t.column("wavelength_nm");
  const auto en = t.column("energy_ev");
  if ((wl == CsvTable::npos) == (en == CsvTable::npos)) {
    throw ParseError("need exactly one of the columns 'wavelength_nm' or 'energy_ev'", 1);
  }
  const auto ic = require_column(t, "intensity");
  if (t.rows.size() < 3) {
    throw ParseError("need at least 3 data rows, got " + std::to_string(t.rows.size()),
                     t.row_lines.empty() ? 1 : t.row_lines.back());
  }
  std::vector<double> x, y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto line = t.row_lines[r];
    const double xv = parse_double(t.rows[r][wl != CsvTable::npos ? wl : en], line);
    const double yv = parse_double(t.rows[r][ic], line);
    if (!(xv > 0.0)) throw ParseError("axis values must be > 0", line);
    if (yv < 0.0) throw ParseError("negative intensity", line);
    x.push_back(xv);
    y.push_back(yv);
  }
  SpectrumMeta meta;
  meta.temperature_K = meta_number(t, "temperature_K");
  meta.pump_W_cm2 = meta_number(t, "pump_W_cm2");
  meta.B_field_T = meta_number(t, "B_field_T");
  if (auto it = t.meta.find("process_step"); it != t.meta.end()) meta.process_step = it->second;
  try {
    if (wl != CsvTable::npos) return Spectrum::from_wavelength(x, y, std::move(meta));
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> xs, ys;
    for (auto i : idx) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
    return Spectrum(std::move(xs), std::move(ys), std::move(meta));
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

Spectrum parse_spectrum_csv(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return parse_spectrum_csv(in); });
}

DecayHistogram parse_histogram_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto tc = require_column(t, "time_ns");
  const auto cc = require_column(t, "counts");
  if (t.rows.size() < 10) {
    throw ParseError("need at least 10 bins, got " + std::to_string(t.rows.size()),
                     t.row_lines.empty() ? 1 : t.row_lines.back());
  }
  std::vector<double> times, counts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto line = t.row_lines[r];
    times.push_back(parse_double(t.rows[r][tc], line));
    const double c = parse_double(t.rows[r][cc], line);
    if (c < 0.0) throw ParseError("negative counts", line);
    counts.push_back(c);
  }
  const double width = times[1] - times[0];
  if (!(width > 0.0)) throw ParseError("time axis must increase", t.row_lines[1]);
  for (std::size_t i = 1; i < times.size(); ++i) {
    // Compare against the uniform grid rather than neighbouring differences so drift is caught.
    const double expected = times[0] + static_cast<double>(i) * width;
    if (std::abs(times[i] - expected) > 1e-6 * width ||
        std::abs((times[i] - times[i - 1]) - width) > 1e-6 * width) {
      throw ParseError("non-uniform bin width at time " + format_number(times[i]), t.row_lines[i]);
    }
  }
  HistogramMeta meta;
  meta.temperature_K = meta_number(t, "temperature_K");
  meta.window_lo_nm = meta_number(t, "window_lo_nm");
  meta.window_hi_nm = meta_number(t, "window_hi_nm");
  return DecayHistogram(times[0], width, std::move(counts), meta);
}

DecayHistogram parse_histogram_csv(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return parse_histogram_csv(in); });
}

std::vector<Sample> parse_points_csv(std::istream& in, std::string_view x_col, std::string_view y_col) {
  const auto t = read_csv(in);
  const auto xc = require_column(t, x_col);
  const auto yc = require_column(t, y_col);
  const auto sc = t.column("sigma");
  std::vector<Sample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto line = t.row_lines[r];
    Sample s;
    s.x = parse_double(t.rows[r][xc], line);
    s.y = parse_double(t.rows[r][yc], line);
    if (sc != CsvTable::npos && !trim(t.rows[r][sc]).empty()) s.sigma = parse_double(t.rows[r][sc], line);
    out.push_back(s);
  }
  return out;
}

std::vector<Sample> parse_points_csv(const std::filesystem::path& path, std::string_view x_col,
                                     std::string_view y_col) {
  return with_source(path, [&](std::istream& in) { return parse_points_csv(in, x_col, y_col); });
}

EsrSpectrum parse_esr_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto bc = require_column(t, "field_T");
  const auto sc = require_column(t, "signal");
  EsrSpectrum s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s.field_T.push_back(parse_double(t.rows[r][bc], t.row_lines[r]));
    s.signal.push_back(parse_double(t.rows[r][sc], t.row_lines[r]));
  }
  const auto f = meta_number(t, "freq_hz");
  if (!f) throw ParseError("missing '# freq_hz:' metadata", 1);
  s.freq_hz = *f;
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return s;
}

EsrSpectrum parse_esr_csv(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return parse_esr_csv(in); });
}

std::vector<CatalogLine> parse_catalog_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto lc = require_column(t, "label");
  const auto cc = require_column(t, "center_nm");
  const auto fc = require_column(t, "fwhm_hint_nm");
  const auto kc = require_column(t, "kind");
  const auto nc = require_column(t, "notes");
  const auto pc = t.column("process_steps");
  std::vector<CatalogLine> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto line = t.row_lines[r];
    CatalogLine l;
    l.label = row[lc];
    if (l.label.empty()) throw ParseError("empty label", line);
    l.center_nm = parse_double(row[cc], line);
    if (!trim(row[fc]).empty()) l.fwhm_hint_nm = parse_double(row[fc], line);
    try {
      l.kind = parse_line_kind(trim(row[kc]));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line);
    }
    l.notes = row[nc];
    if (pc != CsvTable::npos) {
      std::string_view steps = row[pc];
      while (!steps.empty()) {
        const auto semi = steps.find(';');
        const auto tok = trim(steps.substr(0, semi));
        if (!tok.empty()) l.process_steps.insert(std::string(tok));
        if (semi == std::string_view::npos) break;
        steps.remove_prefix(semi + 1);
      }
    }
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<CatalogLine> parse_catalog_csv(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return parse_catalog_csv(in); });
}

Catalog load_default_catalog(bool allow_override) {
  const char* env = std::getenv("ZPLKIT_CATALOG");
  if (!env || !*env) return Catalog::builtin();
  const auto extra = parse_catalog_csv(std::filesystem::path(env));
  return Catalog::builtin().extended(extra, allow_override);
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    const auto sep = s.find_first_of("=:");
    if (sep == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const auto key = trim(s.substr(0, sep));
    if (key.empty()) throw ParseError("empty key", lineno);
    out[std::string(key)] = std::string(trim(s.substr(sep + 1)));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  return with_source(path, [](std::istream& in) { return parse_config(in); });
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  const auto& m = s.meta();
  if (m.temperature_K) out << "# temperature_K: " << format_number(*m.temperature_K) << '\n';
  if (m.pump_W_cm2) out << "# pump_W_cm2: " << format_number(*m.pump_W_cm2) << '\n';
  if (m.B_field_T) out << "# B_field_T: " << format_number(*m.B_field_T) << '\n';
  if (!m.process_step.empty()) out << "# process_step: " << m.process_step << '\n';
  out << "energy_ev,intensity\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_number(s.energy()[i]) << ',' << format_number(s.intensity()[i]) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const DecayHistogram& h) {
  const auto& m = h.meta();
  if (m.temperature_K) out << "# temperature_K: " << format_number(*m.temperature_K) << '\n';
  if (m.window_lo_nm) out << "# window_lo_nm: " << format_number(*m.window_lo_nm) << '\n';
  if (m.window_hi_nm) out << "# window_hi_nm: " << format_number(*m.window_hi_nm) << '\n';
  out << "time_ns,counts\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << format_number(h.time(i)) << ',' << format_number(h.counts()[i]) << '\n';
  }
}

void write_points_csv(std::ostream& out, std::span<const Sample> pts, std::string_view x_col,
                      std::string_view y_col) {
  const bool sig = std::any_of(pts.begin(), pts.end(), [](const Sample& s) { return s.sigma > 0.0; });
  out << x_col << ',' << y_col << (sig ? ",sigma\n" : "\n");
  for (const auto& p : pts) {
    out << format_number(p.x) << ',' << format_number(p.y);
    if (sig) out << ',' << format_number(p.sigma);
    out << '\n';
  }
}

void write_esr_csv(std::ostream& out, const EsrSpectrum& s) {
  out << "# freq_hz: " << format_number(s.freq_hz) << '\n' << "field_T,signal\n";
  for (std::size_t i = 0; i < s.field_T.size(); ++i) {
    out << format_number(s.field_T[i]) << ',' << format_number(s.signal[i]) << '\n';
  }
}

void write_catalog_csv(std::ostream& out, std::span<const CatalogLine> lines) {
  out << "label,center_nm,fwhm_hint_nm,kind,notes,process_steps\n";
  for (const auto& l : lines) {
    std::string steps;
    for (const auto& s : l.process_steps) steps += (steps.empty() ? "" : ";") + s;
    out << quote_if_needed(l.label) << ',' << format_number(l.center_nm) << ','
        << (l.fwhm_hint_nm ? format_number(*l.fwhm_hint_nm) : "") << ',' << to_string(l.kind) << ','
        << quote_if_needed(l.notes) << ',' << steps << '\n';
  }
}

}  // namespace zplkit
