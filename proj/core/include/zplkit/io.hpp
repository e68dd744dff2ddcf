#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zplkit/catalog.hpp"
#include "zplkit/data.hpp"
#include "zplkit/magneto.hpp"

namespace zplkit {

/// Formats with 9 significant digits ("%.9g").
std::string format_number(double v);

/// Comma-separated table with a header row. Lines starting with '#' are
/// comments; "# key: value" comments are collected as metadata. Fields may be
/// double-quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  ///< 1-based source line of each row
  std::map<std::string, std::string> meta;

  /// Column index for `name`, or npos.
  std::size_t column(std::string_view name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Strict decimal parse of a whole cell; throws ParseError with `line`.
double parse_double(std::string_view cell, std::size_t line);

/// Columns `wavelength_nm,intensity` or `energy_ev,intensity`. Metadata keys:
/// temperature_K, pump_W_cm2, B_field_T, process_step.
Spectrum parse_spectrum_csv(std::istream& in);
Spectrum parse_spectrum_csv(const std::filesystem::path& path);

/// Columns `time_ns,counts`. Bin width inferred and checked for uniformity
/// (1e-6 relative). Metadata keys: temperature_K, window_lo_nm, window_hi_nm.
DecayHistogram parse_histogram_csv(std::istream& in);
DecayHistogram parse_histogram_csv(const std::filesystem::path& path);

/// Two named columns plus an optional `sigma` column.
std::vector<Sample> parse_points_csv(std::istream& in, std::string_view x_col, std::string_view y_col);
std::vector<Sample> parse_points_csv(const std::filesystem::path& path, std::string_view x_col,
                                     std::string_view y_col);

/// Columns `field_T,signal`; the probe frequency comes from "# freq_hz: ...".
EsrSpectrum parse_esr_csv(std::istream& in);
EsrSpectrum parse_esr_csv(const std::filesystem::path& path);

/// Columns `label,center_nm,fwhm_hint_nm,kind,notes` (fwhm may be empty) and
/// an optional `process_steps` column of ';'-separated step names.
std::vector<CatalogLine> parse_catalog_csv(std::istream& in);
std::vector<CatalogLine> parse_catalog_csv(const std::filesystem::path& path);

/// The built-in catalog, extended by the file named in ZPLKIT_CATALOG when set.
Catalog load_default_catalog(bool allow_override = false);

/// `key = value` or `key: value` lines; '#' starts a comment. Later keys win.
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

void write_spectrum_csv(std::ostream& out, const Spectrum& s);
void write_histogram_csv(std::ostream& out, const DecayHistogram& h);
void write_points_csv(std::ostream& out, std::span<const Sample> pts, std::string_view x_col,
                      std::string_view y_col);
void write_esr_csv(std::ostream& out, const EsrSpectrum& s);
void write_catalog_csv(std::ostream& out, std::span<const CatalogLine> lines);

}  // namespace zplkit
