#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zplkit {

enum class LineKind { zpl, phonon_replica, band_edge, local_vibrational };

std::string_view to_string(LineKind k);
LineKind parse_line_kind(std::string_view s);

/// One emission line. `process_steps` holds the fabrication steps ("i".."v")
/// after which the line is visible.
struct CatalogLine {
  std::string label;
  double center_nm = 0.0;
  std::optional<double> fwhm_hint_nm;
  LineKind kind = LineKind::zpl;
  std::string notes;
  std::set<std::string> process_steps;

  double energy_ev() const;
};

/// Catalog lines with unique labels. Immutable once built; safe for concurrent reads.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CatalogLine> lines);

  /// The compiled-in silicon color-center lines.
  static const Catalog& builtin();

  const std::vector<CatalogLine>& lines() const { return lines_; }
  std::size_t size() const { return lines_.size(); }
  const CatalogLine* find(std::string_view label) const;
  /// Throws DomainError for an unknown label.
  const CatalogLine& at(std::string_view label) const;

  /// Returns a catalog with `extra` appended. A label already present is an
  /// error unless `allow_override`, in which case the new entry replaces it.
  Catalog extended(std::span<const CatalogLine> extra, bool allow_override = false) const;

  /// All lines with |center - line| <= tol, nearest first (ties keep catalog order).
  std::vector<CatalogLine> identify(double center_nm, double tol_nm) const;

  /// |E(a) - E(b)| in eV.
  double split_ev(std::string_view a, std::string_view b) const;

 private:
  std::vector<CatalogLine> lines_;
};

const std::vector<CatalogLine>& builtin_catalog();

std::vector<CatalogLine> identify(double center_nm, double tol_nm,
                                  const Catalog& catalog = Catalog::builtin());

/// Consecutive energy differences (eV, >= 0) of the lines sorted by energy.
std::vector<double> replica_spacing(std::span<const CatalogLine> lines);

/// Checks the built-in doublet splittings (TX1-TX0 and the *Cu doublet).
/// Throws DomainError with the offending pair when a check fails.
void self_check(const Catalog& catalog);

}  // namespace zplkit
