#include "zplkit/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zplkit/errors.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

std::string_view to_string(LineKind k) {
  switch (k) {
    case LineKind::zpl: return "ZPL";
    case LineKind::phonon_replica: return "phonon-replica";
    case LineKind::band_edge: return "band-edge";
    case LineKind::local_vibrational: return "local-vibrational";
  }
  return "?";
}

LineKind parse_line_kind(std::string_view s) {
  if (s == "ZPL" || s == "zpl") return LineKind::zpl;
  if (s == "phonon-replica") return LineKind::phonon_replica;
  if (s == "band-edge") return LineKind::band_edge;
  if (s == "local-vibrational") return LineKind::local_vibrational;
  throw DomainError("unknown line kind '" + std::string(s) + "'");
}

double CatalogLine::energy_ev() const { return nm_to_ev(center_nm); }

Catalog::Catalog(std::vector<CatalogLine> lines) : lines_(std::move(lines)) {
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const auto& l = lines_[i];
    if (l.label.empty()) throw DomainError("catalog line without label");
    if (!(l.center_nm > 0.0)) throw DomainError("catalog line '" + l.label + "': center must be > 0");
    if (l.fwhm_hint_nm && !(*l.fwhm_hint_nm > 0.0)) {
      throw DomainError("catalog line '" + l.label + "': fwhm hint must be > 0");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (lines_[j].label == l.label) throw DomainError("duplicate catalog label '" + l.label + "'");
    }
  }
}

const Catalog& Catalog::builtin() {
  static const Catalog c(builtin_catalog());
  return c;
}

const CatalogLine* Catalog::find(std::string_view label) const {
  for (const auto& l : lines_) {
    if (l.label == label) return &l;
  }
  return nullptr;
}

const CatalogLine& Catalog::at(std::string_view label) const {
  if (const auto* l = find(label)) return *l;
  throw DomainError("no catalog line labelled '" + std::string(label) + "'");
}

Catalog Catalog::extended(std::span<const CatalogLine> extra, bool allow_override) const {
  std::vector<CatalogLine> out = lines_;
  for (const auto& e : extra) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CatalogLine& l) { return l.label == e.label; });
    if (it == out.end()) {
      out.push_back(e);
    } else if (allow_override) {
      *it = e;
    } else {
      throw DomainError("catalog line '" + e.label + "' already defined; overriding needs an explicit flag");
    }
  }
  return Catalog(std::move(out));
}

std::vector<CatalogLine> Catalog::identify(double center_nm, double tol_nm) const {
  if (!(tol_nm >= 0.0)) throw DomainError("identify: tolerance must be >= 0");
  std::vector<std::pair<double, std::size_t>> hits;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const double d = std::abs(lines_[i].center_nm - center_nm);
    if (d <= tol_nm) hits.emplace_back(d, i);
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<CatalogLine> out;
  out.reserve(hits.size());
  for (const auto& [d, i] : hits) out.push_back(lines_[i]);
  return out;
}

double Catalog::split_ev(std::string_view a, std::string_view b) const {
  return std::abs(at(a).energy_ev() - at(b).energy_ev());
}

const std::vector<CatalogLine>& builtin_catalog() {
  using K = LineKind;
  static const std::vector<CatalogLine> lines = {
      {"Si-TO", 1130.0, std::nullopt, K::band_edge,
       "silicon transverse-optical band-edge line; destroyed by carbon implantation, restored by RTA",
       {"ii", "iii", "iv", "v"}},
      {"Si-TO-replica", 1195.0, std::nullopt, K::phonon_replica, "silicon phonon replica",
       {"ii", "iii", "iv", "v"}},
      {"X", 1191.7, std::nullopt, K::zpl, "weak X center line on the Si phonon replica", {"v"}},
      {"W", 1217.48, 0.65, K::zpl, "W center (interstitial cluster); Gaussian FWHM", {"i"}},
      {"Cu-r1", 1221.45, 0.58, K::phonon_replica, "Cu line phonon replica", {"ii", "iii", "iv"}},
      {"Cu-r2", 1230.07, 1.2, K::phonon_replica, "Cu line phonon replica", {"ii", "iii", "iv"}},
      {"Cu-r3", 1238.64, 1.65, K::phonon_replica, "Cu line phonon replica", {"ii", "iii", "iv"}},
      {"G", 1278.5, 0.8, K::zpl, "G center (C_s-Si_i-C_s); lifetime 6.67 ns at 7.5 K",
       {"i", "iii", "iv"}},
      {"I", 1285.0, std::nullopt, K::zpl, "I center, oxygen-perturbed T center", {"v"}},
      {"*Cu_1^0", 1312.20, 0.66, K::zpl, "high-energy line of the *Cu doublet", {"ii", "iii"}},
      {"*Cu_0^0", 1312.98, 0.523, K::zpl, "low-energy line of the *Cu doublet", {"ii", "iii"}},
      {"*Cu_0^1", 1321.64, std::nullopt, K::phonon_replica, "first phonon replica of *Cu_0^0",
       {"ii", "iii"}},
      {"TX1", 1322.65, 0.79, K::zpl, "T center second excited state; literature 1323.4 nm", {"v"}},
      {"TX0", 1325.1, 0.63, K::zpl, "T center first excited state; literature 1325.9 nm", {"v"}},
      {"*Cu_0^2", 1331.06, std::nullopt, K::phonon_replica, "second phonon replica of *Cu_0^0",
       {"ii", "iii"}},
      {"E", 1381.0, std::nullopt, K::local_vibrational, "G center local vibrational mode (E line)",
       {"i", "iii", "iv"}},
  };
  return lines;
}

std::vector<CatalogLine> identify(double center_nm, double tol_nm, const Catalog& catalog) {
  return catalog.identify(center_nm, tol_nm);
}

std::vector<double> replica_spacing(std::span<const CatalogLine> lines) {
  if (lines.size() < 2) throw DomainError("replica_spacing: need at least 2 lines");
  std::vector<double> e;
  e.reserve(lines.size());
  for (const auto& l : lines) e.push_back(l.energy_ev());
  std::sort(e.begin(), e.end());
  std::vector<double> out;
  for (std::size_t i = 1; i < e.size(); ++i) out.push_back(e[i] - e[i - 1]);
  return out;
}

void self_check(const Catalog& catalog) {
  struct Check {
    const char* a;
    const char* b;
    double expected_mev, tol_mev;
  };
  static constexpr Check checks[] = {{"TX1", "TX0", 1.75, 0.05}, {"*Cu_1^0", "*Cu_0^0", 0.56, 0.02}};
  for (const auto& c : checks) {
    if (!catalog.find(c.a) || !catalog.find(c.b)) continue;
    const double s = catalog.split_ev(c.a, c.b) / mev;
    if (std::abs(s - c.expected_mev) > c.tol_mev) {
      std::ostringstream msg;
      msg << "catalog self-check: " << c.a << " - " << c.b << " split " << s << " meV, expected "
          << c.expected_mev << " +- " << c.tol_mev;
      throw DomainError(msg.str());
    }
  }
}

}  // namespace zplkit
