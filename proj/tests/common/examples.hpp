#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

namespace zplkit::testing {

/// A bundled example dataset and the command line that analyses it.
struct ExampleRun {
  std::string file;
  std::vector<std::string> args;  ///< subcommand first; the data path is appended
};

inline const std::vector<ExampleRun>& example_runs() {
  static const std::vector<ExampleRun> runs = {
      {"passler_tx0.csv", {"fit-passler"}},
      {"quench_cu.csv", {"fit-quench", "--E1-mev", "0.56", "--e2-free"}},
      {"ratio_cu.csv", {"fit-ratio"}},
      {"saturation.csv", {"fit-saturation"}},
      {"cu_doublet.csv", {"fit-peaks", "--shape", "gaussian"}},
      {"trpl_tx0_5k.csv", {"fit-trpl"}},
      {"magneto_widths.csv", {"fit-magneto"}},
      {"esr_x_band.csv", {"fit-esr"}},
  };
  return runs;
}

inline std::string examples_dir() { return ZPLKIT_EXAMPLES_DIR; }

/// Refit fixed point: same residual norm, and every parameter moved by less
/// than 1e-3 of its reported sigma (1e-8 relative for fixed parameters).
template <class Json>
bool refit_agrees(const Json& first, const Json& refit) {
  const double ra = first["residual_norm"], rb = refit["residual_norm"];
  if (std::abs(ra - rb) > 1e-10 * std::max(1.0, ra)) return false;
  const auto& pa = first["parameters"];
  const auto& pb = refit["parameters"];
  if (pa.size() != pb.size()) return false;
  for (const auto& [name, value] : pa.items()) {
    if (!pb.contains(name)) return false;
    const auto& s = first["uncertainties"].value(name, Json());
    const double sigma = s.is_number() ? static_cast<double>(s) : 0.0;
    const double a = value, b = pb[name];
    if (std::abs(a - b) > 1e-3 * sigma + 1e-8 * std::abs(a)) return false;
  }
  return true;
}

}  // namespace zplkit::testing
