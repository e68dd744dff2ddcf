#include "zplkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zplkit/errors.hpp"
#include "zplkit/units.hpp"

namespace zplkit {

Spectrum::Spectrum(std::vector<double> energy_ev, std::vector<double> intensity, SpectrumMeta meta)
    : energy_(std::move(energy_ev)), intensity_(std::move(intensity)), meta_(std::move(meta)) {
  if (energy_.size() != intensity_.size()) {
    throw DomainError("Spectrum: axis and intensity lengths differ");
  }
  if (energy_.size() < 3) {
    throw DomainError("Spectrum: at least 3 samples required");
  }
  for (std::size_t i = 0; i < energy_.size(); ++i) {
    if (!std::isfinite(energy_[i]) || !std::isfinite(intensity_[i])) {
      throw DomainError("Spectrum: non-finite sample at index " + std::to_string(i));
    }
    if (intensity_[i] < 0.0) {
      throw DomainError("Spectrum: negative intensity at index " + std::to_string(i));
    }
    if (i > 0 && !(energy_[i] > energy_[i - 1])) {
      throw DomainError("Spectrum: energy axis not strictly increasing at index " +
                        std::to_string(i));
    }
  }
}

Spectrum Spectrum::from_wavelength(std::span<const double> wavelength_nm,
                                   std::span<const double> intensity, SpectrumMeta meta) {
  if (wavelength_nm.size() != intensity.size()) {
    throw DomainError("Spectrum: axis and intensity lengths differ");
  }
  std::vector<std::size_t> order(wavelength_nm.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending wavelength is ascending energy.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return wavelength_nm[a] > wavelength_nm[b]; });
  std::vector<double> e, y;
  e.reserve(order.size());
  y.reserve(order.size());
  for (auto i : order) {
    e.push_back(nm_to_ev(wavelength_nm[i]));
    y.push_back(intensity[i]);
  }
  return Spectrum(std::move(e), std::move(y), std::move(meta));
}

Spectrum resample_window(const Spectrum& s, double lo_ev, double hi_ev) {
  if (!(lo_ev < hi_ev)) {
    throw DomainError("resample_window: lo must be < hi");
  }
  auto e = s.energy();
  auto first = std::lower_bound(e.begin(), e.end(), lo_ev);
  auto last = std::upper_bound(e.begin(), e.end(), hi_ev);
  if (first >= last) {
    throw DomainError("resample_window: window does not overlap the spectrum");
  }
  auto i0 = static_cast<std::size_t>(first - e.begin());
  auto i1 = static_cast<std::size_t>(last - e.begin());
  if (i1 - i0 < 3) {
    throw DomainError("resample_window: fewer than 3 samples inside the window");
  }
  auto y = s.intensity();
  return Spectrum(std::vector<double>(e.begin() + i0, e.begin() + i1),
                  std::vector<double>(y.begin() + i0, y.begin() + i1), s.meta());
}

DecayHistogram::DecayHistogram(double bin_start_ns, double bin_width_ns, std::vector<double> counts,
                               HistogramMeta meta)
    : bin_start_(bin_start_ns), bin_width_(bin_width_ns), counts_(std::move(counts)),
      meta_(std::move(meta)) {
  if (!(bin_width_ > 0.0) || !std::isfinite(bin_width_) || !std::isfinite(bin_start_)) {
    throw DomainError("DecayHistogram: bin width must be positive and finite");
  }
  if (counts_.size() < 10) {
    throw DomainError("DecayHistogram: at least 10 bins required");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (!std::isfinite(counts_[i]) || counts_[i] < 0.0) {
      throw DomainError("DecayHistogram: counts must be finite and non-negative (bin " +
                        std::to_string(i) + ")");
    }
  }
}

std::vector<double> DecayHistogram::times() const {
  std::vector<double> t(counts_.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
  return t;
}

}  // namespace zplkit
