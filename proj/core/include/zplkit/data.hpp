#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zplkit {

struct SpectrumMeta {
  std::optional<double> temperature_K;
  std::optional<double> pump_W_cm2;
  std::optional<double> B_field_T;
  std::string process_step;

  bool operator==(const SpectrumMeta&) const = default;
};

/// PL spectrum on an energy axis (eV), strictly increasing, at least 3 samples.
///
/// Intensities are stored as doubles and must be finite and non-negative.
class Spectrum {
 public:
  Spectrum(std::vector<double> energy_ev, std::vector<double> intensity, SpectrumMeta meta = {});

  /// Builds from a wavelength axis in nm (any order); the result is sorted by energy.
  static Spectrum from_wavelength(std::span<const double> wavelength_nm,
                                  std::span<const double> intensity, SpectrumMeta meta = {});

  std::span<const double> energy() const { return energy_; }
  std::span<const double> intensity() const { return intensity_; }
  const SpectrumMeta& meta() const { return meta_; }
  std::size_t size() const { return energy_.size(); }
  double lo() const { return energy_.front(); }
  double hi() const { return energy_.back(); }

  bool operator==(const Spectrum&) const = default;

 private:
  std::vector<double> energy_;
  std::vector<double> intensity_;
  SpectrumMeta meta_;
};

/// Restricts `s` to samples with lo <= E <= hi. Metadata is preserved.
/// Throws DomainError if lo >= hi, the window misses the axis, or fewer than 3 samples remain.
Spectrum resample_window(const Spectrum& s, double lo_ev, double hi_ev);

struct HistogramMeta {
  std::optional<double> temperature_K;
  std::optional<double> window_lo_nm;
  std::optional<double> window_hi_nm;

  bool operator==(const HistogramMeta&) const = default;
};

/// TCSPC decay histogram. Bin i is stamped at bin_start + i * bin_width (ns).
///
/// Counts are non-negative reals so that noiseless expectations can be stored
/// in the same container as measured integer counts.
class DecayHistogram {
 public:
  DecayHistogram(double bin_start_ns, double bin_width_ns, std::vector<double> counts,
                 HistogramMeta meta = {});

  double bin_start() const { return bin_start_; }
  double bin_width() const { return bin_width_; }
  std::span<const double> counts() const { return counts_; }
  const HistogramMeta& meta() const { return meta_; }
  std::size_t size() const { return counts_.size(); }
  double time(std::size_t i) const { return bin_start_ + static_cast<double>(i) * bin_width_; }
  std::vector<double> times() const;

  bool operator==(const DecayHistogram&) const = default;

 private:
  double bin_start_;
  double bin_width_;
  std::vector<double> counts_;
  HistogramMeta meta_;
};

/// One (x, y) observation with an optional 1-sigma uncertainty (sigma <= 0 means unknown).
struct Sample {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;

  bool operator==(const Sample&) const = default;
};

}  // namespace zplkit
