#pragma once

#include <numbers>

namespace zplkit {

/// CODATA-2018 constants expressed in eV-based units.
///
/// The 2019 SI fixes h, e, c and k exactly, so every value below follows
/// from exact definitions except mu_B.
struct PhysConstants {
  static constexpr double h = 6.62607015e-34 / 1.602176634e-19;       // eV s
  static constexpr double hbar = h / (2.0 * std::numbers::pi);         // eV s
  static constexpr double c = 299792458.0;                             // m/s
  static constexpr double hc = h * c * 1e9;                            // eV nm
  static constexpr double k_B = 1.380649e-23 / 1.602176634e-19;        // eV/K
  static constexpr double mu_B = 9.2740100783e-24 / 1.602176634e-19;   // eV/T
};

/// Photon energy in eV for a vacuum wavelength in nm. Throws DomainError for lambda <= 0.
double nm_to_ev(double wavelength_nm);

/// Vacuum wavelength in nm for a photon energy in eV. Throws DomainError for energy <= 0.
double ev_to_nm(double energy_ev);

inline constexpr double mev = 1e-3;
inline constexpr double uev = 1e-6;
inline constexpr double nev = 1e-9;

}  // namespace zplkit
