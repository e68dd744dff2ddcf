#include "zplkit/units.hpp"

#include <cmath>
#include <string>

#include "zplkit/errors.hpp"

namespace zplkit {

double nm_to_ev(double wavelength_nm) {
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
    throw DomainError("nm_to_ev: wavelength must be positive, got " + std::to_string(wavelength_nm));
  }
  return PhysConstants::hc / wavelength_nm;
}

double ev_to_nm(double energy_ev) {
  if (!(energy_ev > 0.0) || !std::isfinite(energy_ev)) {
    throw DomainError("ev_to_nm: energy must be positive, got " + std::to_string(energy_ev));
  }
  return PhysConstants::hc / energy_ev;
}

}  // namespace zplkit
