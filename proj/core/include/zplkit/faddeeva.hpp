#pragma once

#include <complex>

namespace zplkit {

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
///
/// Weideman's 32-term rational approximation, valid in the closed upper half
/// plane with relative error below 1e-7 wherever |w| is not underflow-small.
/// Lower-half-plane arguments use w(z) = 2 exp(-z^2) - w(-z).
std::complex<double> faddeeva_w(std::complex<double> z);

/// dw/dz = -2 z w(z) + 2i / sqrt(pi).
std::complex<double> faddeeva_w_derivative(std::complex<double> z);

}  // namespace zplkit
