#include "zplkit/faddeeva.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace zplkit {

namespace {

constexpr int kTerms = 32;

struct Weideman {
  double L;
  std::array<double, kTerms> a;  // a[n-1] multiplies Z^(n-1)

  Weideman() : L(std::sqrt(kTerms / std::numbers::sqrt2)), a{} {
    // Fourier coefficients of exp(-t^2)(L^2 + t^2) on t = L tan(theta/2),
    // sampled at 2M points, M = 2N.
    constexpr int M = 2 * kTerms;
    constexpr int M2 = 2 * M;
    std::array<double, M> f{};
    for (int k = 0; k < M; ++k) {
      const double theta = k * std::numbers::pi / M;
      const double t = L * std::tan(theta / 2.0);
      f[k] = std::exp(-t * t) * (L * L + t * t);
    }
    for (int n = 1; n <= kTerms; ++n) {
      double s = f[0];
      for (int k = 1; k < M; ++k) s += 2.0 * f[k] * std::cos(n * k * std::numbers::pi / M);
      a[n - 1] = s / M2;
    }
  }
};

const Weideman& table() {
  static const Weideman w;
  return w;
}

std::complex<double> w_upper(std::complex<double> z) {
  const auto& tab = table();
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> lmiz = tab.L - i * z;
  const std::complex<double> Z = (tab.L + i * z) / lmiz;
  std::complex<double> p = tab.a[kTerms - 1];
  for (int n = kTerms - 2; n >= 0; --n) p = p * Z + tab.a[n];
  return 2.0 * p / (lmiz * lmiz) + (1.0 / std::sqrt(std::numbers::pi)) / lmiz;
}

}  // namespace

std::complex<double> faddeeva_w(std::complex<double> z) {
  if (z.imag() >= 0.0) return w_upper(z);
  return 2.0 * std::exp(-z * z) - w_upper(-z);
}

std::complex<double> faddeeva_w_derivative(std::complex<double> z) {
  const std::complex<double> i(0.0, 1.0);
  return -2.0 * z * faddeeva_w(z) + 2.0 * i / std::sqrt(std::numbers::pi);
}

}  // namespace zplkit
