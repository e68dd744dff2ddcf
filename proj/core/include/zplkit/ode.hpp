#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "zplkit/errors.hpp"

namespace zplkit {

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;     ///< 0 = unlimited
  double fixed_step = 0.0;   ///< > 0 disables error control
  std::size_t max_steps = 1'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Explicit Runge-Kutta 5(4) pair of Dormand and Prince with FSAL, PI-free
/// step control and Hairer's 4th-order continuous extension for output.
///
/// Integrates y' = f(t, y) from t_grid[0] and returns y at every grid point.
/// `t_grid` must be strictly increasing.
template <std::size_t N, class Rhs>
std::vector<std::array<double, N>> integrate_dopri5(Rhs&& f, const std::array<double, N>& y0,
                                                    std::span<const double> t_grid,
                                                    const OdeOptions& opt = {},
                                                    OdeStats* stats = nullptr) {
  using State = std::array<double, N>;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  std::vector<State> out;
  if (t_grid.empty()) return out;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("integrate_dopri5: grid not increasing");
  }
  out.reserve(t_grid.size());
  out.push_back(y0);
  if (t_grid.size() == 1) return out;

  auto axpy = [](const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
    State r = y;
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (const auto& [c, k] : terms) s += c * (*k)[i];
      r[i] += h * s;
    }
    return r;
  };

  double t = t_grid.front();
  const double t_end = t_grid.back();
  State y = y0;
  State k1 = f(t, y);
  std::size_t next = 1;

  double h;
  if (opt.fixed_step > 0.0) {
    h = opt.fixed_step;
  } else {
    // Hairer's starting step heuristic (first-order estimate).
    double d0 = 0, dd1 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      dd1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    dd1 = std::sqrt(dd1 / N);
    h = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h = std::min(h, t_end - t);
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  }

  OdeStats st;
  while (next < t_grid.size()) {
    if (st.accepted + st.rejected >= opt.max_steps) {
      std::ostringstream msg;
      msg << "integrate_dopri5: step budget of " << opt.max_steps << " exhausted at t=" << t;
      throw IntegrationError(msg.str());
    }
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    bool last = false;
    // Absorb a remainder below roundoff into this step rather than taking a 1-ulp step.
    if (t + h * (1.0 + 1e-9) >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (!(h > std::abs(t) * 1e-14) || !std::isfinite(h)) {
      std::ostringstream msg;
      msg << "integrate_dopri5: step size underflow (h=" << h << ") at t=" << t;
      throw IntegrationError(msg.str());
    }

    const State k2 = f(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const State k3 = f(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const State k4 = f(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 =
        f(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y1 =
        axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const State k7 = f(t + h, y1);

    double err = 0.0;
    if (opt.fixed_step <= 0.0) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
        err += (ei / sc) * (ei / sc);
      }
      err = std::sqrt(err / N);
    }
    bool finite = true;
    for (double v : y1) finite = finite && std::isfinite(v);
    if (!finite) err = 1e10;

    if (err <= 1.0) {
      ++st.accepted;
      const double t1 = last ? t_end : t + h;
      // Dense output on [t, t1].
      State r2, r3, r4, r5;
      for (std::size_t i = 0; i < N; ++i) {
        r2[i] = y1[i] - y[i];
        r3[i] = h * k1[i] - r2[i];
        r4[i] = r2[i] - h * k7[i] - r3[i];
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      while (next < t_grid.size() && (t_grid[next] <= t1 || (last && next + 1 == t_grid.size()))) {
        const double th = (t_grid[next] - t) / h;
        const double th1 = 1.0 - th;
        State yo;
        for (std::size_t i = 0; i < N; ++i) {
          yo[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
        if (t_grid[next] == t1) yo = y1;
        out.push_back(yo);
        ++next;
      }
      t = t1;
      y = y1;
      k1 = k7;
      if (opt.fixed_step <= 0.0) {
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 10.0;
        h *= std::clamp(fac, 0.2, 10.0);
      }
    } else {
      ++st.rejected;
      if (opt.fixed_step > 0.0) {
        throw IntegrationError("integrate_dopri5: non-finite state with fixed step");
      }
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  if (stats) *stats = st;
  return out;
}

}  // namespace zplkit
