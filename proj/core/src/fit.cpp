#include "zplkit/fit.hpp"

#include <algorithm>
#include <cmath>

#include "zplkit/errors.hpp"

namespace zplkit {

namespace {

constexpr double kMaxLambda = 1e20;
constexpr double kMinLambda = 1e-20;

Vector bound_or(const Vector& b, Eigen::Index n, double fill) {
  if (b.size() == 0) return Vector::Constant(n, fill);
  if (b.size() != n) throw DomainError("solve_lsq: bound vector has wrong length");
  return b;
}

Vector clamp(const Vector& p, const Vector& lo, const Vector& hi) {
  return p.cwiseMax(lo).cwiseMin(hi);
}

struct CovarianceResult {
  Matrix covariance;
  bool full_rank = true;
};

// Column-equilibrated SVD so that rank decisions do not depend on parameter units.
CovarianceResult covariance_from_jacobian(const Matrix& J, double sigma2) {
  const auto n = J.cols();
  Vector scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double c = J.col(j).norm();
    scale[j] = c > 0.0 ? c : 1.0;
  }
  Matrix Js = J * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(Js, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s.maxCoeff() : 0.0;
  // The Jacobian comes from finite differences, accurate to roughly 1e-10
  // relative, so directions weaker than this are numerically indistinguishable from null.
  const double tol = 1e-8 * smax;
  Vector inv_s2 = Vector::Zero(s.size());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol && s[i] > 0.0) {
      inv_s2[i] = 1.0 / (s[i] * s[i]);
      ++rank;
    }
  }
  const Matrix& V = svd.matrixV();
  Matrix pinv = V * inv_s2.asDiagonal() * V.transpose();
  CovarianceResult out;
  out.covariance = sigma2 * (scale.cwiseInverse().asDiagonal() * pinv *
                             scale.cwiseInverse().asDiagonal());
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.full_rank = rank == n;
  return out;
}

}  // namespace

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iters: return "max_iters";
    case FitStatus::singular: return "singular";
    case FitStatus::invalid: return "invalid";
  }
  return "invalid";
}

Vector FitReport::uncertainties() const {
  if (covariance.size() == 0) return {};
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double jacobian_step(double p) { return std::max(1e-6 * std::abs(p), 1e-9); }

Matrix numeric_jacobian(const ResidualFn& fn, const Vector& p, const Vector& lower,
                        const Vector& upper) {
  const auto n = p.size();
  const Vector lo = bound_or(lower, n, -ParameterSet::inf);
  const Vector hi = bound_or(upper, n, ParameterSet::inf);
  Vector base;
  auto f0 = [&]() -> const Vector& {
    if (base.size() == 0) base = fn(p);
    return base;
  };
  Matrix J;
  for (Eigen::Index j = 0; j < n; ++j) {
    double h = jacobian_step(p[j]);
    Vector col;
    Vector q = p;
    if (p[j] + h <= hi[j] && p[j] - h >= lo[j]) {
      q[j] = p[j] + h;
      Vector fp = fn(q);
      q[j] = p[j] - h;
      Vector fm = fn(q);
      col = (fp - fm) / (2.0 * h);
    } else if (p[j] + h <= hi[j]) {
      q[j] = p[j] + h;
      col = (fn(q) - f0()) / h;
    } else if (p[j] - h >= lo[j]) {
      q[j] = p[j] - h;
      col = (f0() - fn(q)) / h;
    } else {
      // Interval narrower than the stencil: the parameter is pinned.
      col = Vector::Zero(f0().size());
    }
    if (J.size() == 0) J.resize(col.size(), n);
    J.col(j) = col;
  }
  if (n == 0) J.resize(f0().size(), 0);
  return J;
}

FitReport solve_lsq(const FitProblem& problem) {
  const auto n = problem.initial.size();
  const Vector lo = bound_or(problem.lower, n, -ParameterSet::inf);
  const Vector hi = bound_or(problem.upper, n, ParameterSet::inf);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo[i] <= problem.initial[i] && problem.initial[i] <= hi[i])) {
      throw DomainError("solve_lsq: initial parameter " + std::to_string(i) +
                        " outside its bounds");
    }
  }
  const FitOptions& opt = problem.options;
  Vector sqrt_w;
  if (problem.weights.size() > 0) {
    if ((problem.weights.array() < 0.0).any()) {
      throw DomainError("solve_lsq: weights must be non-negative");
    }
    sqrt_w = problem.weights.cwiseSqrt();
  }
  const ResidualFn weighted = [&](const Vector& p) -> Vector {
    Vector r = problem.residuals(p);
    if (sqrt_w.size() > 0) {
      if (sqrt_w.size() != r.size()) throw DomainError("solve_lsq: weights length mismatch");
      r = r.cwiseProduct(sqrt_w);
    }
    return r;
  };

  FitReport rep;
  Vector p = problem.initial;
  Vector r = weighted(p);
  const auto m = r.size();
  rep.params = p;
  rep.dof = static_cast<int>(m - n);
  if (!r.allFinite()) {
    rep.status = FitStatus::invalid;
    rep.residual_norm = std::numeric_limits<double>::quiet_NaN();
    rep.covariance = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    return rep;
  }
  double cost = r.squaredNorm();
  rep.cost_history.push_back(cost);
  double lambda = opt.initial_lambda;
  FitStatus status = FitStatus::max_iters;

  auto small_step = [&](const Vector& step, const Vector& at) {
    return step.norm() <= opt.step_tol * (at.norm() + opt.step_tol);
  };

  int it = 0;
  bool stop = false;
  while (!stop && it < opt.max_iters) {
    ++it;
    const Matrix J = numeric_jacobian(weighted, p, lo, hi);
    if (!J.allFinite()) {
      status = FitStatus::invalid;
      break;
    }
    const Vector g = J.transpose() * r;
    const Matrix H = J.transpose() * J;

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool held_lo = p[i] <= lo[i] && g[i] > 0.0;
      const bool held_hi = p[i] >= hi[i] && g[i] < 0.0;
      if (!held_lo && !held_hi) free.push_back(i);
    }
    if (cost == 0.0 || free.empty()) {
      status = FitStatus::converged;
      break;
    }
    double gmax = 0.0;
    for (auto i : free) {
      const double cn = std::sqrt(H(i, i));
      if (cn > 0.0) gmax = std::max(gmax, std::abs(g[i]) / (cn * std::sqrt(cost)));
    }
    if (gmax <= opt.grad_tol) {
      status = FitStatus::converged;
      break;
    }

    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix Hf(nf, nf);
    Vector gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[free[a]];
      for (Eigen::Index b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
    }
    const double diag_floor = std::max(Hf.diagonal().maxCoeff(), 1.0) * 1e-15;

    while (true) {
      Matrix A = Hf;
      for (Eigen::Index a = 0; a < nf; ++a) A(a, a) += lambda * std::max(Hf(a, a), diag_floor);
      const Vector delta = A.ldlt().solve(-gf);
      Vector trial = p;
      for (Eigen::Index a = 0; a < nf; ++a) trial[free[a]] += delta[a];
      trial = clamp(trial, lo, hi);
      const Vector step = trial - p;
      if (small_step(step, p)) {
        status = FitStatus::converged;
        stop = true;
        break;
      }
      const Vector rt = weighted(trial);
      const double ct = rt.allFinite() ? rt.squaredNorm() : ParameterSet::inf;
      if (ct < cost) {
        const double rel = (cost - ct) / cost;
        p = trial;
        r = rt;
        cost = ct;
        rep.cost_history.push_back(cost);
        lambda = std::max(lambda / 10.0, kMinLambda);
        if (rel <= opt.cost_tol || small_step(step, p)) {
          status = FitStatus::converged;
          stop = true;
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > kMaxLambda) {
        // No descent direction left at working precision.
        status = FitStatus::converged;
        stop = true;
        break;
      }
    }
  }

  rep.params = p;
  rep.iterations = it;
  rep.residual_norm = std::sqrt(cost);
  const Matrix J = numeric_jacobian(weighted, p, lo, hi);
  if (!J.allFinite()) {
    rep.status = FitStatus::invalid;
    rep.covariance = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    return rep;
  }
  const double sigma2 = rep.dof > 0 ? cost / rep.dof : cost;
  auto cov = covariance_from_jacobian(J, sigma2);
  rep.covariance = std::move(cov.covariance);
  if (status == FitStatus::converged && !cov.full_rank) status = FitStatus::singular;
  rep.status = status;
  return rep;
}

std::size_t ParameterSet::add(std::string name, double value, double lower, double upper,
                              bool fixed) {
  if (contains(name)) throw DomainError("ParameterSet: duplicate parameter " + name);
  if (!(lower <= upper)) throw DomainError("ParameterSet: lower > upper for " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::clamp(value, lower, upper));
  lower_.push_back(lower);
  upper_.push_back(upper);
  fixed_.push_back(fixed);
  return names_.size() - 1;
}

void ParameterSet::fix(std::string_view name, bool fixed) { fixed_[index(name)] = fixed; }

void ParameterSet::set(std::string_view name, double value) {
  auto i = index(name);
  values_[i] = std::clamp(value, lower_[i], upper_[i]);
}

std::size_t ParameterSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw DomainError("ParameterSet: unknown parameter " + std::string(name));
}

bool ParameterSet::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParameterSet::free_count() const {
  return static_cast<std::size_t>(std::count(fixed_.begin(), fixed_.end(), false));
}

Vector ParameterSet::free_values() const {
  Vector v(static_cast<Eigen::Index>(free_count()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (!fixed_[i]) v[k++] = values_[i];
  return v;
}

Vector ParameterSet::free_lower() const {
  Vector v(static_cast<Eigen::Index>(free_count()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (!fixed_[i]) v[k++] = lower_[i];
  return v;
}

Vector ParameterSet::free_upper() const {
  Vector v(static_cast<Eigen::Index>(free_count()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (!fixed_[i]) v[k++] = upper_[i];
  return v;
}

std::vector<double> ParameterSet::expand(const Vector& free) const {
  std::vector<double> full = values_;
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < size(); ++i)
    if (!fixed_[i]) full[i] = free[k++];
  return full;
}

ParameterFit fit_parameters(const ParameterSet& params,
                            const std::function<Vector(std::span<const double>)>& residuals,
                            const Vector& weights, const FitOptions& options) {
  FitProblem prob;
  prob.initial = params.free_values();
  prob.lower = params.free_lower();
  prob.upper = params.free_upper();
  prob.weights = weights;
  prob.options = options;
  prob.residuals = [&](const Vector& free) {
    const auto full = params.expand(free);
    return residuals(full);
  };
  ParameterFit out;
  out.report = solve_lsq(prob);
  out.values = params.expand(out.report.params);
  out.sigmas.assign(params.size(), 0.0);
  const Vector u = out.report.uncertainties();
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.is_fixed(params.names()[i])) out.sigmas[i] = u[k++];
  }
  return out;
}

Vector neyman_weights(std::span<const double> counts) {
  Vector w(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) w[static_cast<Eigen::Index>(i)] = 1.0 / std::max(counts[i], 1.0);
  return w;
}

Vector sigma_weights(std::span<const double> sigmas) {
  if (sigmas.empty()) return {};
  for (double s : sigmas)
    if (!(s > 0.0)) return {};
  Vector w(static_cast<Eigen::Index>(sigmas.size()));
  for (std::size_t i = 0; i < sigmas.size(); ++i) w[static_cast<Eigen::Index>(i)] = 1.0 / (sigmas[i] * sigmas[i]);
  return w;
}

}  // namespace zplkit
