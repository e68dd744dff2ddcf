#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zplkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps a parameter vector to the (unweighted) residual vector.
using ResidualFn = std::function<Vector(const Vector&)>;

struct FitOptions {
  int max_iters = 500;
  double step_tol = 1e-10;
  double grad_tol = 1e-10;
  double cost_tol = 1e-12;
  double initial_lambda = 1e-3;
};

/// Box-constrained weighted least squares: minimise sum_i w_i r_i(p)^2.
///
/// Empty `lower`/`upper` mean unbounded; empty `weights` means unit weights.
struct FitProblem {
  ResidualFn residuals;
  Vector initial;
  Vector lower;
  Vector upper;
  Vector weights;
  FitOptions options;
};

enum class FitStatus { converged, max_iters, singular, invalid };

std::string_view to_string(FitStatus s);

struct FitReport {
  Vector params;
  /// sigma^2 (J^T W J)^-1 with sigma^2 = SSE / (m - n); pseudo-inverse when singular.
  Matrix covariance;
  double residual_norm = 0.0;  ///< sqrt of the weighted SSE
  int iterations = 0;
  int dof = 0;
  FitStatus status = FitStatus::invalid;
  /// Cost after the initial evaluation and after every accepted step.
  std::vector<double> cost_history;

  double cost() const { return residual_norm * residual_norm; }
  bool converged() const { return status == FitStatus::converged; }
  /// 1-sigma uncertainties, sqrt(diag(covariance)).
  Vector uncertainties() const;
};

/// Levenberg-Marquardt with multiplicative damping (x10 on reject, /10 on accept)
/// and projection onto the bounds after each step. Deterministic and reentrant.
FitReport solve_lsq(const FitProblem& problem);

/// Finite-difference step used for parameter value `p`: max(1e-6 |p|, 1e-9).
double jacobian_step(double p);

/// Central-difference Jacobian of `fn` at `p`, falling back to one-sided
/// differences where a central stencil would leave [lower, upper].
Matrix numeric_jacobian(const ResidualFn& fn, const Vector& p, const Vector& lower = {},
                        const Vector& upper = {});

/// Named parameter vector with bounds and fixed flags, mapped to the free
/// sub-vector the solver sees.
class ParameterSet {
 public:
  static constexpr double inf = std::numeric_limits<double>::infinity();

  std::size_t add(std::string name, double value, double lower = -inf, double upper = inf,
                  bool fixed = false);
  void fix(std::string_view name, bool fixed = true);
  void set(std::string_view name, double value);

  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;
  double value(std::string_view name) const { return values_[index(name)]; }
  bool is_fixed(std::string_view name) const { return fixed_[index(name)]; }

  std::size_t size() const { return names_.size(); }
  std::size_t free_count() const;
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }

  Vector free_values() const;
  Vector free_lower() const;
  Vector free_upper() const;
  /// Full parameter vector with the free entries replaced by `free`.
  std::vector<double> expand(const Vector& free) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_, lower_, upper_;
  std::vector<bool> fixed_;
};

struct ParameterFit {
  std::vector<double> values;  ///< full vector, fixed entries unchanged
  std::vector<double> sigmas;  ///< 1-sigma; zero for fixed entries
  FitReport report;            ///< in free-parameter coordinates
};

/// Fits the free entries of `params`. `residuals` receives the full vector.
ParameterFit fit_parameters(const ParameterSet& params,
                            const std::function<Vector(std::span<const double>)>& residuals,
                            const Vector& weights = {}, const FitOptions& options = {});

/// Neyman weights 1 / max(count, 1) for Poisson count data.
Vector neyman_weights(std::span<const double> counts);

/// Weights 1/sigma^2 when every sample carries sigma > 0, otherwise empty (unit weights).
Vector sigma_weights(std::span<const double> sigmas);

}  // namespace zplkit
