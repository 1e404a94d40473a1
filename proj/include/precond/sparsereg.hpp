#pragma once

#include <optional>
#include <string>

#include "precond/core.hpp"

namespace precond {

/// kPerN: (1/n)||y - X z||^2 + mu ||z||_1.  kRaw: ||y - X z||^2 + mu ||z||_1,
/// so a raw penalty mu' corresponds to mu = mu' / n.
enum class PenaltyScale { kPerN, kRaw };

struct LassoProblem {
  const Matrix& x;
  const Vector& y;
  PenaltyScale scale = PenaltyScale::kPerN;
  /// Coefficients outside this set are held at zero.
  std::optional<FeatureSet> restriction;
};

struct KktCertificate {
  bool ok = true;
  double max_violation = 0.0;
  Index worst_index = -1;
};

/// Gradient G_j = -(2/n) <y - X theta, X_j> (scaled by n under kRaw) checked
/// against the subgradient conditions at penalty `mu`.
KktCertificate kkt_check(const LassoProblem& p, const Vector& theta, double mu, double tol);

/// Smallest penalty at which theta = 0 is optimal, in the problem's scale.
double mu_max(const LassoProblem& p);

struct LarsOptions {
  Index max_active = -1;   // stop once this many variables are active
  Index max_entries = -1;  // stop once this many distinct variables have entered
  double min_mu = 0.0;     // stop at this penalty (problem scale)
  Index max_steps = -1;
  double kkt_tol = 1e-8;
};

struct LassoPath {
  std::vector<double> mu;  // knots, decreasing, problem scale
  std::vector<Vector> coefs;
  std::vector<Index> entry_order;
  std::vector<KktCertificate> kkt;  // per knot, per-n gradient scale
  std::string termination;

  /// Linear interpolation between knots; zero above the first knot, last knot below the final one.
  Vector coefficients_at(double mu) const;
  bool all_kkt_ok() const;
};

/// Exact LASSO path by least angle regression with the lasso drop rule.
/// Throws kDegenerateStep if the active Gram matrix becomes singular before
/// the correlations vanish.
LassoPath lars_path(const LassoProblem& p, const LarsOptions& opt = {});

/// Cyclic coordinate descent at a single penalty (problem scale).
Vector coord_descent(const LassoProblem& p, double mu, double tol = 1e-10,
                     Index max_sweeps = 100000, const Vector* warm_start = nullptr);

struct StepwisePath {
  std::vector<Index> entry_order;
  double initial_rss = 0.0;
  std::vector<double> rss;  // after each entry
  std::vector<Vector> coefs;
  std::string stop_reason;
};

/// Greedy forward selection by largest RSS reduction; ties to the lower index.
StepwisePath forward_stepwise(const Matrix& x, const Vector& y, Index max_steps,
                              const std::optional<FeatureSet>& restriction = std::nullopt);

/// Least squares on `support`, zero elsewhere. Throws kRank naming collinear features.
Vector ols_refit(const Matrix& x, const Vector& y, const FeatureSet& support);

}  // namespace precond
