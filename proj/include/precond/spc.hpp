#pragma once

#include "precond/core.hpp"

namespace precond {

/// Leading eigenpairs of the screened block S = X_B^T X_B / n.
struct SpcModel {
  FeatureSet features;
  Index k = 0;
  Matrix eigvecs;  // |B| x k, orthonormal columns
  Vector eigvals;  // k, decreasing
  Index p = 0;
  std::vector<std::string> feature_ids;
  std::optional<Standardization> standardization;

  /// Eigenvector `component` zero-padded to length p.
  Vector padded_direction(Index component) const;
};

struct PreconditionedResponse {
  Vector y_tilde;
  Matrix factors;           // n x k latent scores
  Vector regression_coefs;  // k
};

/// Requires a standardized dataset and 1 <= k <= min(n - 1, |features|).
/// Uses the n x n inner-product matrix when |features| > n. Throws kRank when
/// fewer than k positive eigenvalues exist.
SpcModel fit_spc(const Dataset& d, const FeatureSet& features, Index k = 1);

/// Column c is X_B u_c / sqrt(l_c). Applies the model's standardization to
/// raw data; throws kSchema on a column or standardization mismatch.
Matrix latent_scores(const SpcModel& m, const Dataset& d);

/// Least-squares projection of the dataset's continuous response onto the latent scores.
PreconditionedResponse precondition(const SpcModel& m, const Dataset& d);
PreconditionedResponse precondition(const SpcModel& m, const Dataset& d, const Vector& y);

/// Survival pseudo-response: sum over components of the univariate Cox
/// coefficient of each latent score times that score.
PreconditionedResponse precondition_survival(const SpcModel& m, const Dataset& d);

Vector predict(const SpcModel& m, const Vector& coefs, const Dataset& d_new);

}  // namespace precond
