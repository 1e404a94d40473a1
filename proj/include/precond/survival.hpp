#pragma once

#include "precond/core.hpp"

namespace precond {

/// Cox partial-likelihood score statistic for one covariate at beta = 0.
///
/// u is the first derivative of the Breslow log partial likelihood, v the
/// observed information (sum over event times of the risk-set variance of x,
/// weighted by the number of tied events), z = u / sqrt(v).
struct CoxScore {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

/// Throws kInvalidInput for malformed times and kNoEvents when every sample is censored.
void validate_survival(const SurvivalOutcome& o);

/// Throws kDegenerateCovariate when v is zero.
CoxScore cox_score(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o);

/// Same statistic without the information check; z is 0 when v is 0.
CoxScore cox_score_raw(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o);

/// Breslow log partial likelihood of the single-covariate model at `beta`.
double cox_log_partial_likelihood(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o,
                                  double beta);

enum class CoxPValueKind { kWald, kScore };

struct CoxFit {
  double beta = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  CoxPValueKind p_value_kind = CoxPValueKind::kWald;
  bool converged = false;
  /// Likelihood increases without bound (perfect separation in the risk ordering).
  bool monotone = false;
  int iterations = 0;
};

/// Newton fit of the one-covariate Cox model with a two-sided Wald p-value.
/// Falls back to the score-test p-value when the likelihood is monotone or
/// Newton does not converge. Throws kDegenerateCovariate on zero information.
CoxFit cox_fit_single(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o);

/// Two-sided normal tail probability 2 * (1 - Phi(|z|)).
double two_sided_normal_p(double z);

}  // namespace precond
