#pragma once

#include "precond/core.hpp"

namespace precond {

// ---- Example 1: single latent factor driving the first `n_signal` features.
struct Example1Params {
  Index n_train = 20;
  Index n_test = 200;
  Index p = 500;
  Index n_signal = 20;
  double beta0 = 0.0;
  double beta1 = 2.0;
  double alpha1 = 1.0;  // loading of V on signal features
  double sigma0 = 1.0;
  double sigma1 = 2.5;
  /// kClass: label 1 when y < 0, else 2.  kSurvival: exponential times with
  /// log-hazard survival_effect * y and independent exponential censoring.
  OutcomeKind outcome = OutcomeKind::kContinuous;
  double survival_effect = 0.5;
  double censoring_rate = 0.3;
};

struct Example1Data {
  SplitDataset split;
  Vector v_train;
  Vector v_test;
  Vector y_train;  // continuous response even in classification mode
  Vector y_test;
  FeatureSet truth;
};

Example1Data gen_example1(const Example1Params& params, RandomStream& rng);

// ---- Example 2: four-variable Gaussian block defined by its precision matrix.
struct Example2Population {
  Eigen::Matrix4d precision;   // order (Y, X1, X2, X3)
  Eigen::Matrix4d covariance;  // exact inverse
  Eigen::Vector3d beta;        // regression of Y on (X1, X2, X3)
  Eigen::Vector3d marginal_corr;
};

Example2Population example2_population();

struct Example2Params {
  Index n_train = 100;
  Index n_test = 200;
  Index p_noise = 297;
};

struct GeneratedData {
  Dataset train;
  std::optional<Dataset> test;
  FeatureSet truth;
};

GeneratedData gen_example2(const Example2Params& params, RandomStream& rng);

// ---- Example 3: exchangeable correlation 0.5 among the first 40 features.
struct Example3Params {
  Index n_train = 50;
  Index n_test = 200;
  Index p = 1000;
  Index n_signal = 40;
  double sigma = 5.0;
};

GeneratedData gen_example3(const Example3Params& params, RandomStream& rng);
/// Population covariance of the Example 3 predictors.
Matrix example3_covariance(const Example3Params& params);

// ---- General noisy factor model.
struct FactorModelSpec {
  Index p = 0;
  Index m = 0;         // factors in X
  Index k = 0;         // factors in Y, k <= m
  Vector lambdas;      // m, non-increasing, positive
  Matrix u;            // p x m, orthonormal columns
  double sigma0 = 1.0;
  double sigma1 = 1.0;
  Vector beta;         // k
};

/// Throws kSpec when dimensions disagree, u is not orthonormal to 1e-10, or lambdas are not positive and non-increasing.
void validate_spec(const FactorModelSpec& spec);

struct PopulationOracle {
  Vector sigma_py;    // p
  Vector theta;       // p
  double sigma_eps2 = 0.0;
  Matrix w;           // p x k, rows w_j = (sqrt(lambda_k) u_jk)
  Vector d_k;         // l_1..l_k, l = lambda + sigma0^2
  FeatureSet a;       // theta_j != 0
  FeatureSet b;       // sigma_py_j != 0
  FeatureSet d;       // ||w_j|| != 0
};

PopulationOracle oracle(const FactorModelSpec& spec);

struct FactorDraw {
  Dataset data;
  Matrix v;  // n x m realized factors
};

FactorDraw gen_factor_model(const FactorModelSpec& spec, Index n, RandomStream& rng);

/// sum_k lambda_k u_k u_k^T + sigma0^2 I.
Matrix population_covariance(const FactorModelSpec& spec);

struct IrrepresentableResult {
  double value = 0.0;
  bool pass = false;
};

/// ||Sigma_{A^c A} Sigma_{AA}^{-1} sign(theta_A)||_inf; throws kSingular when Sigma_AA is singular.
IrrepresentableResult irrepresentable_check(const Matrix& sigma, const FeatureSet& a,
                                            const Vector& sign_a);
/// Same for a factor spec, with A and theta from the oracle (no p x p matrix is formed).
IrrepresentableResult irrepresentable_check(const FactorModelSpec& spec);

/// max over j outside `aplus` of ||Sigma_{A+A+}^{-1} Sigma_{A+ j}||_1.
double aplus_condition(const FactorModelSpec& spec, const FeatureSet& aplus);

/// Single-factor spec with equal loadings on the first `n_signal` features.
FactorModelSpec single_factor_spec(Index p, Index n_signal, double lambda, double beta,
                                   double sigma0, double sigma1);

// ---- Two-factor regime where part of A carries vanishing coefficients.
struct Prop5Params {
  double alpha = 0.5;
  double c = 0.5;            // log p = c n^alpha before capping
  Index n = 400;
  Index p_cap = 20000;
  double memory_budget_bytes = 1024.0 * 1024.0 * 1024.0;
  Index n_plus = 5;
  Index n_minus = 5;
  double lambda1 = 16.0;
  double lambda2 = 3.0;
  double sigma0 = 1.0;
  double sigma1 = 1.0;
  double beta1 = 2.0;
  double minus_loading = 1.5;  // loading of u_1 on A- relative to A+
};

struct Prop5Regime {
  FactorModelSpec spec;
  FeatureSet aplus;
  FeatureSet aminus;
  double t_n = 0.0;  // size of the A- coefficients
};

/// Spec only; throws kSize when the n x p design would exceed the memory budget.
Prop5Regime prop5_spec(const Prop5Params& params);

struct Prop5Draw {
  Prop5Regime regime;
  Dataset data;
};

Prop5Draw gen_prop5_regime(const Prop5Params& params, RandomStream& rng);

}  // namespace precond
