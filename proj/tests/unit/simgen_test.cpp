#include <cmath>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "precond/simgen.hpp"

using namespace precond;

namespace {

double corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean(), bc = b.array() - b.mean();
  return ac.dot(bc) / (ac.norm() * bc.norm());
}

Matrix sample_cov(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

FactorModelSpec two_factor_spec(Index p) {
  FactorModelSpec s;
  s.p = p;
  s.m = 2;
  s.k = 2;
  s.lambdas.resize(2);
  s.lambdas << 6.0, 2.0;
  s.u = Matrix::Zero(p, 2);
  s.u.col(0).head(4).setConstant(0.5);
  s.u(4, 1) = 0.6;
  s.u(5, 1) = 0.8;
  s.beta.resize(2);
  s.beta << 1.5, -1.0;
  s.sigma0 = 1.0;
  s.sigma1 = 0.5;
  return s;
}

}  // namespace

TEST(Example1, NoiseFreeDegeneracy) {
  Example1Params prm;
  prm.sigma0 = 0.0;
  prm.sigma1 = 0.0;
  RandomStream rng(1, 0);
  const Example1Data d = gen_example1(prm, rng);
  EXPECT_LE((d.y_train - 2.0 * d.v_train).cwiseAbs().maxCoeff(), 1e-14);
  for (Index j = 0; j < 20; ++j) EXPECT_EQ(d.split.train.x().col(j), d.v_train);
  EXPECT_EQ(d.truth, FeatureSet::range(0, 20));
}

TEST(Example1, SignalCorrelationWithLatent) {
  Example1Params prm;
  prm.n_train = 2000;
  prm.n_test = 2;
  prm.p = 30;
  RandomStream rng(2, 0);
  const Example1Data d = gen_example1(prm, rng);
  const double expect = 1.0 / std::sqrt(1.0 + prm.sigma0 * prm.sigma0);
  for (Index j = 0; j < 20; ++j) EXPECT_NEAR(corr(d.split.train.x().col(j), d.v_train), expect, 0.03);
}

TEST(Example1, ClassAndSurvivalOutcomes) {
  Example1Params prm;
  prm.outcome = OutcomeKind::kClass;
  RandomStream rng(3, 0);
  const Example1Data c = gen_example1(prm, rng);
  for (Index i = 0; i < c.split.train.n(); ++i)
    EXPECT_EQ(c.split.train.classes().label[i], c.y_train[i] < 0.0 ? 1 : 2);
  prm.outcome = OutcomeKind::kSurvival;
  RandomStream rng2(3, 1);
  const Example1Data s = gen_example1(prm, rng2);
  EXPECT_GT(s.split.train.survival().status.sum(), 0);
}

TEST(Example2, PopulationQuantities) {
  const Example2Population pop = example2_population();
  EXPECT_NEAR(pop.marginal_corr[2], 0.0, 1e-14);
  EXPECT_NEAR(pop.marginal_corr[0], -0.5, 1e-14);
  EXPECT_NEAR(pop.marginal_corr[1], -0.5, 1e-14);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(pop.beta[j], -0.5, 1e-14);
  EXPECT_LE((pop.covariance * pop.precision - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Example2, Shape) {
  RandomStream rng(4, 0);
  const GeneratedData g = gen_example2(Example2Params{}, rng);
  EXPECT_EQ(g.train.p(), 300);
  EXPECT_EQ(g.truth, FeatureSet::range(0, 3));
  ASSERT_TRUE(g.test.has_value());
}

TEST(Example3, BlockCorrelation) {
  Example3Params prm;
  prm.n_train = 5000;
  prm.n_test = 0;
  prm.p = 60;
  RandomStream rng(5, 0);
  const GeneratedData g = gen_example3(prm, rng);
  double total = 0.0;
  int pairs = 0;
  for (Index a = 0; a < 40; ++a)
    for (Index b = a + 1; b < 40; ++b, ++pairs) total += corr(g.train.x().col(a), g.train.x().col(b));
  EXPECT_NEAR(total / pairs, 0.5, 0.02);
  for (Index j = 40; j < 60; ++j) EXPECT_LT(std::abs(corr(g.train.x().col(0), g.train.x().col(j))), 0.05);
  const Matrix sigma = example3_covariance(prm);
  EXPECT_EQ(sigma(0, 1), 0.5);
  EXPECT_EQ(sigma(0, 45), 0.0);
  EXPECT_EQ(sigma(3, 3), 1.0);
}

TEST(FactorModel, SampleCovarianceMatchesPopulation) {
  const FactorModelSpec s = two_factor_spec(10);
  RandomStream rng(6, 0);
  const FactorDraw d = gen_factor_model(s, 10000, rng);
  const Matrix pop = population_covariance(s);
  Eigen::SelfAdjointEigenSolver<Matrix> e(sample_cov(d.data.x()) - pop);
  const double err = e.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> ep(pop);
  EXPECT_LT(err, 0.05 * ep.eigenvalues().maxCoeff());
  const Vector y = d.data.y();
  const double var_y = (y.array() - y.mean()).square().sum() / 9999.0;
  EXPECT_NEAR(var_y, s.beta.squaredNorm() + s.sigma1 * s.sigma1,
              0.03 * (s.beta.squaredNorm() + s.sigma1 * s.sigma1));
}

TEST(FactorModel, NoiseFreeRankOne) {
  FactorModelSpec s = single_factor_spec(8, 3, 2.0, 1.0, 0.0, 1.0);
  RandomStream rng(7, 0);
  const FactorDraw d = gen_factor_model(s, 50, rng);
  Eigen::ColPivHouseholderQR<Matrix> qr(d.data.x());
  EXPECT_EQ(qr.rank(), 1);
}

TEST(FactorModel, Reproducible) {
  const FactorModelSpec s = two_factor_spec(7);
  RandomStream a(8, 3), b(8, 3);
  EXPECT_EQ(gen_factor_model(s, 20, a).data.x(), gen_factor_model(s, 20, b).data.x());
}

TEST(FactorModel, RejectsNonOrthonormal) {
  FactorModelSpec s = two_factor_spec(7);
  s.u(0, 1) = 0.1;
  try {
    validate_spec(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpec);
  }
}

TEST(Oracle, SingleFactorClosedForm) {
  const FactorModelSpec s = single_factor_spec(10, 4, 4.0, 2.0, 1.0, 0.7);
  const PopulationOracle o = oracle(s);
  for (Index j = 0; j < 10; ++j) EXPECT_NEAR(o.theta[j], 0.8 * s.u(j, 0), 1e-15);
  EXPECT_NEAR(o.sigma_eps2, 0.49 + 0.8, 1e-14);
  EXPECT_EQ(o.a, o.b);
  EXPECT_EQ(o.a, FeatureSet::range(0, 4));
}

TEST(Oracle, NoiseFreeResidualVariance) {
  const FactorModelSpec s = single_factor_spec(6, 2, 3.0, 1.5, 0.0, 0.9);
  EXPECT_NEAR(oracle(s).sigma_eps2, 0.81, 1e-15);
}

TEST(Oracle, SetConsistency) {
  const FactorModelSpec s = two_factor_spec(10);
  const PopulationOracle o = oracle(s);
  for (Index j = 0; j < 10; ++j) {
    if (!o.a.contains(j)) EXPECT_EQ(o.theta[j], 0.0);
    if (!o.b.contains(j)) EXPECT_EQ(o.sigma_py[j], 0.0);
    if (o.a.contains(j) || o.b.contains(j)) EXPECT_TRUE(o.d.contains(j));
  }
  EXPECT_EQ(o.d, FeatureSet::range(0, 6));
}

TEST(Oracle, OlsRecoversTheta) {
  const FactorModelSpec s = two_factor_spec(8);
  RandomStream rng(9, 0);
  const FactorDraw d = gen_factor_model(s, 100000, rng);
  const Matrix xc = d.data.x().rowwise() - d.data.x().colwise().mean();
  const Vector yc = d.data.y().array() - d.data.y().mean();
  const Vector b = xc.colPivHouseholderQr().solve(yc);
  const PopulationOracle o = oracle(s);
  for (Index j = 0; j < 8; ++j) {
    if (o.a.contains(j))
      EXPECT_NEAR(b[j], o.theta[j], 0.02 * std::abs(o.theta[j]));
    else
      EXPECT_LT(std::abs(b[j]), 0.02);
  }
  const double resid = (yc - xc * b).squaredNorm() / 100000.0;
  EXPECT_NEAR(resid, o.sigma_eps2, 0.03 * o.sigma_eps2);
}

TEST(Irrepresentable, OrthogonalBlocksPass) {
  Matrix sigma = Matrix::Identity(5, 5);
  sigma(0, 1) = sigma(1, 0) = 0.3;
  sigma(3, 4) = sigma(4, 3) = 0.6;
  const IrrepresentableResult r = irrepresentable_check(sigma, FeatureSet::from({0, 1}), Vector::Ones(2));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Irrepresentable, ApproachesOneAsOffLoadingMatches) {
  double prev = 0.0;
  for (double c : {0.5, 0.9, 0.99, 0.999}) {
    const Index q = 5, p = q + 1;
    FactorModelSpec s;
    s.p = p;
    s.m = 1;
    s.k = 1;
    s.lambdas = Vector::Constant(1, 1e4);
    s.u = Matrix::Ones(p, 1);
    s.u(q, 0) = c;
    s.u /= s.u.norm();
    s.beta = Vector::Constant(1, 1.0);
    const IrrepresentableResult r =
        irrepresentable_check(population_covariance(s), FeatureSet::range(0, q), Vector::Ones(q));
    EXPECT_GT(r.value, prev);
    EXPECT_LT(r.value, 1.0);
    prev = r.value;
  }
  EXPECT_GT(prev, 0.99);
}

TEST(Irrepresentable, SingularBlock) {
  Matrix sigma = Matrix::Ones(3, 3);
  try {
    irrepresentable_check(sigma, FeatureSet::from({0, 1}), Vector::Ones(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingular);
  }
}

TEST(Irrepresentable, SpecOverloadMatchesMatrix) {
  const FactorModelSpec s = two_factor_spec(9);
  const PopulationOracle o = oracle(s);
  Vector sign(o.a.size());
  for (Index i = 0; i < o.a.size(); ++i) sign[i] = o.theta[o.a.indices[static_cast<std::size_t>(i)]] > 0 ? 1.0 : -1.0;
  const IrrepresentableResult dense = irrepresentable_check(population_covariance(s), o.a, sign);
  EXPECT_NEAR(irrepresentable_check(s).value, dense.value, 1e-12);
}

TEST(Prop5, SpecPassesConditions) {
  const Prop5Regime r = prop5_spec(Prop5Params{});
  EXPECT_EQ(r.spec.p, 20000);
  EXPECT_TRUE(irrepresentable_check(r.spec).pass);
  EXPECT_LT(aplus_condition(r.spec, r.aplus), 1.0);
  const PopulationOracle o = oracle(r.spec);
  std::vector<Index> a = r.aplus.indices;
  a.insert(a.end(), r.aminus.indices.begin(), r.aminus.indices.end());
  EXPECT_EQ(o.a, FeatureSet::from(a));
}

TEST(Prop5, MinusCoefficientsShrinkWithN) {
  double prev = 1e300;
  for (Index n : {200, 400, 800}) {
    Prop5Params prm;
    prm.n = n;
    prm.memory_budget_bytes = 1e12;
    const Prop5Regime r = prop5_spec(prm);
    const Vector theta = oracle(r.spec).theta;
    double norm2 = 0.0;
    for (Index j : r.aminus.indices) norm2 += theta[j] * theta[j];
    EXPECT_LT(std::sqrt(norm2), prev);
    prev = std::sqrt(norm2);
  }
}

TEST(Prop5, MemoryBudget) {
  Prop5Params prm;
  prm.memory_budget_bytes = 1e6;
  try {
    prop5_spec(prm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSize);
  }
}
