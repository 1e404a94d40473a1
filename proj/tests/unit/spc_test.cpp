#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "precond/screen.hpp"
#include "precond/simgen.hpp"
#include "precond/sparsereg.hpp"
#include "precond/spc.hpp"

using namespace precond;

namespace {

Dataset continuous(Matrix x, Vector y) { return Dataset(std::move(x), ContinuousOutcome{std::move(y)}); }

Dataset random_standardized(std::uint64_t seed, Index n, Index p) {
  RandomStream rng(seed, 0);
  Matrix x = rng.normal_matrix(n, p);
  // a shared component so the leading eigenvalues separate
  const Vector f = rng.normal_vector(n);
  for (Index j = 0; j < p; j += 2) x.col(j) += 1.5 * f;
  return standardize(continuous(x, f + 0.5 * rng.normal_vector(n)));
}

// Centering only, flagged as standardized: S then estimates the raw covariance.
Dataset centered_only(const Dataset& d) {
  Standardization s;
  s.center = d.x().colwise().mean().transpose();
  s.scale = Vector::Ones(d.p());
  s.constant.assign(static_cast<std::size_t>(d.p()), false);
  return apply_standardization(d, s);
}

}  // namespace

TEST(FitSpc, SingleColumn) {
  const Dataset d = random_standardized(1, 12, 3);
  const SpcModel m = fit_spc(d, FeatureSet::from({1}), 1);
  EXPECT_NEAR(m.eigvals[0], d.x().col(1).squaredNorm() / 12.0, 1e-14);
  EXPECT_NEAR(m.eigvecs(0, 0), 1.0, 1e-15);
  const Matrix v = latent_scores(m, d);
  EXPECT_LE((v.col(0) - d.x().col(1) / std::sqrt(m.eigvals[0])).norm(), 1e-12);
}

TEST(FitSpc, TwoEqualColumns) {
  RandomStream rng(2, 0);
  Matrix x(10, 2);
  x.col(0) = rng.normal_vector(10);
  x.col(1) = x.col(0);
  const Dataset d = standardize(continuous(x, rng.normal_vector(10)));
  const SpcModel m = fit_spc(d, FeatureSet::from({0, 1}), 1);
  const double var = d.x().col(0).squaredNorm() / 10.0;
  EXPECT_NEAR(m.eigvals[0], 2.0 * var, 1e-12);
  EXPECT_NEAR(m.eigvecs(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.eigvecs(1, 0), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(FitSpc, EigenpairInvariants) {
  const Dataset d = random_standardized(3, 30, 12);
  const FeatureSet b = FeatureSet::range(0, 12);
  const SpcModel m = fit_spc(d, b, 3);
  const Matrix s = d.x().transpose() * d.x() / 30.0;
  EXPECT_LE((m.eigvecs.transpose() * m.eigvecs - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
  for (Index c = 0; c < 3; ++c) {
    EXPECT_LE((s * m.eigvecs.col(c) - m.eigvals[c] * m.eigvecs.col(c)).norm(), 1e-8);
    EXPECT_NEAR((d.x() * m.eigvecs.col(c)).squaredNorm() / 30.0, m.eigvals[c], 1e-8);
    if (c > 0) EXPECT_GT(m.eigvals[c - 1], m.eigvals[c]);
    Index big = 0;
    m.eigvecs.col(c).cwiseAbs().maxCoeff(&big);
    EXPECT_GT(m.eigvecs(big, c), 0.0);
  }
}

TEST(FitSpc, GramSideMatchesCovarianceSide) {
  const Dataset d = random_standardized(4, 15, 40);
  const FeatureSet b = FeatureSet::range(0, 40);
  const SpcModel m = fit_spc(d, b, 3);  // |B| > n: inner-product route
  const Matrix s = d.x().transpose() * d.x() / 15.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  for (Index c = 0; c < 3; ++c) {
    EXPECT_NEAR(m.eigvals[c], eig.eigenvalues()[39 - c], 1e-10);
    const Vector ref = eig.eigenvectors().col(39 - c);
    EXPECT_NEAR(std::abs(ref.dot(m.eigvecs.col(c))), 1.0, 1e-10);
    EXPECT_LE((s * m.eigvecs.col(c) - m.eigvals[c] * m.eigvecs.col(c)).norm(), 1e-8);
  }
}

TEST(FitSpc, RankErrors) {
  const Dataset d = random_standardized(5, 6, 10);
  try {
    fit_spc(d, FeatureSet::from({0, 1}), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRank);
  }
  try {
    fit_spc(d, FeatureSet::range(0, 10), 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRank);
  }
  RandomStream rng(5, 1);
  Matrix x(8, 2);
  x.col(0) = rng.normal_vector(8);
  x.col(1) = -x.col(0);
  const Dataset dup = standardize(continuous(x, rng.normal_vector(8)));
  try {
    fit_spc(dup, FeatureSet::from({0, 1}), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRank);
  }
}

TEST(FitSpc, NoisyFactorEigenvalue) {
  FactorModelSpec spec = single_factor_spec(40, 20, 4.0, 1.0, 1.0, 1.0);
  RandomStream rng(6, 0);
  const Dataset d = centered_only(gen_factor_model(spec, 2000, rng).data);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 20), 1);
  EXPECT_NEAR(m.eigvals[0], 5.0, 0.5);
}

TEST(LatentScores, OrthogonalWithNormN) {
  const Dataset d = random_standardized(7, 25, 9);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 9), 3);
  const Matrix v = latent_scores(m, d);
  const Matrix g = v.transpose() * v / 25.0;
  EXPECT_LE((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LatentScores, SchemaMismatch) {
  const Dataset d = random_standardized(8, 10, 5);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 5), 1);
  const Dataset other = random_standardized(9, 10, 4);
  try {
    latent_scores(m, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
  }
}

TEST(LatentScores, RawDataGetsModelStandardization) {
  RandomStream rng(10, 0);
  const Dataset raw = continuous(rng.normal_matrix(12, 4) * 3.0, rng.normal_vector(12));
  const Dataset st = standardize(raw);
  const SpcModel m = fit_spc(st, FeatureSet::range(0, 4), 2);
  EXPECT_LE((latent_scores(m, raw) - latent_scores(m, st)).cwiseAbs().maxCoeff(), 1e-12);
}

// The signal block alone: the leading component of 20 columns V + 0.7 E tracks V closely.
TEST(LatentScores, Example1SignalBlockRecoversLatentFactor) {
  double total = 0.0;
  for (int r = 0; r < 20; ++r) {
    RandomStream rng(11, static_cast<std::uint64_t>(r));
    Example1Params prm;
    prm.n_test = 2;
    const Example1Data e = gen_example1(prm, rng);
    const Dataset train = standardize(e.split.train);
    const Vector v = latent_scores(fit_spc(train, e.truth, 1), train).col(0);
    const Vector vc = v.array() - v.mean();
    const Vector tc = e.v_train.array() - e.v_train.mean();
    total += std::abs(vc.dot(tc) / (vc.norm() * tc.norm()));
  }
  EXPECT_GT(total / 20.0, 0.95);
}

TEST(Precondition, ProjectionProperties) {
  const Dataset d = random_standardized(12, 30, 10);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 10), 2);
  const PreconditionedResponse r = precondition(m, d);
  EXPECT_LE(r.y_tilde.norm(), d.y().norm() + 1e-12);
  const PreconditionedResponse again = precondition(m, d, r.y_tilde);
  EXPECT_LE((again.y_tilde - r.y_tilde).norm(), 1e-10);
  const PreconditionedResponse scaled = precondition(m, d, -3.0 * d.y());
  EXPECT_LE((scaled.y_tilde + 3.0 * r.y_tilde).norm(), 1e-10);
  // y_tilde lies in the span of the factors
  const Vector resid = r.y_tilde - r.factors * r.regression_coefs;
  EXPECT_LE(resid.norm(), 1e-12);
}

TEST(Precondition, InSpanAndOrthogonal) {
  const Dataset d = random_standardized(13, 20, 8);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 8), 2);
  const Matrix v = latent_scores(m, d);
  const Vector in_span = 2.0 * v.col(0) - v.col(1);
  EXPECT_LE((precondition(m, d, in_span).y_tilde - in_span).norm(), 1e-10);
  RandomStream rng(13, 1);
  Vector w = rng.normal_vector(20);
  w -= v * (v.transpose() * v).ldlt().solve(v.transpose() * w);
  EXPECT_LE(precondition(m, d, w).y_tilde.norm(), 1e-10);
  EXPECT_LT(precondition(m, d, w + in_span).y_tilde.norm(), (w + in_span).norm());
}

TEST(Predict, TrainingDataAndZeroCoefs) {
  const Dataset d = random_standardized(14, 20, 6);
  const SpcModel m = fit_spc(d, FeatureSet::range(0, 6), 2);
  const PreconditionedResponse r = precondition(m, d);
  EXPECT_LE((predict(m, r.regression_coefs, d) - r.y_tilde).norm(), 1e-12);
  EXPECT_EQ(predict(m, Vector::Zero(2), d), Vector::Zero(20));
}

TEST(Predict, Example1BeatsFiveVariableStepwise) {
  double spc_corr = 0.0, fs_corr = 0.0;
  auto corr = [](const Vector& a, const Vector& b) {
    const Vector ac = a.array() - a.mean(), bc = b.array() - b.mean();
    return ac.dot(bc) / (ac.norm() * bc.norm());
  };
  for (int r = 0; r < 20; ++r) {
    RandomStream rng(15, static_cast<std::uint64_t>(r));
    const Example1Data e = gen_example1(Example1Params{}, rng);
    const Standardization st = fit_standardization(e.split.train.x());
    const Dataset train = apply_standardization(e.split.train, st);
    const Dataset test = apply_standardization(e.split.test, st);
    const Vector yc = train.y().array() - train.y().mean();
    const FeatureSet b = select(pearson_scores(train), ScreenConfig::default_for(train.n(), train.p()));
    const SpcModel m = fit_spc(train, b, 1);
    spc_corr += corr(predict(m, precondition(m, train, yc).regression_coefs, test), test.y());
    const StepwisePath fs = forward_stepwise(train.x(), yc, 5);
    fs_corr += corr(test.x() * fs.coefs.back(), test.y());
  }
  EXPECT_GT(spc_corr, fs_corr);
}
