#include <cmath>

#include <gtest/gtest.h>

#include "precond/classify.hpp"

using namespace precond;

namespace {

Dataset two_class(std::uint64_t seed, Index per_class, Index p, double shift) {
  RandomStream rng(seed, 0);
  Matrix x = rng.normal_matrix(2 * per_class, p);
  IntVector lab(2 * per_class);
  for (Index i = 0; i < 2 * per_class; ++i) {
    lab[i] = i < per_class ? 1 : 2;
    if (lab[i] == 2) x.row(i).head(std::min<Index>(p, 5)).array() += shift;
  }
  return Dataset(x, ClassOutcome{lab, 2});
}

}  // namespace

TEST(Nsc, SoftThreshold) {
  EXPECT_DOUBLE_EQ(soft_threshold(2.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(soft_threshold(-2.0, 0.5), -1.5);
  EXPECT_DOUBLE_EQ(soft_threshold(0.3, 0.5), 0.0);
}

TEST(Nsc, DeltaZeroKeepsCentroids) {
  const Dataset d = two_class(1, 10, 6, 1.0);
  const NscModel m = nsc_fit(d, 0.0);
  EXPECT_LE((m.shrunken_centroids - m.centroids).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(m.priors.sum(), 1.0, 1e-15);
}

TEST(Nsc, ShrinkageNeverGrowsDeviations) {
  const Dataset d = two_class(2, 12, 8, 1.0);
  const NscModel base = nsc_fit(d, 0.0);
  const NscModel m = nsc_fit(d, 0.7);
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 8; ++j) {
      const double shrunk = (m.shrunken_centroids(k, j) - m.overall_centroid[j]) /
                            (m.mk[k] * (m.pooled_sd[j] + m.s0));
      EXPECT_LE(std::abs(shrunk), std::abs(base.deviations(k, j)) + 1e-12);
      EXPECT_NEAR(shrunk, soft_threshold(base.deviations(k, j), 0.7), 1e-10);
    }
}

TEST(Nsc, LargeDeltaGivesPriors) {
  IntVector lab(9);
  lab << 1, 1, 1, 2, 2, 2, 2, 2, 2;
  RandomStream rng(3, 0);
  const Dataset d(rng.normal_matrix(9, 4), ClassOutcome{lab, 2});
  const NscModel m = nsc_fit(d, 1e6);
  for (Index k = 0; k < 2; ++k)
    EXPECT_LE((m.shrunken_centroids.row(k).transpose() - m.overall_centroid).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix pr = nsc_predict_proba(m, d);
  for (Index i = 0; i < 9; ++i) {
    EXPECT_NEAR(pr(i, 0), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(pr(i, 1), 2.0 / 3.0, 1e-12);
  }
}

TEST(Nsc, SampleAtCentroidPrefersItsClass) {
  const Dataset d = two_class(4, 10, 5, 2.0);
  const NscModel m = nsc_fit(d, 0.0);
  Matrix at(2, 5);
  at.row(0) = m.centroids.row(0);
  at.row(1) = m.centroids.row(1);
  IntVector lab(2);
  lab << 1, 2;
  const Matrix pr = nsc_predict_proba(m, Dataset(at, ClassOutcome{lab, 2}));
  EXPECT_GT(pr(0, 0), pr(0, 1));
  EXPECT_GT(pr(1, 1), pr(1, 0));
  EXPECT_NEAR(pr.row(0).sum(), 1.0, 1e-15);
}

TEST(Nsc, SeparableTrainingAccuracy) {
  const Dataset d = two_class(5, 30, 50, 2.5);
  const NscModel m = nsc_fit_auto(d);
  const Matrix pr = nsc_predict_proba(m, d);
  Index right = 0;
  for (Index i = 0; i < d.n(); ++i) {
    Index best = 0;
    pr.row(i).maxCoeff(&best);
    if (best + 1 == d.classes().label[i]) ++right;
  }
  EXPECT_GT(static_cast<double>(right) / static_cast<double>(d.n()), 0.9);
  EXPECT_GE(m.delta, 0.0);
  EXPECT_LE(m.delta, m.deviations.cwiseAbs().maxCoeff() + 1e-12);
}

TEST(Nsc, PermutationEquivariance) {
  const Dataset d = two_class(6, 10, 7, 1.0);
  std::vector<Index> perm{6, 2, 0, 5, 1, 4, 3};
  Matrix xp(d.n(), 7);
  for (Index j = 0; j < 7; ++j) xp.col(j) = d.x().col(perm[static_cast<std::size_t>(j)]);
  const Dataset dp(xp, d.outcome());
  const Matrix a = nsc_predict_proba(nsc_fit(d, 0.4), d);
  const Matrix b = nsc_predict_proba(nsc_fit(dp, 0.4), dp);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nsc, SingleSampleClassRejected) {
  IntVector lab(5);
  lab << 1, 1, 1, 1, 2;
  RandomStream rng(7, 0);
  try {
    nsc_fit(Dataset(rng.normal_matrix(5, 3), ClassOutcome{lab, 2}), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidClass);
  }
}

TEST(Logit, ValuesAndClipping) {
  Matrix pr(4, 2);
  pr << 0.5, 0.5, 0.1, 0.9, 1.0, 0.0, 0.0, 1.0;
  const Vector l = logit_precondition(pr, 1e-6);
  EXPECT_NEAR(l[0], 0.0, 1e-15);
  EXPECT_NEAR(l[1], std::log(9.0), 1e-12);
  EXPECT_NEAR(l[2], std::log(1e-6 / (1.0 - 1e-6)), 1e-9);
  EXPECT_NEAR(l[3], -l[2], 1e-9);
  EXPECT_TRUE(l.allFinite());
}

TEST(Logit, Monotone) {
  Matrix pr(50, 2);
  for (Index i = 0; i < 50; ++i) {
    pr(i, 1) = 0.01 + 0.98 * static_cast<double>(i) / 49.0;
    pr(i, 0) = 1.0 - pr(i, 1);
  }
  const Vector l = logit_precondition(pr);
  for (Index i = 1; i < 50; ++i) EXPECT_GT(l[i], l[i - 1]);
}

TEST(Logit, RejectsBadClip) {
  Matrix pr(1, 2);
  pr << 0.5, 0.5;
  EXPECT_THROW(logit_precondition(pr, 0.5), Error);
  EXPECT_THROW(logit_precondition(pr, 0.0), Error);
}
