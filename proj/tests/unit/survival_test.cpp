#include <cmath>

#include <gtest/gtest.h>

#include "precond/survival.hpp"

using namespace precond;

namespace {

struct Instance {
  Vector x;
  SurvivalOutcome o;
};

Instance random_instance(std::uint64_t seed, Index n, double effect = 0.0, bool ties = false) {
  RandomStream rng(seed, 0);
  Instance in{rng.normal_vector(n), {Vector(n), IntVector(n)}};
  for (Index i = 0; i < n; ++i) {
    const double event = -std::log(rng.uniform()) / std::exp(effect * in.x[i]);
    const double censor = -std::log(rng.uniform()) / 0.3;
    in.o.time[i] = std::min(event, censor);
    in.o.status[i] = event <= censor ? 1 : 0;
    if (ties) in.o.time[i] = std::ceil(in.o.time[i] * 4.0) / 4.0;
  }
  in.o.status[0] = 1;
  return in;
}

double central(const Instance& in, double h) {
  return (cox_log_partial_likelihood(in.x, in.o, h) - cox_log_partial_likelihood(in.x, in.o, -h)) / (2.0 * h);
}

}  // namespace

TEST(CoxScore, HandExample) {
  Vector x(3), t(3);
  x << 3, 2, 1;
  t << 1, 2, 3;
  const CoxScore s = cox_score(x, SurvivalOutcome{t, IntVector::Ones(3)});
  EXPECT_NEAR(s.u, 1.5, 1e-14);
  EXPECT_NEAR(s.v, 2.0 / 3.0 + 0.25, 1e-14);
  EXPECT_NEAR(s.z, 1.5 / std::sqrt(2.0 / 3.0 + 0.25), 1e-14);
}

TEST(CoxScore, ConstantCovariate) {
  Vector t(4);
  t << 1, 2, 3, 4;
  const SurvivalOutcome o{t, IntVector::Ones(4)};
  const Vector x = Vector::Constant(4, 2.5);
  EXPECT_EQ(cox_score_raw(x, o).u, 0.0);
  try {
    cox_score(x, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCovariate);
  }
}

TEST(CoxScore, MatchesFiniteDifference) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Instance in = random_instance(s, 60, 0.5, s % 2 == 0);
    // Richardson extrapolation of the central difference
    const double h = 1e-3;
    const double d = (4.0 * central(in, h / 2.0) - central(in, h)) / 3.0;
    EXPECT_NEAR(cox_score(in.x, in.o).u, d, 1e-8) << "seed " << s;
  }
}

TEST(CoxScore, ShiftAndScaleInvariance) {
  const Instance in = random_instance(40, 50, 0.7);
  const CoxScore a = cox_score(in.x, in.o);
  const CoxScore shifted = cox_score(in.x.array() + 10.0, in.o);
  const CoxScore scaled = cox_score(in.x * 3.5, in.o);
  EXPECT_NEAR(shifted.u, a.u, 1e-10);
  EXPECT_NEAR(shifted.v, a.v, 1e-10);
  EXPECT_NEAR(scaled.z, a.z, 1e-12);
}

TEST(CoxScore, Validation) {
  Vector t(3);
  t << 1, 2, 3;
  try {
    cox_score(Vector::LinSpaced(3, 0, 1), SurvivalOutcome{t, IntVector::Zero(3)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEvents);
  }
  t[1] = 0.0;
  try {
    validate_survival(SurvivalOutcome{t, IntVector::Ones(3)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(CoxFit, StrongEffectIsSignificant) {
  int hits = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const Instance in = random_instance(1000 + r, 200, 2.0);
    if (cox_fit_single(in.x, in.o).p_value < 1e-3) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(CoxFit, ConvergesToStationaryPoint) {
  const Instance in = random_instance(50, 150, 0.8);
  const CoxFit f = cox_fit_single(in.x, in.o);
  ASSERT_TRUE(f.converged);
  EXPECT_EQ(f.p_value_kind, CoxPValueKind::kWald);
  const double h = 1e-4;
  const double g = (cox_log_partial_likelihood(in.x, in.o, f.beta + h) -
                    cox_log_partial_likelihood(in.x, in.o, f.beta - h)) / (2.0 * h);
  EXPECT_NEAR(g, 0.0, 1e-5);
  EXPECT_GT(f.beta, 0.3);
}

TEST(CoxFit, NegationFlipsSign) {
  const Instance in = random_instance(51, 120, 0.5);
  const CoxFit a = cox_fit_single(in.x, in.o);
  const CoxFit b = cox_fit_single(-in.x, in.o);
  EXPECT_NEAR(a.beta, -b.beta, 1e-8);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-10);
}

TEST(CoxFit, MonotoneLikelihoodFallsBackToScore) {
  // Risk ordering perfectly explained by x: larger x fails first.
  const Index n = 20;
  Vector x(n), t(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = static_cast<double>(n - i);
    t[i] = static_cast<double>(i + 1);
  }
  const SurvivalOutcome o{t, IntVector::Ones(n)};
  const CoxFit f = cox_fit_single(x, o);
  EXPECT_TRUE(f.monotone);
  EXPECT_EQ(f.p_value_kind, CoxPValueKind::kScore);
  EXPECT_NEAR(f.p_value, two_sided_normal_p(cox_score(x, o).z), 1e-15);
}

TEST(CoxFit, NormalTail) {
  EXPECT_NEAR(two_sided_normal_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_NEAR(two_sided_normal_p(0.0), 1.0, 1e-15);
}
