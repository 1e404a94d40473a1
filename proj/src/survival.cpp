#include "precond/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace precond {
namespace {

// Sample indices ordered by decreasing time, so that a forward sweep grows
// the risk set {k : time_k >= t}.
std::vector<Index> descending_time_order(const SurvivalOutcome& o) {
  std::vector<Index> order(static_cast<std::size_t>(o.time.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return o.time[a] > o.time[b]; });
  return order;
}

struct LikelihoodTerms {
  double loglik = 0.0;
  double gradient = 0.0;
  double information = 0.0;
};

// Breslow terms at beta for a centered covariate.
LikelihoodTerms breslow_terms(const Vector& xc, const SurvivalOutcome& o,
                              const std::vector<Index>& order, double beta) {
  double offset = 0.0;
  for (Index i = 0; i < xc.size(); ++i) offset = std::max(offset, beta * xc[i]);

  LikelihoodTerms t;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    std::size_t end = pos;
    const double time = o.time[order[pos]];
    while (end < order.size() && o.time[order[end]] == time) {
      const Index k = order[end];
      const double w = std::exp(beta * xc[k] - offset);
      s0 += w;
      s1 += w * xc[k];
      s2 += w * xc[k] * xc[k];
      ++end;
    }
    double events = 0.0, event_sum = 0.0;
    for (std::size_t q = pos; q < end; ++q) {
      const Index k = order[q];
      if (o.status[k] == 1) {
        events += 1.0;
        event_sum += xc[k];
      }
    }
    if (events > 0.0) {
      const double mean = s1 / s0;
      t.loglik += beta * event_sum - events * (offset + std::log(s0));
      t.gradient += event_sum - events * mean;
      t.information += events * std::max(0.0, s2 / s0 - mean * mean);
    }
    pos = end;
  }
  return t;
}

Vector centered(const Eigen::Ref<const Vector>& x) {
  return x.array() - x.mean();
}

}  // namespace

double two_sided_normal_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

void validate_survival(const SurvivalOutcome& o) {
  if (o.time.size() != o.status.size())
    fail(ErrorCode::kInvalidInput, "survival time and status lengths differ");
  bool any_event = false;
  for (Index i = 0; i < o.time.size(); ++i) {
    if (!std::isfinite(o.time[i]) || o.time[i] <= 0.0)
      fail(ErrorCode::kInvalidInput, "survival times must be finite and positive");
    if (o.status[i] != 0 && o.status[i] != 1)
      fail(ErrorCode::kInvalidInput, "survival status must be 0 or 1");
    any_event = any_event || o.status[i] == 1;
  }
  if (!any_event) fail(ErrorCode::kNoEvents, "survival outcome has no events (all censored)");
}

CoxScore cox_score_raw(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o) {
  validate_survival(o);
  if (x.size() != o.time.size())
    fail(ErrorCode::kInvalidInput, "covariate length does not match survival outcome");
  const Vector xc = centered(x);
  const auto order = descending_time_order(o);

  // Welford accumulation of risk-set mean and variance.
  CoxScore s;
  double count = 0.0, mean = 0.0, m2 = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    std::size_t end = pos;
    const double time = o.time[order[pos]];
    while (end < order.size() && o.time[order[end]] == time) {
      const double value = xc[order[end]];
      count += 1.0;
      const double delta = value - mean;
      mean += delta / count;
      m2 += delta * (value - mean);
      ++end;
    }
    for (std::size_t q = pos; q < end; ++q) {
      const Index k = order[q];
      if (o.status[k] == 1) {
        s.u += xc[k] - mean;
        s.v += m2 / count;
      }
    }
    pos = end;
  }
  s.v = std::max(0.0, s.v);
  s.z = s.v > 0.0 ? s.u / std::sqrt(s.v) : 0.0;
  return s;
}

CoxScore cox_score(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o) {
  CoxScore s = cox_score_raw(x, o);
  if (s.v <= 0.0)
    fail(ErrorCode::kDegenerateCovariate, "covariate has zero information in every risk set");
  return s;
}

double cox_log_partial_likelihood(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o,
                                  double beta) {
  validate_survival(o);
  // The likelihood is invariant to shifting x, but the shift changes the
  // linear term; evaluate on the raw covariate to keep it the textbook value.
  const Vector xv = x;
  const auto order = descending_time_order(o);
  return breslow_terms(xv, o, order, beta).loglik;
}

CoxFit cox_fit_single(const Eigen::Ref<const Vector>& x, const SurvivalOutcome& o) {
  const CoxScore score = cox_score(x, o);

  const Vector xc = centered(x);
  const auto order = descending_time_order(o);
  const double sd = std::sqrt(xc.squaredNorm() / static_cast<double>(xc.size()));
  const double beta_limit = 30.0 / sd;  // hazard ratio e^30 per standard deviation

  CoxFit fit;
  double beta = 0.0;
  LikelihoodTerms cur = breslow_terms(xc, o, order, beta);
  for (fit.iterations = 1; fit.iterations <= 100; ++fit.iterations) {
    if (cur.information <= 1e-12 * score.v) {
      fit.monotone = true;
      break;
    }
    double step = cur.gradient / cur.information;
    LikelihoodTerms next = breslow_terms(xc, o, order, beta + step);
    int halvings = 0;
    while (next.loglik < cur.loglik - 1e-12 * std::abs(cur.loglik) && halvings < 40) {
      step *= 0.5;
      next = breslow_terms(xc, o, order, beta + step);
      ++halvings;
    }
    beta += step;
    cur = next;
    if (std::abs(beta) > beta_limit) {
      fit.monotone = true;
      break;
    }
    if (std::abs(step) <= 1e-10 * (1.0 + std::abs(beta))) {
      fit.converged = true;
      break;
    }
  }

  fit.beta = beta;
  if (fit.converged && !fit.monotone && cur.information > 0.0) {
    fit.se = 1.0 / std::sqrt(cur.information);
    fit.p_value = two_sided_normal_p(beta / fit.se);
    fit.p_value_kind = CoxPValueKind::kWald;
  } else {
    fit.se = std::numeric_limits<double>::infinity();
    fit.p_value = two_sided_normal_p(score.z);
    fit.p_value_kind = CoxPValueKind::kScore;
  }
  return fit;
}

}  // namespace precond
