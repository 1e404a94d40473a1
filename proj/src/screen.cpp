#include "precond/screen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "precond/survival.hpp"

namespace precond {

std::string_view score_kind_name(ScoreKind kind) noexcept {
  switch (kind) {
    case ScoreKind::kPearson: return "pearson";
    case ScoreKind::kCoxScore: return "cox-score";
    case ScoreKind::kClassScore: return "class-score";
  }
  return "unknown";
}

ScreenConfig ScreenConfig::absolute(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    fail(ErrorCode::kInvalidInput, "screen threshold must be finite and non-negative");
  ScreenConfig c;
  c.threshold = tau;
  return c;
}

ScreenConfig ScreenConfig::top(Index m) {
  if (m < 1) fail(ErrorCode::kInvalidInput, "screen top-m count must be at least 1");
  ScreenConfig c;
  c.top_count = m;
  return c;
}

ScreenConfig ScreenConfig::default_for(Index n, Index p) {
  return top(std::min(p, std::max<Index>(20, (n + 1) / 2)));
}

namespace {

std::vector<bool> nonconstant_columns(const Matrix& x) {
  std::vector<bool> ok(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double ss = (x.col(j).array() - mean).square().sum();
    const double magnitude = std::max(1.0, x.col(j).cwiseAbs().maxCoeff());
    ok[static_cast<std::size_t>(j)] =
        std::sqrt(ss / static_cast<double>(x.rows() - 1)) > 1e-12 * magnitude;
  }
  return ok;
}

ScreenScores class_scores(const Dataset& d) {
  const auto& c = d.classes();
  if (c.num_classes != 2)
    fail(ErrorCode::kInvalidClass, "class screening supports exactly two classes");
  std::vector<Index> g1, g2;
  for (Index i = 0; i < d.n(); ++i) (c.label[i] == 1 ? g1 : g2).push_back(i);
  if (g1.size() < 2 || g2.size() < 2)
    fail(ErrorCode::kInvalidClass, "each class needs at least two samples");

  ScreenScores s{Vector::Zero(d.p()), nonconstant_columns(d.x()), ScoreKind::kClassScore};
  const double n1 = static_cast<double>(g1.size()), n2 = static_cast<double>(g2.size());
  for (Index j = 0; j < d.p(); ++j) {
    if (!s.eligible[static_cast<std::size_t>(j)]) continue;
    double m1 = 0.0, m2 = 0.0;
    for (Index i : g1) m1 += d.x()(i, j);
    for (Index i : g2) m2 += d.x()(i, j);
    m1 /= n1;
    m2 /= n2;
    double ss = 0.0;
    for (Index i : g1) ss += (d.x()(i, j) - m1) * (d.x()(i, j) - m1);
    for (Index i : g2) ss += (d.x()(i, j) - m2) * (d.x()(i, j) - m2);
    const double sp = std::sqrt(ss / (n1 + n2 - 2.0));
    if (sp <= 0.0) {
      s.eligible[static_cast<std::size_t>(j)] = false;
      continue;
    }
    s.score[j] = (m2 - m1) / (sp * std::sqrt(1.0 / n1 + 1.0 / n2));
  }
  return s;
}

ScreenScores survival_scores(const Dataset& d) {
  const auto& o = d.survival();
  validate_survival(o);
  ScreenScores s{Vector::Zero(d.p()), nonconstant_columns(d.x()), ScoreKind::kCoxScore};
  for (Index j = 0; j < d.p(); ++j) {
    if (!s.eligible[static_cast<std::size_t>(j)]) continue;
    const CoxScore c = cox_score_raw(d.x().col(j), o);
    if (c.v <= 0.0) {
      s.eligible[static_cast<std::size_t>(j)] = false;
      continue;
    }
    s.score[j] = c.z;
  }
  return s;
}

}  // namespace

ScreenScores pearson_scores(const Dataset& d) {
  const Vector& y = d.y();
  const Vector yc = y.array() - y.mean();
  const double ynorm = yc.norm();
  ScreenScores s{Vector::Zero(d.p()), nonconstant_columns(d.x()), ScoreKind::kPearson};
  if (ynorm == 0.0) return s;
  for (Index j = 0; j < d.p(); ++j) {
    if (!s.eligible[static_cast<std::size_t>(j)]) continue;
    const Vector xc = d.x().col(j).array() - d.x().col(j).mean();
    const double r = xc.dot(yc) / (xc.norm() * ynorm);
    s.score[j] = std::clamp(r, -1.0, 1.0);
  }
  return s;
}

ScreenScores association_scores(const Dataset& d) {
  switch (d.kind()) {
    case OutcomeKind::kContinuous: return pearson_scores(d);
    case OutcomeKind::kSurvival: return survival_scores(d);
    case OutcomeKind::kClass: return class_scores(d);
  }
  fail(ErrorCode::kInternal, "unhandled outcome kind");
}

FeatureSet select(const ScreenScores& scores, const ScreenConfig& cfg) {
  if (cfg.threshold.has_value() == cfg.top_count.has_value())
    fail(ErrorCode::kInvalidInput, "screen config needs exactly one of threshold or top-m");
  const Index p = scores.score.size();
  if (static_cast<Index>(scores.eligible.size()) != p)
    fail(ErrorCode::kInvalidInput, "screen eligibility mask has wrong length");

  std::vector<Index> chosen;
  if (cfg.threshold) {
    for (Index j = 0; j < p; ++j)
      if (scores.eligible[static_cast<std::size_t>(j)] && std::abs(scores.score[j]) >= *cfg.threshold)
        chosen.push_back(j);
  } else {
    std::vector<Index> order;
    for (Index j = 0; j < p; ++j)
      if (scores.eligible[static_cast<std::size_t>(j)]) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return std::abs(scores.score[a]) > std::abs(scores.score[b]);
    });
    const auto m = std::min<std::size_t>(order.size(), static_cast<std::size_t>(*cfg.top_count));
    chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  }
  if (chosen.empty()) fail(ErrorCode::kEmptyScreen, "no feature passes the screening rule");
  return FeatureSet::from(std::move(chosen));
}

}  // namespace precond
