#include "precond/classify.hpp"

#include <algorithm>
#include <cmath>

namespace precond {

double soft_threshold(double value, double threshold) {
  return std::copysign(std::max(std::abs(value) - threshold, 0.0), value);
}

namespace {

void shrink(NscModel& m, double delta) {
  m.delta = delta;
  m.shrunken_centroids.resize(m.num_classes, m.p);
  for (int k = 0; k < m.num_classes; ++k)
    for (Index j = 0; j < m.p; ++j) {
      const double scale = m.mk[k] * (m.pooled_sd[j] + m.s0);
      m.shrunken_centroids(k, j) =
          m.overall_centroid[j] + scale * soft_threshold(m.deviations(k, j), delta);
    }
}

double training_cross_entropy(const NscModel& m, const Dataset& d) {
  const Matrix probs = nsc_predict_proba(m, d);
  const auto& lab = d.classes().label;
  double ce = 0.0;
  for (Index i = 0; i < d.n(); ++i) ce -= std::log(std::max(probs(i, lab[i] - 1), 1e-300));
  return ce;
}

}  // namespace

NscModel nsc_fit(const Dataset& d, double delta) {
  if (!(delta >= 0.0)) fail(ErrorCode::kInvalidInput, "shrinkage must be non-negative");
  const auto& c = d.classes();
  const int g = c.num_classes;
  const Index n = d.n();
  const Index p = d.p();
  if (g < 2) fail(ErrorCode::kInvalidClass, "classification needs at least two classes");

  NscModel m;
  m.num_classes = g;
  m.p = p;
  std::vector<Index> counts(static_cast<std::size_t>(g), 0);
  m.centroids = Matrix::Zero(g, p);
  for (Index i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(c.label[i] - 1)];
    m.centroids.row(c.label[i] - 1) += d.x().row(i);
  }
  for (int k = 0; k < g; ++k) {
    if (counts[static_cast<std::size_t>(k)] < 2)
      fail(ErrorCode::kInvalidClass, "class " + std::to_string(k + 1) + " has fewer than two samples");
    m.centroids.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
  }
  if (n - g < 1) fail(ErrorCode::kInvalidClass, "too few samples for the number of classes");
  m.overall_centroid = d.x().colwise().mean().transpose();

  Vector ss = Vector::Zero(p);
  for (Index i = 0; i < n; ++i)
    ss += (d.x().row(i) - m.centroids.row(c.label[i] - 1)).transpose().array().square().matrix();
  m.pooled_sd = (ss / static_cast<double>(n - g)).array().sqrt();

  std::vector<double> sorted(m.pooled_sd.data(), m.pooled_sd.data() + p);
  std::sort(sorted.begin(), sorted.end());
  const auto half = static_cast<std::size_t>(p / 2);
  m.s0 = p % 2 == 1 ? sorted[half] : 0.5 * (sorted[half - 1] + sorted[half]);
  if (m.s0 <= 0.0) m.s0 = std::max(sorted.back(), 1.0);

  m.priors.resize(g);
  m.mk.resize(g);
  for (int k = 0; k < g; ++k) {
    const double nk = static_cast<double>(counts[static_cast<std::size_t>(k)]);
    m.priors[k] = nk / static_cast<double>(n);
    m.mk[k] = std::sqrt(1.0 / nk - 1.0 / static_cast<double>(n));
  }
  m.deviations.resize(g, p);
  for (int k = 0; k < g; ++k)
    for (Index j = 0; j < p; ++j)
      m.deviations(k, j) = (m.centroids(k, j) - m.overall_centroid[j]) /
                           (m.mk[k] * (m.pooled_sd[j] + m.s0));
  shrink(m, delta);
  return m;
}

NscModel nsc_fit_auto(const Dataset& d) {
  NscModel m = nsc_fit(d, 0.0);
  const double top = m.deviations.cwiseAbs().maxCoeff();
  constexpr int kGrid = 30;
  double best_delta = 0.0;
  double best_ce = training_cross_entropy(m, d);
  for (int i = 1; i < kGrid; ++i) {
    const double delta = top * static_cast<double>(i) / static_cast<double>(kGrid - 1);
    shrink(m, delta);
    const double ce = training_cross_entropy(m, d);
    if (ce < best_ce) {
      best_ce = ce;
      best_delta = delta;
    }
  }
  shrink(m, best_delta);
  return m;
}

Matrix nsc_predict_proba(const NscModel& m, const Dataset& d) {
  if (d.p() != m.p) fail(ErrorCode::kSchema, "dataset columns do not match the classifier");
  const Index n = d.n();
  const Vector w = (m.pooled_sd.array() + m.s0).square().inverse();
  Matrix probs(n, m.num_classes);
  for (Index i = 0; i < n; ++i) {
    Vector score(m.num_classes);
    for (int k = 0; k < m.num_classes; ++k) {
      const double dist =
          ((d.x().row(i) - m.shrunken_centroids.row(k)).transpose().array().square() * w.array()).sum();
      score[k] = dist - 2.0 * std::log(m.priors[k]);
    }
    const Vector logits = -0.5 * score;
    const double top = logits.maxCoeff();
    const Vector e = (logits.array() - top).exp();
    probs.row(i) = (e / e.sum()).transpose();
  }
  return probs;
}

Vector logit_precondition(const Matrix& probs, double clip) {
  if (probs.cols() != 2) fail(ErrorCode::kInvalidClass, "logit response needs two-class probabilities");
  if (!(clip > 0.0 && clip < 0.5)) fail(ErrorCode::kInvalidInput, "clip must lie in (0, 0.5)");
  Vector out(probs.rows());
  for (Index i = 0; i < probs.rows(); ++i) {
    const double pr = std::clamp(probs(i, 1), clip, 1.0 - clip);
    out[i] = std::log(pr / (1.0 - pr));
  }
  return out;
}

}  // namespace precond
