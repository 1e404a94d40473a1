#include <cmath>

#include <Eigen/QR>

#include "precond/sparsereg.hpp"

namespace precond {

StepwisePath forward_stepwise(const Matrix& x, const Vector& y, Index max_steps,
                              const std::optional<FeatureSet>& restriction) {
  if (x.rows() != y.size()) fail(ErrorCode::kInvalidInput, "x rows and y length differ");
  if (max_steps < 0) fail(ErrorCode::kInvalidInput, "max_steps must be non-negative");
  const Index n = x.rows();

  std::vector<Index> cand;
  if (restriction) {
    cand = restriction->indices;
    if (!cand.empty() && cand.back() >= x.cols())
      fail(ErrorCode::kInvalidInput, "restriction index exceeds column count");
  } else {
    for (Index j = 0; j < x.cols(); ++j) cand.push_back(j);
  }
  const auto m = static_cast<Index>(cand.size());

  // Candidate columns orthogonalized against the active span, kept up to date.
  Matrix z(n, m);
  Vector orig_ss(m);
  for (Index i = 0; i < m; ++i) {
    z.col(i) = x.col(cand[static_cast<std::size_t>(i)]);
    orig_ss[i] = z.col(i).squaredNorm();
  }
  std::vector<bool> used(static_cast<std::size_t>(m), false);

  StepwisePath out;
  Vector r = y;
  out.initial_rss = r.squaredNorm();
  const Index limit = std::min({max_steps, n, m});
  out.stop_reason = limit < max_steps ? "rank-limit" : "max-steps";

  for (Index step = 0; step < limit; ++step) {
    Index best = -1;
    double best_gain = -1.0;
    for (Index i = 0; i < m; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double ss = z.col(i).squaredNorm();
      if (ss <= 1e-10 * orig_ss[i]) continue;
      const double proj = z.col(i).dot(r);
      const double gain = proj * proj / ss;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best < 0) {
      out.stop_reason = "rank-deficient";
      break;
    }
    used[static_cast<std::size_t>(best)] = true;
    const Vector q = z.col(best).normalized();
    r -= q * q.dot(r);
    z -= q * (q.transpose() * z);
    // second pass keeps the basis orthogonal to working precision
    z -= q * (q.transpose() * z);

    out.entry_order.push_back(cand[static_cast<std::size_t>(best)]);
    out.rss.push_back(r.squaredNorm());
    out.coefs.push_back(ols_refit(x, y, FeatureSet::from(out.entry_order)));
  }
  return out;
}

Vector ols_refit(const Matrix& x, const Vector& y, const FeatureSet& support) {
  if (x.rows() != y.size()) fail(ErrorCode::kInvalidInput, "x rows and y length differ");
  Vector out = Vector::Zero(x.cols());
  if (support.empty()) return out;
  if (support.indices.back() >= x.cols())
    fail(ErrorCode::kInvalidInput, "support index exceeds column count");
  if (support.size() > x.rows())
    fail(ErrorCode::kRank, "support of size " + std::to_string(support.size()) +
                               " exceeds the number of rows " + std::to_string(x.rows()));
  Matrix xs(x.rows(), support.size());
  for (Index c = 0; c < support.size(); ++c) xs.col(c) = x.col(support.indices[static_cast<std::size_t>(c)]);
  Eigen::ColPivHouseholderQR<Matrix> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < support.size()) {
    std::string names;
    for (Index c = qr.rank(); c < support.size(); ++c) {
      if (!names.empty()) names += ", ";
      names += std::to_string(support.indices[static_cast<std::size_t>(qr.colsPermutation().indices()[c])]);
    }
    fail(ErrorCode::kRank, "support is rank deficient; collinear feature indices: " + names);
  }
  const Vector b = qr.solve(y);
  for (Index c = 0; c < support.size(); ++c) out[support.indices[static_cast<std::size_t>(c)]] = b[c];
  return out;
}

}  // namespace precond
