#include <cmath>

#include "precond/sparsereg.hpp"

namespace precond {

Vector coord_descent(const LassoProblem& p, double mu, double tol, Index max_sweeps,
                     const Vector* warm_start) {
  if (!(mu >= 0.0)) fail(ErrorCode::kInvalidInput, "penalty must be non-negative");
  const Matrix& x = p.x;
  const Vector& y = p.y;
  if (x.rows() != y.size()) fail(ErrorCode::kInvalidInput, "x rows and y length differ");
  const double nd = static_cast<double>(x.rows());
  const double mu_n = p.scale == PenaltyScale::kPerN ? mu : mu / nd;

  std::vector<Index> cand;
  if (p.restriction) {
    cand = p.restriction->indices;
    if (!cand.empty() && cand.back() >= x.cols())
      fail(ErrorCode::kInvalidInput, "restriction index exceeds column count");
  } else {
    for (Index j = 0; j < x.cols(); ++j) cand.push_back(j);
  }

  Vector beta = Vector::Zero(x.cols());
  if (warm_start) {
    if (warm_start->size() != x.cols()) fail(ErrorCode::kInvalidInput, "warm start has wrong length");
    for (Index j : cand) beta[j] = (*warm_start)[j];
  }
  Vector r = y - x * beta;
  std::vector<double> col_ss(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) col_ss[i] = x.col(cand[i]).squaredNorm() / nd;

  double change = 0.0;
  for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
    change = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const Index j = cand[i];
      if (col_ss[i] <= 0.0) continue;
      const double z = x.col(j).dot(r) / nd + col_ss[i] * beta[j];
      const double shrunk = std::copysign(std::max(std::abs(z) - mu_n / 2.0, 0.0), z);
      const double next = shrunk / col_ss[i];
      const double delta = next - beta[j];
      if (delta != 0.0) {
        r -= delta * x.col(j);
        beta[j] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change < tol) return beta;
  }
  fail(ErrorCode::kConvergence, "coordinate descent did not converge in " +
                                    std::to_string(max_sweeps) + " sweeps (last max change " +
                                    std::to_string(change) + ")");
}

}  // namespace precond
