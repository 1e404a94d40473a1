#include "precond/spc.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "precond/survival.hpp"

namespace precond {
namespace {

Matrix gather_columns(const Matrix& x, const FeatureSet& f) {
  Matrix out(x.rows(), f.size());
  for (Index c = 0; c < f.size(); ++c) out.col(c) = x.col(f.indices[static_cast<std::size_t>(c)]);
  return out;
}

void fix_sign(Eigen::Ref<Vector> u) {
  Index best = 0;
  for (Index i = 1; i < u.size(); ++i)
    if (std::abs(u[i]) > std::abs(u[best])) best = i;
  if (u[best] < 0.0) u = -u;
}

}  // namespace

Vector SpcModel::padded_direction(Index component) const {
  if (component < 0 || component >= k) fail(ErrorCode::kInvalidInput, "component out of range");
  Vector out = Vector::Zero(p);
  for (Index c = 0; c < features.size(); ++c)
    out[features.indices[static_cast<std::size_t>(c)]] = eigvecs(c, component);
  return out;
}

SpcModel fit_spc(const Dataset& d, const FeatureSet& features, Index k) {
  if (!d.standardized()) fail(ErrorCode::kInvalidInput, "fit_spc requires a standardized dataset");
  if (features.empty()) fail(ErrorCode::kEmptyScreen, "fit_spc needs at least one feature");
  if (features.indices.back() >= d.p())
    fail(ErrorCode::kInvalidInput, "feature index exceeds column count");
  const Index n = d.n();
  const Index b = features.size();
  if (k < 1 || k > std::min(n - 1, b))
    fail(ErrorCode::kRank, "k = " + std::to_string(k) + " exceeds min(n - 1, |B|) = " +
                               std::to_string(std::min(n - 1, b)));

  const Matrix xb = gather_columns(d.x(), features);
  const double nd = static_cast<double>(n);

  SpcModel m;
  m.features = features;
  m.k = k;
  m.p = d.p();
  m.feature_ids = d.feature_ids();
  m.standardization = d.standardization();
  m.eigvecs.resize(b, k);
  m.eigvals.resize(k);

  const bool gram_side = b > n;
  const Matrix s = gram_side ? Matrix(xb * xb.transpose() / nd) : Matrix(xb.transpose() * xb / nd);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) fail(ErrorCode::kInternal, "eigendecomposition failed");
  const Index dim = s.rows();
  const double top = std::max(eig.eigenvalues()[dim - 1], 0.0);
  for (Index c = 0; c < k; ++c) {
    const double l = eig.eigenvalues()[dim - 1 - c];
    if (!(l > 1e-10 * std::max(top, 1e-300)))
      fail(ErrorCode::kRank, "screened block has fewer than " + std::to_string(k) +
                                 " positive eigenvalues");
    m.eigvals[c] = l;
    if (gram_side) {
      const Vector a = eig.eigenvectors().col(dim - 1 - c);
      m.eigvecs.col(c) = xb.transpose() * a / std::sqrt(nd * l);
      m.eigvecs.col(c).normalize();
    } else {
      m.eigvecs.col(c) = eig.eigenvectors().col(dim - 1 - c);
    }
    fix_sign(m.eigvecs.col(c));
  }
  return m;
}

Matrix latent_scores(const SpcModel& m, const Dataset& d) {
  if (d.p() != m.p || d.feature_ids() != m.feature_ids)
    fail(ErrorCode::kSchema, "dataset columns do not match the fitted model");
  const Dataset* src = &d;
  Dataset applied;
  if (m.standardization) {
    if (!d.standardized()) {
      applied = apply_standardization(d, *m.standardization);
      src = &applied;
    } else if (!(*d.standardization() == *m.standardization)) {
      fail(ErrorCode::kSchema, "dataset carries a different standardization than the model");
    }
  }
  const Matrix xb = gather_columns(src->x(), m.features);
  Matrix v = xb * m.eigvecs;
  for (Index c = 0; c < m.k; ++c) v.col(c) /= std::sqrt(m.eigvals[c]);
  return v;
}

PreconditionedResponse precondition(const SpcModel& m, const Dataset& d, const Vector& y) {
  if (y.size() != d.n()) fail(ErrorCode::kInvalidInput, "response length does not match rows");
  PreconditionedResponse r;
  r.factors = latent_scores(m, d);
  r.regression_coefs = r.factors.colPivHouseholderQr().solve(y);
  r.y_tilde = r.factors * r.regression_coefs;
  return r;
}

PreconditionedResponse precondition(const SpcModel& m, const Dataset& d) {
  return precondition(m, d, d.y());
}

PreconditionedResponse precondition_survival(const SpcModel& m, const Dataset& d) {
  const auto& o = d.survival();
  PreconditionedResponse r;
  r.factors = latent_scores(m, d);
  r.regression_coefs.resize(m.k);
  for (Index c = 0; c < m.k; ++c) r.regression_coefs[c] = cox_fit_single(r.factors.col(c), o).beta;
  r.y_tilde = r.factors * r.regression_coefs;
  return r;
}

Vector predict(const SpcModel& m, const Vector& coefs, const Dataset& d_new) {
  if (coefs.size() != m.k) fail(ErrorCode::kInvalidInput, "coefficient count must equal k");
  return latent_scores(m, d_new) * coefs;
}

}  // namespace precond
