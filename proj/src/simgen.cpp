#include "precond/simgen.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace precond {
namespace {

Dataset continuous(Matrix x, Vector y) { return Dataset(std::move(x), ContinuousOutcome{std::move(y)}); }

SplitDataset make_split(Dataset train, Dataset test) {
  SplitDataset s;
  for (Index i = 0; i < train.n(); ++i) s.train_rows.push_back(i);
  for (Index i = 0; i < test.n(); ++i) s.test_rows.push_back(train.n() + i);
  s.train = std::move(train);
  s.test = std::move(test);
  return s;
}

FeatureSet nonzero_set(const Vector& v, double tol) {
  FeatureSet s;
  for (Index j = 0; j < v.size(); ++j)
    if (std::abs(v[j]) > tol) s.indices.push_back(j);
  return s;
}

}  // namespace

Example1Data gen_example1(const Example1Params& prm, RandomStream& rng) {
  if (prm.n_signal > prm.p || prm.n_signal < 0 || prm.n_train < 2)
    fail(ErrorCode::kInvalidInput, "invalid Example 1 dimensions");
  Example1Data out;
  out.truth = FeatureSet::range(0, prm.n_signal);

  auto draw = [&](Index n, Vector& v, Vector& y) {
    v = rng.normal_vector(n);
    Matrix x = prm.sigma0 * rng.normal_matrix(n, prm.p);
    for (Index j = 0; j < prm.n_signal; ++j) x.col(j) += prm.alpha1 * v;
    y = (prm.beta0 + prm.beta1 * v.array()).matrix() + prm.sigma1 * rng.normal_vector(n);
    if (prm.outcome == OutcomeKind::kClass) {
      ClassOutcome c{IntVector(n), 2};
      for (Index i = 0; i < n; ++i) c.label[i] = y[i] < 0.0 ? 1 : 2;
      return Dataset(std::move(x), std::move(c));
    }
    if (prm.outcome == OutcomeKind::kSurvival) {
      SurvivalOutcome o{Vector(n), IntVector(n)};
      for (Index i = 0; i < n; ++i) {
        const double event = -std::log1p(-rng.uniform()) / std::exp(prm.survival_effect * y[i]);
        const double censor = prm.censoring_rate > 0.0
                                  ? -std::log1p(-rng.uniform()) / prm.censoring_rate
                                  : std::numeric_limits<double>::infinity();
        o.time[i] = std::max(std::min(event, censor), 1e-300);
        o.status[i] = event <= censor ? 1 : 0;
      }
      return Dataset(std::move(x), std::move(o));
    }
    return continuous(std::move(x), y);
  };
  Dataset train = draw(prm.n_train, out.v_train, out.y_train);
  Dataset test = prm.n_test >= 2 ? draw(prm.n_test, out.v_test, out.y_test) : Dataset();
  out.split = make_split(std::move(train), std::move(test));
  return out;
}

Example2Population example2_population() {
  Example2Population pop;
  pop.precision << 2, 1, 1, 1,
                   1, 2, 0, 1,
                   1, 0, 2, 1,
                   1, 1, 1, 2;
  pop.covariance = pop.precision.inverse();
  pop.beta = -pop.precision.block<1, 3>(0, 1).transpose() / pop.precision(0, 0);
  for (int j = 0; j < 3; ++j)
    pop.marginal_corr[j] = pop.covariance(0, j + 1) /
                           std::sqrt(pop.covariance(0, 0) * pop.covariance(j + 1, j + 1));
  return pop;
}

GeneratedData gen_example2(const Example2Params& prm, RandomStream& rng) {
  const Example2Population pop = example2_population();
  const Eigen::Matrix4d chol = pop.covariance.llt().matrixL();
  auto draw = [&](Index n) {
    Matrix x(n, 3 + prm.p_noise);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      Eigen::Vector4d z;
      for (int c = 0; c < 4; ++c) z[c] = rng.normal();
      const Eigen::Vector4d w = chol * z;
      y[i] = w[0];
      x.row(i).head<3>() = w.tail<3>().transpose();
    }
    x.rightCols(prm.p_noise) = rng.normal_matrix(n, prm.p_noise);
    return continuous(std::move(x), std::move(y));
  };
  GeneratedData g;
  g.train = draw(prm.n_train);
  if (prm.n_test >= 2) g.test = draw(prm.n_test);
  g.truth = FeatureSet::range(0, 3);
  return g;
}

GeneratedData gen_example3(const Example3Params& prm, RandomStream& rng) {
  if (prm.n_signal > prm.p) fail(ErrorCode::kInvalidInput, "invalid Example 3 dimensions");
  const Vector beta = rng.normal_vector(prm.n_signal);
  auto draw = [&](Index n) {
    const Vector f = rng.normal_vector(n);
    Matrix x = rng.normal_matrix(n, prm.p);
    for (Index j = 0; j < prm.n_signal; ++j) x.col(j) = (f + x.col(j)) / std::sqrt(2.0);
    Vector y = x.leftCols(prm.n_signal) * beta + prm.sigma * rng.normal_vector(n);
    return continuous(std::move(x), std::move(y));
  };
  GeneratedData g;
  g.train = draw(prm.n_train);
  if (prm.n_test >= 2) g.test = draw(prm.n_test);
  g.truth = FeatureSet::range(0, prm.n_signal);
  return g;
}

Matrix example3_covariance(const Example3Params& prm) {
  Matrix s = Matrix::Identity(prm.p, prm.p);
  s.topLeftCorner(prm.n_signal, prm.n_signal).array() += 0.5;
  s.topLeftCorner(prm.n_signal, prm.n_signal).diagonal().array() -= 0.5;
  return s;
}

void validate_spec(const FactorModelSpec& s) {
  if (s.p < 1 || s.m < 1 || s.k < 1 || s.k > s.m)
    fail(ErrorCode::kSpec, "factor spec needs p >= 1 and 1 <= k <= m");
  if (s.u.rows() != s.p || s.u.cols() != s.m)
    fail(ErrorCode::kSpec, "u must be p x m");
  if (s.lambdas.size() != s.m || s.beta.size() != s.k)
    fail(ErrorCode::kSpec, "lambdas must have m entries and beta k entries");
  for (Index i = 0; i < s.m; ++i) {
    if (!(s.lambdas[i] > 0.0)) fail(ErrorCode::kSpec, "lambdas must be positive");
    if (i > 0 && s.lambdas[i] > s.lambdas[i - 1])
      fail(ErrorCode::kSpec, "lambdas must be non-increasing");
  }
  if (!(s.sigma0 >= 0.0) || !(s.sigma1 >= 0.0)) fail(ErrorCode::kSpec, "noise levels must be >= 0");
  const Matrix gram = s.u.transpose() * s.u;
  if ((gram - Matrix::Identity(s.m, s.m)).cwiseAbs().maxCoeff() > 1e-10)
    fail(ErrorCode::kSpec, "u columns are not orthonormal");
}

PopulationOracle oracle(const FactorModelSpec& s) {
  validate_spec(s);
  PopulationOracle o;
  const Vector sqrt_l = s.lambdas.head(s.k).array().sqrt();
  o.d_k = s.lambdas.head(s.k).array() + s.sigma0 * s.sigma0;
  const auto uk = s.u.leftCols(s.k);
  o.w = uk * sqrt_l.asDiagonal();
  o.sigma_py = uk * (s.beta.array() * sqrt_l.array()).matrix();
  o.theta = uk * (s.beta.array() * sqrt_l.array() / o.d_k.array()).matrix();
  o.sigma_eps2 = s.sigma1 * s.sigma1 +
                 s.sigma0 * s.sigma0 * (s.beta.array().square() / o.d_k.array()).sum();

  // Entries that cancel to rounding level are exact zeros of the population quantity.
  const double tol_t = 1e-12 * std::max(o.theta.cwiseAbs().maxCoeff(), 1e-300);
  const double tol_s = 1e-12 * std::max(o.sigma_py.cwiseAbs().maxCoeff(), 1e-300);
  for (Index j = 0; j < s.p; ++j) {
    if (std::abs(o.theta[j]) <= tol_t) o.theta[j] = 0.0;
    if (std::abs(o.sigma_py[j]) <= tol_s) o.sigma_py[j] = 0.0;
  }
  o.a = nonzero_set(o.theta, 0.0);
  o.b = nonzero_set(o.sigma_py, 0.0);
  o.d = nonzero_set(o.w.rowwise().norm(), 0.0);
  return o;
}

FactorDraw gen_factor_model(const FactorModelSpec& s, Index n, RandomStream& rng) {
  validate_spec(s);
  FactorDraw out;
  out.v = rng.normal_matrix(n, s.m);
  const Vector sqrt_l = s.lambdas.array().sqrt();
  Matrix x = out.v * sqrt_l.asDiagonal() * s.u.transpose();
  x += s.sigma0 * rng.normal_matrix(n, s.p);
  Vector y = out.v.leftCols(s.k) * s.beta + s.sigma1 * rng.normal_vector(n);
  out.data = continuous(std::move(x), std::move(y));
  return out;
}

Matrix population_covariance(const FactorModelSpec& s) {
  validate_spec(s);
  Matrix sigma = s.u * s.lambdas.asDiagonal() * s.u.transpose();
  sigma.diagonal().array() += s.sigma0 * s.sigma0;
  return sigma;
}

IrrepresentableResult irrepresentable_check(const Matrix& sigma, const FeatureSet& a,
                                            const Vector& sign_a) {
  const Index p = sigma.rows();
  if (sigma.cols() != p) fail(ErrorCode::kInvalidInput, "covariance must be square");
  if (a.empty()) fail(ErrorCode::kInvalidInput, "signal set is empty");
  if (sign_a.size() != a.size()) fail(ErrorCode::kInvalidInput, "sign vector length must equal |A|");
  const Index na = a.size();
  Matrix saa(na, na);
  for (Index r = 0; r < na; ++r)
    for (Index c = 0; c < na; ++c) saa(r, c) = sigma(a.indices[static_cast<std::size_t>(r)], a.indices[static_cast<std::size_t>(c)]);
  Eigen::FullPivLU<Matrix> lu(saa);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) fail(ErrorCode::kSingular, "Sigma_AA is singular");
  const Vector h = lu.solve(sign_a);

  IrrepresentableResult res;
  for (Index j = 0; j < p; ++j) {
    if (a.contains(j)) continue;
    double v = 0.0;
    for (Index c = 0; c < na; ++c) v += sigma(j, a.indices[static_cast<std::size_t>(c)]) * h[c];
    res.value = std::max(res.value, std::abs(v));
  }
  res.pass = res.value < 1.0;
  return res;
}

IrrepresentableResult irrepresentable_check(const FactorModelSpec& s) {
  const PopulationOracle o = oracle(s);
  if (o.a.empty()) fail(ErrorCode::kSingular, "signal set is empty");
  const Index na = o.a.size();
  Matrix ua(na, s.m);
  Vector sign_a(na);
  for (Index r = 0; r < na; ++r) {
    const Index j = o.a.indices[static_cast<std::size_t>(r)];
    ua.row(r) = s.u.row(j);
    sign_a[r] = o.theta[j] > 0.0 ? 1.0 : -1.0;
  }
  Matrix saa = ua * s.lambdas.asDiagonal() * ua.transpose();
  saa.diagonal().array() += s.sigma0 * s.sigma0;
  Eigen::FullPivLU<Matrix> lu(saa);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) fail(ErrorCode::kSingular, "Sigma_AA is singular");
  // Off-A rows of Sigma only see the factor part.
  const Vector g = s.lambdas.asDiagonal() * (ua.transpose() * lu.solve(sign_a));
  IrrepresentableResult res;
  for (Index j = 0; j < s.p; ++j) {
    if (o.a.contains(j)) continue;
    res.value = std::max(res.value, std::abs(s.u.row(j).dot(g)));
  }
  res.pass = res.value < 1.0;
  return res;
}

double aplus_condition(const FactorModelSpec& s, const FeatureSet& aplus) {
  validate_spec(s);
  const Index na = aplus.size();
  if (na == 0) fail(ErrorCode::kInvalidInput, "A+ is empty");
  Matrix ua(na, s.m);
  for (Index r = 0; r < na; ++r) ua.row(r) = s.u.row(aplus.indices[static_cast<std::size_t>(r)]);
  Matrix saa = ua * s.lambdas.asDiagonal() * ua.transpose();
  saa.diagonal().array() += s.sigma0 * s.sigma0;
  Eigen::FullPivLU<Matrix> lu(saa);
  if (!lu.isInvertible()) fail(ErrorCode::kSingular, "Sigma_{A+A+} is singular");
  const Matrix h = lu.solve(ua * s.lambdas.asDiagonal());  // na x m
  double worst = 0.0;
  for (Index j = 0; j < s.p; ++j) {
    if (aplus.contains(j)) continue;
    const Vector col = h * s.u.row(j).transpose();
    worst = std::max(worst, col.cwiseAbs().sum());
  }
  return worst;
}

FactorModelSpec single_factor_spec(Index p, Index n_signal, double lambda, double beta,
                                   double sigma0, double sigma1) {
  if (n_signal < 1 || n_signal > p) fail(ErrorCode::kSpec, "signal count must lie in 1..p");
  FactorModelSpec s;
  s.p = p;
  s.m = 1;
  s.k = 1;
  s.lambdas = Vector::Constant(1, lambda);
  s.u = Matrix::Zero(p, 1);
  s.u.col(0).head(n_signal).setConstant(1.0 / std::sqrt(static_cast<double>(n_signal)));
  s.sigma0 = sigma0;
  s.sigma1 = sigma1;
  s.beta = Vector::Constant(1, beta);
  validate_spec(s);
  return s;
}

Prop5Regime prop5_spec(const Prop5Params& prm) {
  if (!(prm.alpha > 0.0 && prm.alpha < 1.0)) fail(ErrorCode::kInvalidInput, "alpha must lie in (0, 1)");
  if (prm.n < 3) fail(ErrorCode::kInvalidInput, "n must be at least 3");
  if (prm.n_plus < 1 || prm.n_minus < 2)
    fail(ErrorCode::kSpec, "need |A+| >= 1 and |A-| >= 2 for a zero-sum A- pattern");
  const double nd = static_cast<double>(prm.n);
  const double p_target = std::exp(prm.c * std::pow(nd, prm.alpha));
  const Index p = std::max<Index>(
      prm.n_plus + prm.n_minus,
      static_cast<Index>(std::min(p_target, static_cast<double>(prm.p_cap))));
  if (nd * static_cast<double>(p) * 8.0 > prm.memory_budget_bytes)
    fail(ErrorCode::kSize, "design of " + std::to_string(prm.n) + " x " + std::to_string(p) +
                               " exceeds the memory budget");

  const Index np = prm.n_plus, nm = prm.n_minus;
  Vector a = Vector::Zero(p);
  a.head(np).setOnes();
  a.segment(np, nm).setConstant(prm.minus_loading);

  // b0 is orthogonal to a; e is a zero-sum pattern on A- that survives in theta.
  Vector b0 = Vector::Zero(p);
  b0.segment(np, nm) = -a.segment(np, nm);
  b0.head(np).setConstant(a.segment(np, nm).squaredNorm() / static_cast<double>(np));
  Vector e = Vector::Zero(p);
  Index start = 0;
  if (nm % 2 == 1) {
    e.segment(np, 3) << 2.0, -1.0, -1.0;
    start = 3;
  }
  for (Index i = start; i < nm; i += 2) {
    e[np + i] = 1.0;
    e[np + i + 1] = -1.0;
  }

  const double s02 = prm.sigma0 * prm.sigma0;
  const double l1 = prm.lambda1 + s02, l2 = prm.lambda2 + s02;
  const double t_n = std::pow(nd, -(1.0 - prm.alpha) / 2.0) / std::log(nd);
  const double na = a.norm();
  const double eta = t_n * na * l1 / (prm.beta1 * std::sqrt(prm.lambda1));
  const Vector b = b0 + eta * e;
  const double nb = b.norm();
  const double beta2 = prm.beta1 * std::sqrt(prm.lambda1) * nb * l2 / (na * l1 * std::sqrt(prm.lambda2));

  Prop5Regime r;
  r.t_n = t_n;
  r.aplus = FeatureSet::range(0, np);
  r.aminus = FeatureSet::range(np, np + nm);
  FactorModelSpec& s = r.spec;
  s.p = p;
  s.m = 2;
  s.k = 2;
  s.lambdas.resize(2);
  s.lambdas << prm.lambda1, prm.lambda2;
  s.u.resize(p, 2);
  s.u.col(0) = a / na;
  s.u.col(1) = b / nb;
  s.sigma0 = prm.sigma0;
  s.sigma1 = prm.sigma1;
  s.beta.resize(2);
  s.beta << prm.beta1, beta2;
  validate_spec(s);
  return r;
}

Prop5Draw gen_prop5_regime(const Prop5Params& prm, RandomStream& rng) {
  Prop5Draw d{prop5_spec(prm), Dataset()};
  d.data = gen_factor_model(d.regime.spec, prm.n, rng).data;
  return d;
}

}  // namespace precond
