#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "precond/sparsereg.hpp"

namespace precond {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Index> candidate_columns(const LassoProblem& p) {
  if (p.x.rows() != p.y.size()) fail(ErrorCode::kInvalidInput, "x rows and y length differ");
  std::vector<Index> cand;
  if (p.restriction) {
    cand = p.restriction->indices;
    if (!cand.empty() && cand.back() >= p.x.cols())
      fail(ErrorCode::kInvalidInput, "restriction index exceeds column count");
  } else {
    cand.resize(static_cast<std::size_t>(p.x.cols()));
    for (Index j = 0; j < p.x.cols(); ++j) cand[static_cast<std::size_t>(j)] = j;
  }
  return cand;
}

// Factor turning <r, X_j> into the gradient magnitude in the problem's scale.
double gradient_factor(const LassoProblem& p) {
  return p.scale == PenaltyScale::kPerN ? 2.0 / static_cast<double>(p.x.rows()) : 2.0;
}

KktCertificate kkt_impl(const Matrix& x, const Vector& y, const std::vector<Index>& cand,
                        const Vector& theta, double mu, double tol, double factor) {
  const Vector r = y - x * theta;
  std::vector<bool> allowed(static_cast<std::size_t>(x.cols()), false);
  for (Index j : cand) allowed[static_cast<std::size_t>(j)] = true;

  KktCertificate cert;
  for (Index j = 0; j < x.cols(); ++j) {
    double v = 0.0;
    if (!allowed[static_cast<std::size_t>(j)]) {
      v = std::abs(theta[j]) > 0.0 ? kInf : 0.0;
    } else {
      const double g = -factor * x.col(j).dot(r);
      if (theta[j] != 0.0) {
        v = std::abs(g + (theta[j] > 0.0 ? mu : -mu));
      } else {
        v = std::max(0.0, std::abs(g) - mu);
      }
    }
    if (v > cert.max_violation) {
      cert.max_violation = v;
      cert.worst_index = j;
    }
  }
  cert.ok = cert.max_violation <= tol;
  return cert;
}

struct ActiveSolve {
  Eigen::LDLT<Matrix> ldlt;
  Matrix xa;
  Matrix gram;
  bool singular = false;
};

ActiveSolve factor_active(const Matrix& x, const std::vector<Index>& active) {
  ActiveSolve s;
  s.xa.resize(x.rows(), static_cast<Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) s.xa.col(static_cast<Index>(i)) = x.col(active[i]);
  s.gram = s.xa.transpose() * s.xa;
  s.ldlt.compute(s.gram);
  s.singular = s.ldlt.info() != Eigen::Success || !(s.ldlt.rcond() > 1e-13);
  return s;
}

Vector refined_solve(const ActiveSolve& s, const Vector& rhs) {
  Vector d = s.ldlt.solve(rhs);
  d += s.ldlt.solve(rhs - s.gram * d);
  return d;
}

}  // namespace

KktCertificate kkt_check(const LassoProblem& p, const Vector& theta, double mu, double tol) {
  if (theta.size() != p.x.cols()) fail(ErrorCode::kInvalidInput, "theta length must equal p");
  return kkt_impl(p.x, p.y, candidate_columns(p), theta, mu, tol, gradient_factor(p));
}

double mu_max(const LassoProblem& p) {
  const auto cand = candidate_columns(p);
  double best = 0.0;
  for (Index j : cand) best = std::max(best, std::abs(p.x.col(j).dot(p.y)));
  return gradient_factor(p) * best;
}

Vector LassoPath::coefficients_at(double m) const {
  if (mu.empty()) fail(ErrorCode::kInvalidInput, "empty path");
  if (m >= mu.front()) return coefs.front();
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    if (m >= mu[i + 1]) {
      const double width = mu[i] - mu[i + 1];
      if (width <= 0.0) return coefs[i + 1];
      const double t = (mu[i] - m) / width;
      return (1.0 - t) * coefs[i] + t * coefs[i + 1];
    }
  }
  return coefs.back();
}

bool LassoPath::all_kkt_ok() const {
  return std::all_of(kkt.begin(), kkt.end(), [](const KktCertificate& c) { return c.ok; });
}

LassoPath lars_path(const LassoProblem& prob, const LarsOptions& opt) {
  const Matrix& x = prob.x;
  const Vector& y = prob.y;
  const auto cand = candidate_columns(prob);
  const Index n = x.rows();
  const Index p = x.cols();
  const double nd = static_cast<double>(n);
  // problem-scale mu = mu_scale * (2 C / n)
  const double mu_scale = prob.scale == PenaltyScale::kPerN ? 1.0 : nd;
  const double c_min = std::max(0.0, opt.min_mu / mu_scale * nd / 2.0);
  const Index max_steps =
      opt.max_steps >= 0 ? opt.max_steps
                         : 50 * (std::min<Index>(n, static_cast<Index>(cand.size())) + 1);

  LassoPath path;
  Vector beta = Vector::Zero(p);
  Vector c = Vector::Zero(p);
  std::vector<Index> active;
  std::vector<double> sign;
  std::vector<bool> is_active(static_cast<std::size_t>(p), false);
  std::vector<bool> entered(static_cast<std::size_t>(p), false);

  auto recompute_correlations = [&](const Vector& r) {
    for (Index j : cand) c[j] = x.col(j).dot(r);
  };
  auto record = [&](double cur) {
    const double mu_n = 2.0 * cur / nd;
    path.mu.push_back(mu_scale * mu_n);
    path.coefs.push_back(beta);
    path.kkt.push_back(kkt_impl(x, y, cand, beta, mu_n, opt.kkt_tol, 2.0 / nd));
  };
  auto join = [&](Index j) {
    active.push_back(j);
    sign.push_back(c[j] >= 0.0 ? 1.0 : -1.0);
    is_active[static_cast<std::size_t>(j)] = true;
    if (!entered[static_cast<std::size_t>(j)]) {
      entered[static_cast<std::size_t>(j)] = true;
      path.entry_order.push_back(j);
    }
  };
  auto argmax_inactive = [&](Index skip) {
    Index best = -1;
    for (Index j : cand) {
      if (is_active[static_cast<std::size_t>(j)] || j == skip) continue;
      if (best < 0 || std::abs(c[j]) > std::abs(c[best])) best = j;
    }
    return best;
  };

  recompute_correlations(y);
  double cmax = 0.0;
  for (Index j : cand) cmax = std::max(cmax, std::abs(c[j]));
  double big_c = cmax;
  record(big_c);
  if (cand.empty() || big_c <= 1e-14 * std::max(1.0, y.norm())) {
    path.termination = "zero-correlation";
    return path;
  }
  if (big_c <= c_min) {
    path.termination = "min-mu";
    return path;
  }
  join(argmax_inactive(-1));

  Index just_dropped = -1;
  for (Index step = 0;; ++step) {
    if (opt.max_active >= 0 && static_cast<Index>(active.size()) >= opt.max_active) {
      path.termination = "max-active";
      break;
    }
    if (opt.max_entries >= 0 && static_cast<Index>(path.entry_order.size()) >= opt.max_entries) {
      path.termination = "max-entries";
      break;
    }
    if (step >= max_steps) {
      path.termination = "max-steps";
      break;
    }

    ActiveSolve as = factor_active(x, active);
    if (as.singular) {
      if (big_c <= 1e-9 * cmax) {
        path.termination = "saturated";
        break;
      }
      fail(ErrorCode::kDegenerateStep,
           "active set of size " + std::to_string(active.size()) +
               " is rank deficient at knot " + std::to_string(path.mu.size() - 1) +
               " (mu = " + std::to_string(path.mu.back()) + ")");
    }
    const Vector s = Eigen::Map<const Vector>(sign.data(), static_cast<Index>(sign.size()));
    const Vector d = refined_solve(as, s);
    const Vector w = as.xa * d;

    // Join events.
    double gamma_join = kInf;
    Index join_j = -1;
    for (Index j : cand) {
      if (is_active[static_cast<std::size_t>(j)] || j == just_dropped) continue;
      double g = kInf;
      if (std::abs(c[j]) >= big_c * (1.0 - 1e-12)) {
        g = 0.0;
      } else {
        const double a = x.col(j).dot(w);
        if (1.0 - a > 1e-15) {
          const double g1 = (big_c - c[j]) / (1.0 - a);
          if (g1 > 0.0) g = std::min(g, g1);
        }
        if (1.0 + a > 1e-15) {
          const double g2 = (big_c + c[j]) / (1.0 + a);
          if (g2 > 0.0) g = std::min(g, g2);
        }
      }
      if (g < gamma_join) {
        gamma_join = g;
        join_j = j;
      }
    }
    if (gamma_join >= big_c * (1.0 - 1e-9)) {
      gamma_join = kInf;
      join_j = -1;
    }

    // Drop events: an active coefficient reaching zero.
    double gamma_drop = kInf;
    std::size_t drop_pos = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double b = beta[active[i]];
      if (b == 0.0 || d[static_cast<Index>(i)] == 0.0) continue;
      const double g = -b / d[static_cast<Index>(i)];
      if (g > 0.0 && g < gamma_drop) {
        gamma_drop = g;
        drop_pos = i;
      }
    }

    const double gamma_end = big_c - c_min;
    enum class Event { kJoin, kDrop, kEnd } event = Event::kEnd;
    double gamma = gamma_end;
    if (gamma_drop <= gamma_join && gamma_drop < gamma) {
      event = Event::kDrop;
      gamma = gamma_drop;
    } else if (gamma_join < gamma) {
      event = Event::kJoin;
      gamma = gamma_join;
    }
    const double c_new = event == Event::kEnd ? c_min : big_c - gamma;

    just_dropped = -1;
    if (event == Event::kDrop) {
      const Index j = active[drop_pos];
      beta[j] = 0.0;
      is_active[static_cast<std::size_t>(j)] = false;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop_pos));
      sign.erase(sign.begin() + static_cast<std::ptrdiff_t>(drop_pos));
      just_dropped = j;
    }

    // Exact coefficients at the new knot: X_A^T (y - X_A b) = c_new * s.
    if (!active.empty()) {
      ActiveSolve at = event == Event::kDrop ? factor_active(x, active) : std::move(as);
      if (at.singular)
        fail(ErrorCode::kDegenerateStep, "rank deficient active set after a drop at knot " +
                                             std::to_string(path.mu.size()));
      const Vector sa = Eigen::Map<const Vector>(sign.data(), static_cast<Index>(sign.size()));
      const Vector rhs = at.xa.transpose() * y - c_new * sa;
      const Vector b = refined_solve(at, rhs);
      for (std::size_t i = 0; i < active.size(); ++i) beta[active[i]] = b[static_cast<Index>(i)];
      recompute_correlations(y - at.xa * b);
    } else {
      recompute_correlations(y);
    }
    big_c = c_new;
    record(big_c);

    if (event == Event::kEnd) {
      path.termination = c_min > 0.0 ? "min-mu" : "complete";
      break;
    }
    if (event == Event::kJoin) join(join_j);
  }
  return path;
}

}  // namespace precond
