#include "precond/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "precond/classify.hpp"
#include "precond/sparsereg.hpp"
#include "precond/spc.hpp"
#include "precond/survival.hpp"

namespace precond {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::string_view generator_name(Generator g) noexcept {
  switch (g) {
    case Generator::kExample1: return "example1";
    case Generator::kExample2: return "example2";
    case Generator::kExample3: return "example3";
    case Generator::kFactor: return "factor";
    case Generator::kProp5: return "prop5";
    case Generator::kCsvInput: return "csv-input";
  }
  return "unknown";
}

Generator parse_generator(std::string_view name) {
  for (auto g : {Generator::kExample1, Generator::kExample2, Generator::kExample3,
                 Generator::kFactor, Generator::kProp5, Generator::kCsvInput})
    if (generator_name(g) == name) return g;
  fail(ErrorCode::kInvalidInput, "unknown generator '" + std::string(name) + "'");
}

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::kFs: return "fs";
    case Method::kSpcFs: return "spc-fs";
    case Method::kLasso: return "lasso";
    case Method::kSpcLasso: return "spc-lasso";
    case Method::kNscFs: return "nsc-fs";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::kFs, Method::kSpcFs, Method::kLasso, Method::kSpcLasso, Method::kNscFs})
    if (method_name(m) == name) return m;
  fail(ErrorCode::kInvalidInput, "unknown method '" + std::string(name) + "'");
}

ScreenConfig HarnessScreen::resolve(Index n, Index p) const {
  const int set = int(tau.has_value()) + int(top_m.has_value()) + int(tau_rate.has_value());
  if (set > 1) fail(ErrorCode::kInvalidInput, "screen accepts only one of tau, top_m, tau_rate");
  if (tau) return ScreenConfig::absolute(*tau);
  if (top_m) return ScreenConfig::top(*top_m);
  if (tau_rate)
    return ScreenConfig::absolute(*tau_rate *
                                  std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)));
  return ScreenConfig::default_for(n, p);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.replications < 1) fail(ErrorCode::kInvalidInput, "replications must be >= 1");
  if (cfg.milestones.empty()) fail(ErrorCode::kInvalidInput, "milestones must not be empty");
  for (std::size_t i = 0; i < cfg.milestones.size(); ++i) {
    if (cfg.milestones[i] < 1) fail(ErrorCode::kInvalidInput, "milestones must be >= 1");
    if (i > 0 && cfg.milestones[i] <= cfg.milestones[i - 1])
      fail(ErrorCode::kInvalidInput, "milestones must be strictly ascending");
  }
  if (cfg.k < 1) fail(ErrorCode::kInvalidInput, "k must be >= 1");
  if (cfg.format != "csv" && cfg.format != "json")
    fail(ErrorCode::kInvalidInput, "format must be csv or json");
  if (cfg.recovery_grid < 2) fail(ErrorCode::kInvalidInput, "recovery grid needs at least 2 points");
  if (!(cfg.recovery_grid_low > 0.0 && cfg.recovery_grid_low < 1.0))
    fail(ErrorCode::kInvalidInput, "recovery grid low end must lie in (0, 1)");
  if (!(cfg.nsc_clip > 0.0 && cfg.nsc_clip < 0.5))
    fail(ErrorCode::kInvalidInput, "nsc clip must lie in (0, 0.5)");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cfg.methods[i] == cfg.methods[j]) fail(ErrorCode::kInvalidInput, "duplicate method");
  (void)cfg.screen.resolve(2, 2);
  if (cfg.generator == Generator::kCsvInput && cfg.csv.path.empty())
    fail(ErrorCode::kInvalidInput, "csv-input generator needs a csv path");
  if (cfg.generator == Generator::kFactor) validate_spec(cfg.factor.spec);
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "table1") {
    c.example1.sigma0 = 0.7;
    return c;
  }
  if (name == "table2") {
    c.generator = Generator::kExample2;
    c.methods = {Method::kLasso, Method::kSpcLasso};
    c.replications = 50;
    c.milestones = {1, 2, 3, 4};
    c.screen.tau_rate = 2.0;
    c.example2.n_train = 400;
    return c;
  }
  if (name == "table3") {
    c.generator = Generator::kExample3;
    c.methods = {Method::kLasso, Method::kSpcLasso};
    c.replications = 100;
    c.milestones = {5, 10, 20, 50};
    c.screen.top_m = 50;
    return c;
  }
  if (name == "figure5") {
    c.example1.outcome = OutcomeKind::kClass;
    c.example1.n_train = 100;
    c.methods = {Method::kFs, Method::kNscFs};
    c.replications = 10;
    c.milestones = {1, 2, 5, 10};
    return c;
  }
  if (name == "consistency") {
    c.generator = Generator::kFactor;
    c.factor.spec = single_factor_spec(2000, 10, 10.0, 2.0, 1.0, 1.0);
    c.factor.n_train = 400;
    c.methods = {Method::kSpcLasso};
    c.replications = 30;
    c.milestones = {10};
    c.screen.tau_rate = 2.0;
    c.recovery = true;
    return c;
  }
  if (name == "prop5") {
    c.generator = Generator::kProp5;
    c.methods = {Method::kLasso, Method::kSpcLasso};
    c.replications = 50;
    c.milestones = {5, 10};
    c.k = 2;
    c.screen.tau_rate = 2.0;
    c.recovery = true;
    return c;
  }
  fail(ErrorCode::kInvalidInput, "unknown preset '" + std::string(name) + "'");
}

const AggregateRow& ExperimentReport::aggregate(Method m, Index milestone) const {
  for (const auto& a : aggregates)
    if (a.method == m && a.milestone == milestone) return a;
  fail(ErrorCode::kInvalidInput, "no aggregate for method " + std::string(method_name(m)) +
                                     " at milestone " + std::to_string(milestone));
}

const RecoverySummary& ExperimentReport::recovery_for(Method m) const {
  for (const auto& r : recovery_summary)
    if (r.method == m) return r;
  fail(ErrorCode::kInvalidInput, "no recovery summary for " + std::string(method_name(m)));
}

Index count_good(const std::vector<Index>& entry_order, const FeatureSet& truth, Index milestone) {
  const auto upto = std::min(entry_order.size(), static_cast<std::size_t>(std::max<Index>(milestone, 0)));
  Index good = 0;
  for (std::size_t i = 0; i < upto; ++i)
    if (truth.contains(entry_order[i])) ++good;
  return good;
}

GeneratedData generate_data(const ExperimentConfig& cfg, Index rep) {
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
  switch (cfg.generator) {
    case Generator::kExample1: {
      Example1Data d = gen_example1(cfg.example1, rng);
      GeneratedData g{std::move(d.split.train), std::nullopt, d.truth};
      if (cfg.example1.n_test >= 2) g.test = std::move(d.split.test);
      return g;
    }
    case Generator::kExample2: return gen_example2(cfg.example2, rng);
    case Generator::kExample3: return gen_example3(cfg.example3, rng);
    case Generator::kFactor: {
      GeneratedData g;
      g.train = gen_factor_model(cfg.factor.spec, cfg.factor.n_train, rng).data;
      if (cfg.factor.n_test >= 2) g.test = gen_factor_model(cfg.factor.spec, cfg.factor.n_test, rng).data;
      g.truth = oracle(cfg.factor.spec).a;
      return g;
    }
    case Generator::kProp5: {
      Prop5Draw d = gen_prop5_regime(cfg.prop5, rng);
      GeneratedData g;
      g.train = std::move(d.data);
      std::vector<Index> t = d.regime.aplus.indices;
      t.insert(t.end(), d.regime.aminus.indices.begin(), d.regime.aminus.indices.end());
      g.truth = FeatureSet::from(std::move(t));
      return g;
    }
    case Generator::kCsvInput: break;
  }
  fail(ErrorCode::kInvalidInput, "csv-input is not a synthetic generator");
}

namespace {

struct Replicate {
  Dataset train;
  std::optional<Dataset> test;
  FeatureSet truth;
};

struct Shared {
  const ExperimentConfig& cfg;
  Index path_cap = 0;
  std::optional<Dataset> csv_data;
  FeatureSet fixed_truth;  // csv input
};

Replicate generate(const Shared& sh, Index rep) {
  const auto& cfg = sh.cfg;
  if (cfg.generator == Generator::kCsvInput) {
    const std::uint64_t s = cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(rep + 1);
    SplitDataset sp = split(*sh.csv_data, cfg.csv.train_fraction, s);
    return {std::move(sp.train), std::move(sp.test), sh.fixed_truth};
  }
  GeneratedData g = generate_data(cfg, rep);
  return {std::move(g.train), std::move(g.test), std::move(g.truth)};
}

struct ReplicationResult {
  std::vector<ReplicationRow> rows;
  std::vector<EntryRecord> entries;
  std::vector<RecoveryRecord> recovery;
  std::vector<CurvePoint> curves;
  KktSummary kkt;
  bool generation_failed = false;
};

bool is_lasso(Method m) { return m == Method::kLasso || m == Method::kSpcLasso; }
bool is_spc(Method m) { return m == Method::kSpcFs || m == Method::kSpcLasso; }

FeatureSet support_of(const Vector& beta) {
  FeatureSet s;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) s.indices.push_back(j);
  return s;
}

FeatureSet prefix_set(const std::vector<Index>& order, Index k) {
  const auto upto = std::min(order.size(), static_cast<std::size_t>(k));
  return FeatureSet::from(std::vector<Index>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(upto)));
}

double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double den = ac.norm() * bc.norm();
  return den > 0.0 ? ac.dot(bc) / den : kNaN;
}

double cox_p_or_nan(const Vector& lp, const SurvivalOutcome& o) {
  try {
    return cox_fit_single(lp, o).p_value;
  } catch (const Error&) {
    return kNaN;
  }
}

// Everything needed to score a selected support.
struct Evaluation {
  const Dataset& train;
  const Dataset* test;
  const Vector& response;  // response the selector was run on
  double y_offset = 0.0;   // added back to continuous predictions
};

struct SupportMetrics {
  double test_mse = kNaN, test_corr = kNaN, train_p = kNaN, test_p = kNaN, misclass = kNaN;
};

SupportMetrics evaluate(const Evaluation& ev, const Vector& beta) {
  SupportMetrics m;
  const OutcomeKind kind = ev.train.kind();
  if (kind == OutcomeKind::kContinuous) {
    if (ev.test) {
      const Vector pred = (ev.test->x() * beta).array() + ev.y_offset;
      m.test_mse = (ev.test->y() - pred).squaredNorm() / static_cast<double>(ev.test->n());
      m.test_corr = correlation(pred, ev.test->y());
    }
  } else if (kind == OutcomeKind::kSurvival) {
    m.train_p = cox_p_or_nan(ev.train.x() * beta, ev.train.survival());
    if (ev.test) m.test_p = cox_p_or_nan(ev.test->x() * beta, ev.test->survival());
  } else if (ev.test) {
    // Two-class rule: threshold the fitted score midway between the class means on train.
    const Vector f = ev.train.x() * beta;
    const auto& lab = ev.train.classes().label;
    double s1 = 0.0, s2 = 0.0, n1 = 0.0, n2 = 0.0;
    for (Index i = 0; i < f.size(); ++i) {
      if (lab[i] == 1) { s1 += f[i]; n1 += 1.0; } else { s2 += f[i]; n2 += 1.0; }
    }
    const double m1 = n1 > 0.0 ? s1 / n1 : 0.0, m2 = n2 > 0.0 ? s2 / n2 : 0.0;
    const double cut = 0.5 * (m1 + m2);
    const Vector ft = ev.test->x() * beta;
    const auto& tl = ev.test->classes().label;
    double wrong = 0.0;
    for (Index i = 0; i < ft.size(); ++i) {
      const int predicted = (ft[i] > cut) == (m2 >= m1) ? 2 : 1;
      if (predicted != tl[i]) wrong += 1.0;
    }
    m.misclass = wrong;
  }
  return m;
}

void run_method(const Shared& sh, Method method, Index rep, const Replicate& data,
                const Dataset& train, const Dataset* test, const Vector* y_c, double y_mean,
                const ScreenScores* scores, const std::string* score_error,
                ReplicationResult& out) {
  const auto& cfg = sh.cfg;
  EntryRecord entry{rep, method, {}, {}};
  try {
    const OutcomeKind kind = train.kind();
    Vector y_sel;
    switch (method) {
      case Method::kFs:
      case Method::kLasso:
        if (!y_c)
          fail(ErrorCode::kWrongOutcome,
               "fs and lasso need a continuous or class response; use an spc method for survival");
        y_sel = *y_c;
        break;
      case Method::kSpcFs:
      case Method::kSpcLasso: {
        if (!scores) fail(ErrorCode::kInternal, score_error ? *score_error : "screening failed");
        const FeatureSet b = select(*scores, cfg.screen.resolve(train.n(), train.p()));
        const SpcModel model = fit_spc(train, b, cfg.k);
        y_sel = kind == OutcomeKind::kSurvival ? precondition_survival(model, train).y_tilde
                                               : precondition(model, train, *y_c).y_tilde;
        break;
      }
      case Method::kNscFs: {
        if (kind != OutcomeKind::kClass)
          fail(ErrorCode::kWrongOutcome, "nsc-fs needs a class outcome");
        const NscModel nsc = nsc_fit_auto(train);
        y_sel = logit_precondition(nsc_predict_proba(nsc, train), cfg.nsc_clip);
        y_sel.array() -= y_sel.mean();
        break;
      }
    }

    const Evaluation ev{train, test, y_sel, kind == OutcomeKind::kContinuous ? y_mean : 0.0};
    std::vector<Vector> own;  // selector's own coefficients after each entry
    std::optional<LassoPath> lpath;
    if (is_lasso(method)) {
      LarsOptions opt;
      opt.max_entries = sh.path_cap;
      if (cfg.recovery) opt.max_entries = std::max<Index>(sh.path_cap, 3 * data.truth.size());
      lpath = lars_path(LassoProblem{train.x(), y_sel, PenaltyScale::kPerN, std::nullopt}, opt);
      entry.entry_order = lpath->entry_order;
      out.kkt.paths += 1;
      for (const auto& c : lpath->kkt) {
        out.kkt.knots += 1;
        if (!c.ok) out.kkt.violations += 1;
        out.kkt.max_violation = std::max(out.kkt.max_violation, c.max_violation);
      }
      // Knot index at which each entry joined, then the next knot's coefficients.
      std::size_t e = 0;
      for (std::size_t knot = 1; knot < lpath->coefs.size() && e < entry.entry_order.size(); ++knot) {
        while (e < entry.entry_order.size() && lpath->coefs[knot][entry.entry_order[e]] != 0.0) {
          own.push_back(lpath->coefs[knot]);
          ++e;
        }
      }
      while (own.size() < entry.entry_order.size()) own.push_back(lpath->coefs.back());
    } else {
      StepwisePath sp = forward_stepwise(train.x(), y_sel, sh.path_cap);
      entry.entry_order = sp.entry_order;
      own = std::move(sp.coefs);
    }

    auto coefficients_for = [&](Index k, int& fallback) -> Vector {
      const auto& order = entry.entry_order;
      if (order.empty()) return Vector::Zero(train.p());
      const std::size_t idx = std::min(order.size(), static_cast<std::size_t>(k)) - 1;
      if (cfg.path_coefficients) return own[idx];
      try {
        return ols_refit(train.x(), y_sel, prefix_set(order, k));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kRank) throw;
        fallback = 1;
        return own[idx];
      }
    };

    for (Index k : cfg.milestones) {
      ReplicationRow row{rep, method, true, k, count_good(entry.entry_order, data.truth, k)};
      const Vector beta = coefficients_for(k, row.refit_fallback);
      const SupportMetrics sm = evaluate(ev, beta);
      row.test_mse = sm.test_mse;
      row.test_corr = sm.test_corr;
      row.train_p = sm.train_p;
      row.test_p = sm.test_p;
      row.misclass = sm.misclass;
      out.rows.push_back(row);
    }

    if (cfg.recovery) {
      RecoveryRecord rec{rep, method, false, {}};
      if (lpath) {
        for (std::size_t i = 0; i + 1 < lpath->coefs.size() && !rec.path_recovered; ++i)
          rec.path_recovered = support_of(0.5 * (lpath->coefs[i] + lpath->coefs[i + 1])) == data.truth;
        const double top = lpath->mu.front();
        for (Index g = 0; g < cfg.recovery_grid; ++g) {
          const double mu = top * std::pow(cfg.recovery_grid_low, static_cast<double>(g) /
                                                                      static_cast<double>(cfg.recovery_grid - 1));
          // Penalties beyond the computed stretch of the path count as misses.
          const bool reached = lpath->termination == "complete" || mu >= lpath->mu.back();
          rec.grid_recovered.push_back(reached && support_of(lpath->coefficients_at(mu)) == data.truth);
        }
      } else {
        const auto a = static_cast<std::size_t>(data.truth.size());
        rec.path_recovered = entry.entry_order.size() >= a &&
                             prefix_set(entry.entry_order, data.truth.size()) == data.truth;
      }
      out.recovery.push_back(std::move(rec));
    }

    if (cfg.curves) {
      double score_sum = 0.0;
      for (std::size_t s = 1; s <= entry.entry_order.size(); ++s) {
        const auto step = static_cast<Index>(s);
        if (scores) {
          score_sum += std::abs(scores->score[entry.entry_order[s - 1]]);
          out.curves.push_back({rep, method, step, "mean_abs_score", score_sum / static_cast<double>(s)});
        }
        int ignored = 0;
        const SupportMetrics sm = evaluate(ev, coefficients_for(step, ignored));
        if (!std::isnan(sm.test_corr)) out.curves.push_back({rep, method, step, "test_corr", sm.test_corr});
        if (!std::isnan(sm.train_p)) out.curves.push_back({rep, method, step, "train_p", sm.train_p});
        if (!std::isnan(sm.test_p)) out.curves.push_back({rep, method, step, "test_p", sm.test_p});
      }
    }
  } catch (const std::exception& err) {
    entry.entry_order.clear();
    entry.error = err.what();
    out.rows.erase(std::remove_if(out.rows.begin(), out.rows.end(),
                                  [&](const ReplicationRow& r) { return r.method == method; }),
                   out.rows.end());
    out.recovery.erase(std::remove_if(out.recovery.begin(), out.recovery.end(),
                                      [&](const RecoveryRecord& r) { return r.method == method; }),
                       out.recovery.end());
    out.curves.erase(std::remove_if(out.curves.begin(), out.curves.end(),
                                    [&](const CurvePoint& c) { return c.method == method; }),
                     out.curves.end());
    for (Index k : cfg.milestones) {
      ReplicationRow row{rep, method, false, k, 0, kNaN, kNaN, kNaN, kNaN, kNaN, 0};
      out.rows.push_back(row);
    }
  }
  out.entries.push_back(std::move(entry));
}

ReplicationResult run_replication(const Shared& sh, Index rep) {
  const auto& cfg = sh.cfg;
  ReplicationResult out;
  Replicate data;
  std::string gen_error;
  try {
    data = generate(sh, rep);
  } catch (const std::exception& err) {
    gen_error = err.what();
  }
  if (!gen_error.empty()) {
    out.generation_failed = true;
    for (Method m : cfg.methods) {
      out.entries.push_back({rep, m, {}, "generation failed: " + gen_error});
      for (Index k : cfg.milestones) out.rows.push_back({rep, m, false, k, 0, kNaN, kNaN, kNaN, kNaN, kNaN, 0});
    }
    return out;
  }

  // Standardize on train and carry the same parameters to test.
  const Standardization st = fit_standardization(data.train.x());
  const Dataset train = apply_standardization(data.train, st);
  std::optional<Dataset> test;
  if (data.test) test = apply_standardization(*data.test, st);

  std::optional<Vector> y_c;
  double y_mean = 0.0;
  if (train.kind() == OutcomeKind::kContinuous) {
    y_mean = train.y().mean();
    y_c = Vector(train.y().array() - y_mean);
  } else if (train.kind() == OutcomeKind::kClass) {
    Vector lab = train.classes().label.cast<double>();
    y_c = Vector(lab.array() - lab.mean());
  }

  std::optional<ScreenScores> scores;
  std::string score_error;
  const bool need_scores =
      cfg.curves || std::any_of(cfg.methods.begin(), cfg.methods.end(), is_spc);
  if (need_scores) {
    try {
      scores = association_scores(train);
    } catch (const std::exception& err) {
      score_error = err.what();
    }
  }

  for (Method m : cfg.methods)
    run_method(sh, m, rep, data, train, test ? &*test : nullptr, y_c ? &*y_c : nullptr, y_mean,
               scores ? &*scores : nullptr, score_error.empty() ? nullptr : &score_error, out);
  return out;
}

double mean_finite(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t c = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += x;
      ++c;
    }
  return c ? s / static_cast<double>(c) : kNaN;
}

double median_finite(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

std::vector<AggregateRow> aggregate_rows(const std::vector<ReplicationRow>& rows,
                                         const std::vector<Method>& methods,
                                         const std::vector<Index>& milestones) {
  std::vector<AggregateRow> out;
  for (Method m : methods) {
    for (Index k : milestones) {
      AggregateRow a;
      a.method = m;
      a.milestone = k;
      std::vector<double> good, mse, corr, trp, tep, mis;
      for (const auto& r : rows) {
        if (r.method != m || r.milestone != k) continue;
        if (!r.ok) {
          ++a.n_failed;
          continue;
        }
        ++a.n_ok;
        good.push_back(static_cast<double>(r.good));
        mse.push_back(r.test_mse);
        corr.push_back(r.test_corr);
        trp.push_back(r.train_p);
        tep.push_back(r.test_p);
        mis.push_back(r.misclass);
        a.refit_fallbacks += r.refit_fallback;
      }
      if (good.empty()) {
        a.good_mean = a.good_sd = kNaN;
      } else {
        a.good_mean = mean_finite(good);
        double ss = 0.0;
        for (double g : good) ss += (g - a.good_mean) * (g - a.good_mean);
        a.good_sd = good.size() > 1 ? std::sqrt(ss / static_cast<double>(good.size() - 1)) : 0.0;
      }
      a.test_mse_mean = mean_finite(mse);
      a.test_corr_mean = mean_finite(corr);
      a.train_p_median = median_finite(trp);
      a.test_p_median = median_finite(tep);
      a.misclass_mean = mean_finite(mis);
      out.push_back(a);
    }
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Shared sh{cfg, 0, std::nullopt, {}};
  Index cap = cfg.milestones.back();
  if (cfg.path_max_entries >= 0) cap = std::max(cap, cfg.path_max_entries);
  sh.path_cap = cap;
  if (cfg.generator == Generator::kCsvInput) {
    sh.csv_data = read_csv_file(cfg.csv.path, cfg.csv.schema);
    sh.fixed_truth = FeatureSet::from(cfg.csv.truth);
  }

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<ReplicationResult> results(reps);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < reps; i = next++)
          results[i] = run_replication(sh, static_cast<Index>(i));
      });
  }

  ExperimentReport report;
  report.config = cfg;
  for (auto& r : results) {
    if (r.generation_failed) ++report.failed_replications;
    report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
    for (auto& e : r.entries) report.entries.push_back(std::move(e));
    for (auto& v : r.recovery) report.recovery.push_back(std::move(v));
    report.curves.insert(report.curves.end(), r.curves.begin(), r.curves.end());
    report.kkt.paths += r.kkt.paths;
    report.kkt.knots += r.kkt.knots;
    report.kkt.violations += r.kkt.violations;
    report.kkt.max_violation = std::max(report.kkt.max_violation, r.kkt.max_violation);
  }
  report.aggregates = aggregate_rows(report.rows, cfg.methods, cfg.milestones);

  if (cfg.recovery) {
    for (Method m : cfg.methods) {
      RecoverySummary s;
      s.method = m;
      s.grid_rates.assign(static_cast<std::size_t>(is_lasso(m) ? cfg.recovery_grid : 0), 0.0);
      for (const auto& r : report.recovery) {
        if (r.method != m) continue;
        ++s.n;
        s.path_rate += r.path_recovered ? 1.0 : 0.0;
        for (std::size_t g = 0; g < r.grid_recovered.size() && g < s.grid_rates.size(); ++g)
          s.grid_rates[g] += r.grid_recovered[g] ? 1.0 : 0.0;
      }
      if (s.n > 0) {
        s.path_rate /= static_cast<double>(s.n);
        for (double& g : s.grid_rates) g /= static_cast<double>(s.n);
      }
      s.best_grid_rate = s.grid_rates.empty() ? 0.0 : *std::max_element(s.grid_rates.begin(), s.grid_rates.end());
      report.recovery_summary.push_back(std::move(s));
    }
  }
  return report;
}

}  // namespace precond
