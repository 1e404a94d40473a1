#include "precond/precond.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>

#include <json.hpp>

#include "precond/classify.hpp"
#include "precond/harness.hpp"
#include "precond/screen.hpp"
#include "precond/simgen.hpp"
#include "precond/sparsereg.hpp"
#include "precond/spc.hpp"
#include "precond/survival.hpp"

struct pc_dataset {
  precond::Dataset d;
};

struct pc_report {
  precond::ExperimentReport r;
};

namespace {

using namespace precond;
using nlohmann::json;

thread_local std::string g_last_error;

template <typename F>
pc_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<pc_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return PC_ERR_INVALID_INPUT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PC_ERR_SIZE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PC_ERR_INTERNAL;
  }
}

void require(const void* ptr, const char* what) {
  if (!ptr) fail(ErrorCode::kInvalidInput, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Matrix column_major(const double* x, size_t n, size_t p) {
  require(x, "x");
  return Eigen::Map<const Matrix>(x, static_cast<Index>(n), static_cast<Index>(p));
}

// Standardized copy with the response centered, as the analysis routines expect.
struct Prepared {
  Dataset data;
  Vector response;  // centered continuous response or centered class labels; empty for survival
};

Prepared prepare(const Dataset& raw) {
  Prepared out{raw.standardized() ? raw : standardize(raw), {}};
  if (out.data.kind() == OutcomeKind::kContinuous) {
    out.response = out.data.y().array() - out.data.y().mean();
  } else if (out.data.kind() == OutcomeKind::kClass) {
    Vector lab = out.data.classes().label.cast<double>();
    out.response = lab.array() - lab.mean();
  }
  return out;
}

ScreenConfig screen_rule(const Dataset& d, double tau, long top_m) {
  if (tau >= 0.0) return ScreenConfig::absolute(tau);
  if (top_m > 0) return ScreenConfig::top(static_cast<Index>(top_m));
  return ScreenConfig::default_for(d.n(), d.p());
}

std::vector<std::string> ids_of(const Dataset& d, const std::vector<Index>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (Index j : idx) out.push_back(d.feature_ids()[static_cast<std::size_t>(j)]);
  return out;
}

json coefficient_map(const Dataset& d, const Vector& beta) {
  json m = json::object();
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) m[d.feature_ids()[static_cast<std::size_t>(j)]] = beta[j];
  return m;
}

struct SpcStage {
  SpcModel model;
  Vector y_tilde;
};

SpcStage spc_stage(const Prepared& p, long k, double tau, long top_m) {
  const FeatureSet b = select(association_scores(p.data), screen_rule(p.data, tau, top_m));
  SpcModel model = fit_spc(p.data, b, k <= 0 ? 1 : static_cast<Index>(k));
  Vector yt = p.data.kind() == OutcomeKind::kSurvival ? precondition_survival(model, p.data).y_tilde
                                                      : precondition(model, p.data, p.response).y_tilde;
  return {std::move(model), std::move(yt)};
}

json spc_json(const Prepared& p, const SpcStage& s) {
  return {{"screened", ids_of(p.data, s.model.features.indices)},
          {"eigenvalues", std::vector<double>(s.model.eigvals.data(),
                                              s.model.eigvals.data() + s.model.eigvals.size())},
          {"y_tilde", std::vector<double>(s.y_tilde.data(), s.y_tilde.data() + s.y_tilde.size())}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json oracle_json(const ExperimentConfig& cfg, const GeneratedData& g) {
  json o = json::object();
  switch (cfg.generator) {
    case Generator::kFactor: {
      const PopulationOracle po = oracle(cfg.factor.spec);
      const IrrepresentableResult ir = irrepresentable_check(cfg.factor.spec);
      o = {{"theta", to_vec(po.theta)},
           {"sigma_py", to_vec(po.sigma_py)},
           {"sigma_eps2", po.sigma_eps2},
           {"a", po.a.indices},
           {"b", po.b.indices},
           {"d", po.d.indices},
           {"irrepresentable", ir.value},
           {"irrepresentable_pass", ir.pass}};
      break;
    }
    case Generator::kProp5: {
      const Prop5Regime reg = prop5_spec(cfg.prop5);
      const PopulationOracle po = oracle(reg.spec);
      const IrrepresentableResult ir = irrepresentable_check(reg.spec);
      o = {{"p", reg.spec.p},
           {"aplus", reg.aplus.indices},
           {"aminus", reg.aminus.indices},
           {"t_n", reg.t_n},
           {"sigma_eps2", po.sigma_eps2},
           {"irrepresentable", ir.value},
           {"irrepresentable_pass", ir.pass},
           {"aplus_condition", aplus_condition(reg.spec, reg.aplus)}};
      break;
    }
    case Generator::kExample2: {
      const Example2Population pop = example2_population();
      o = {{"beta", {pop.beta[0], pop.beta[1], pop.beta[2]}},
           {"marginal_corr", {pop.marginal_corr[0], pop.marginal_corr[1], pop.marginal_corr[2]}}};
      break;
    }
    default: break;
  }
  o["truth"] = g.truth.indices;
  return o;
}

}  // namespace

extern "C" {

const char* pc_version(void) { return "0.1.0"; }

const char* pc_last_error(void) { return g_last_error.c_str(); }

const char* pc_status_name(pc_status status) {
  if (status == PC_OK) return "ok";
  const int v = static_cast<int>(status);
  if (v < 1 || v > static_cast<int>(ErrorCode::kInternal)) return "unknown";
  return error_code_name(static_cast<ErrorCode>(v)).data();
}

void pc_string_free(char* s) { std::free(s); }

pc_status pc_dataset_read_csv(const char* path, const char* outcome, pc_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    CsvSchema schema;
    if (outcome) schema.kind = parse_outcome_kind(outcome);
    *out = new pc_dataset{read_csv_file(path, schema)};
  });
}

pc_status pc_dataset_write_csv(const pc_dataset* d, const char* path) {
  return guarded([&] {
    require(d, "dataset");
    require(path, "path");
    write_csv_file(path, d->d);
  });
}

pc_status pc_dataset_create(const double* x, size_t n, size_t p, const double* y, pc_dataset** out) {
  return guarded([&] {
    require(y, "y");
    require(out, "out");
    Vector yv = Eigen::Map<const Vector>(y, static_cast<Index>(n));
    *out = new pc_dataset{Dataset(column_major(x, n, p), ContinuousOutcome{std::move(yv)})};
  });
}

pc_status pc_dataset_create_survival(const double* x, size_t n, size_t p, const double* time,
                                     const int* status, pc_dataset** out) {
  return guarded([&] {
    require(time, "time");
    require(status, "status");
    require(out, "out");
    SurvivalOutcome o{Eigen::Map<const Vector>(time, static_cast<Index>(n)),
                      Eigen::Map<const IntVector>(status, static_cast<Index>(n))};
    *out = new pc_dataset{Dataset(column_major(x, n, p), std::move(o))};
  });
}

pc_status pc_dataset_create_class(const double* x, size_t n, size_t p, const int* labels,
                                  pc_dataset** out) {
  return guarded([&] {
    require(labels, "labels");
    require(out, "out");
    ClassOutcome o{Eigen::Map<const IntVector>(labels, static_cast<Index>(n)), 0};
    *out = new pc_dataset{Dataset(column_major(x, n, p), std::move(o))};
  });
}

pc_status pc_dataset_shape(const pc_dataset* d, size_t* n, size_t* p) {
  return guarded([&] {
    require(d, "dataset");
    if (n) *n = static_cast<size_t>(d->d.n());
    if (p) *p = static_cast<size_t>(d->d.p());
  });
}

pc_status pc_dataset_standardize(const pc_dataset* d, pc_dataset** out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "out");
    *out = new pc_dataset{standardize(d->d)};
  });
}

void pc_dataset_free(pc_dataset* d) { delete d; }

pc_status pc_screen(const pc_dataset* d, double tau, long top_m, char** csv_out) {
  return guarded([&] {
    require(d, "dataset");
    require(csv_out, "csv_out");
    const Prepared p = prepare(d->d);
    const ScreenScores s = association_scores(p.data);
    const FeatureSet sel = select(s, screen_rule(p.data, tau, top_m));
    std::ostringstream os;
    os.precision(17);
    os << "feature_id,score,selected\n";
    for (Index j = 0; j < p.data.p(); ++j)
      os << p.data.feature_ids()[static_cast<std::size_t>(j)] << ',' << s.score[j] << ','
         << (sel.contains(j) ? 1 : 0) << '\n';
    *csv_out = dup_string(os.str());
  });
}

pc_status pc_fit(const pc_dataset* d, const char* method, long k, double tau, long top_m,
                 long max_steps, char** json_out) {
  return guarded([&] {
    require(d, "dataset");
    require(method, "method");
    require(json_out, "json_out");
    const Prepared p = prepare(d->d);
    const Index n = p.data.n(), np = p.data.p();
    const Index steps = max_steps > 0 ? static_cast<Index>(max_steps)
                                      : std::min<Index>({n - 1, np, 20});
    json j{{"method", method}, {"n", n}, {"p", np}, {"outcome", outcome_kind_name(p.data.kind())}};

    const std::string name = method;
    if (name == "spc") {
      const SpcStage s = spc_stage(p, k, tau, top_m);
      j.update(spc_json(p, s));
      *json_out = dup_string(j.dump(2));
      return;
    }

    const Method m = parse_method(name);
    Vector y_sel;
    if (m == Method::kSpcFs || m == Method::kSpcLasso) {
      const SpcStage s = spc_stage(p, k, tau, top_m);
      j.update(spc_json(p, s));
      y_sel = s.y_tilde;
    } else if (m == Method::kNscFs) {
      if (p.data.kind() != OutcomeKind::kClass)
        fail(ErrorCode::kWrongOutcome, "nsc-fs needs a class outcome");
      const NscModel nsc = nsc_fit_auto(p.data);
      const Matrix probs = nsc_predict_proba(nsc, p.data);
      y_sel = logit_precondition(probs);
      y_sel.array() -= y_sel.mean();
      Index wrong = 0;
      for (Index i = 0; i < probs.rows(); ++i) {
        Index best = 0;
        probs.row(i).maxCoeff(&best);
        if (best + 1 != p.data.classes().label[i]) ++wrong;
      }
      j["delta"] = nsc.delta;
      j["train_misclassified"] = wrong;
    } else {
      if (p.data.kind() == OutcomeKind::kSurvival)
        fail(ErrorCode::kWrongOutcome,
             "fs and lasso need a continuous or class response; use an spc method for survival");
      y_sel = p.response;
    }

    std::vector<Index> order;
    Vector own;
    if (m == Method::kLasso || m == Method::kSpcLasso) {
      LarsOptions opt;
      opt.max_entries = steps;
      const LassoPath path = lars_path(LassoProblem{p.data.x(), y_sel, PenaltyScale::kPerN, std::nullopt}, opt);
      order = path.entry_order;
      own = path.coefs.back();
      j["termination"] = path.termination;
      j["kkt_ok"] = path.all_kkt_ok();
    } else {
      const StepwisePath sp = forward_stepwise(p.data.x(), y_sel, steps);
      order = sp.entry_order;
      own = sp.coefs.empty() ? Vector::Zero(np) : sp.coefs.back();
      j["termination"] = sp.stop_reason;
    }
    j["entry_order"] = ids_of(p.data, order);
    bool fallback = false;
    Vector beta;
    try {
      beta = ols_refit(p.data.x(), y_sel, FeatureSet::from(order));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRank) throw;
      beta = own;
      fallback = true;
    }
    j["coefficients"] = coefficient_map(p.data, beta);
    j["refit_fallback"] = fallback;
    *json_out = dup_string(j.dump(2));
  });
}

pc_status pc_path(const pc_dataset* d, int preconditioned, long k, double tau, long top_m,
                  int raw_scale, long max_entries, char** knots_csv, char** entry_json) {
  return guarded([&] {
    require(d, "dataset");
    require(knots_csv, "knots_csv");
    const Prepared p = prepare(d->d);
    Vector y;
    if (preconditioned) {
      y = spc_stage(p, k, tau, top_m).y_tilde;
    } else {
      if (p.data.kind() == OutcomeKind::kSurvival)
        fail(ErrorCode::kWrongOutcome, "the unpreconditioned path needs a continuous or class response");
      y = p.response;
    }
    LarsOptions opt;
    if (max_entries > 0) opt.max_entries = static_cast<Index>(max_entries);
    const LassoPath path =
        lars_path(LassoProblem{p.data.x(), y, raw_scale ? PenaltyScale::kRaw : PenaltyScale::kPerN, std::nullopt}, opt);
    std::ostringstream os;
    os.precision(17);
    os << "knot,mu,feature_id,coefficient\n";
    for (std::size_t i = 0; i < path.mu.size(); ++i) {
      bool any = false;
      for (Index jj = 0; jj < path.coefs[i].size(); ++jj) {
        if (path.coefs[i][jj] == 0.0) continue;
        any = true;
        os << i << ',' << path.mu[i] << ',' << p.data.feature_ids()[static_cast<std::size_t>(jj)] << ','
           << path.coefs[i][jj] << '\n';
      }
      if (!any) os << i << ',' << path.mu[i] << ",,\n";
    }
    if (entry_json) {
      const json e{{"entry_order", ids_of(p.data, path.entry_order)},
                   {"termination", path.termination},
                   {"kkt_ok", path.all_kkt_ok()}};
      *entry_json = dup_string(e.dump(2));
    }
    *knots_csv = dup_string(os.str());
  });
}

pc_status pc_simulate(const char* config_json, uint64_t seed, long replication, const char* out_dir) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_dir, "out_dir");
    ExperimentConfig cfg = config_from_json(config_json);
    cfg.seed = seed;
    const GeneratedData g = generate_data(cfg, static_cast<Index>(replication));
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_csv_file((dir / "train.csv").string(), g.train);
    if (g.test) write_csv_file((dir / "test.csv").string(), *g.test);
    json spec{{"config", json::parse(config_to_json(cfg))},
              {"replication", replication},
              {"population", oracle_json(cfg, g)}};
    write_text(dir / "spec.json", spec.dump(2) + "\n");
  });
}

pc_status pc_experiment_run(const char* config_json, pc_report** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    const ExperimentConfig cfg = config_from_json(config_json);
    *out = new pc_report{run_experiment(cfg)};
  });
}

pc_status pc_report_write(const pc_report* r, const char* dir, const char* format) {
  return guarded([&] {
    require(r, "report");
    require(dir, "dir");
    emit_report(r->r, dir, format ? format : "csv");
  });
}

pc_status pc_report_summary_json(const pc_report* r, char** json_out) {
  return guarded([&] {
    require(r, "report");
    require(json_out, "json_out");
    *json_out = dup_string(summary_json(r->r));
  });
}

void pc_report_free(pc_report* r) { delete r; }

}  // extern "C"
