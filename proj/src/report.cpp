#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "precond/harness.hpp"

namespace precond {
namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

json spec_to_json(const FactorModelSpec& s) {
  json u = json::array();
  for (Index c = 0; c < s.u.cols(); ++c) u.push_back(std::vector<double>(s.u.col(c).data(), s.u.col(c).data() + s.p));
  return {{"p", s.p},
          {"m", s.m},
          {"k", s.k},
          {"lambdas", std::vector<double>(s.lambdas.data(), s.lambdas.data() + s.lambdas.size())},
          {"u", u},
          {"beta", std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size())},
          {"sigma0", s.sigma0},
          {"sigma1", s.sigma1}};
}

FactorModelSpec spec_from_json(const json& j) {
  if (j.value("preset", std::string()) == "single")
    return single_factor_spec(j.at("p").get<Index>(), j.at("n_signal").get<Index>(),
                              j.value("lambda", 10.0), j.value("beta", 2.0),
                              j.value("sigma0", 1.0), j.value("sigma1", 1.0));
  FactorModelSpec s;
  const auto lambdas = j.at("lambdas").get<std::vector<double>>();
  const auto beta = j.at("beta").get<std::vector<double>>();
  const auto cols = j.at("u").get<std::vector<std::vector<double>>>();
  s.m = static_cast<Index>(lambdas.size());
  s.k = j.value("k", static_cast<Index>(beta.size()));
  s.p = cols.empty() ? 0 : static_cast<Index>(cols.front().size());
  s.lambdas = Eigen::Map<const Vector>(lambdas.data(), s.m);
  s.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  s.u.resize(s.p, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (static_cast<Index>(cols[c].size()) != s.p) fail(ErrorCode::kSpec, "u columns differ in length");
    s.u.col(static_cast<Index>(c)) = Eigen::Map<const Vector>(cols[c].data(), s.p);
  }
  get_if(j, "sigma0", s.sigma0);
  get_if(j, "sigma1", s.sigma1);
  validate_spec(s);
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::kInvalidInput, "bad number '" + s + "' in replications file");
  return v;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = base;
  try {
    if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
    if (j.contains("generator")) c.generator = parse_generator(j.at("generator").get<std::string>());
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    get_if(j, "replications", c.replications);
    get_if(j, "milestones", c.milestones);
    get_if(j, "k", c.k);
    if (j.contains("screen")) {
      const auto& s = j.at("screen");
      c.screen = {};
      if (s.contains("tau")) c.screen.tau = s.at("tau").get<double>();
      if (s.contains("top_m")) c.screen.top_m = s.at("top_m").get<Index>();
      if (s.contains("tau_rate")) c.screen.tau_rate = s.at("tau_rate").get<double>();
    }
    get_if(j, "seed", c.seed);
    get_if(j, "output", c.output);
    get_if(j, "format", c.format);
    get_if(j, "threads", c.threads);
    get_if(j, "recovery", c.recovery);
    get_if(j, "recovery_grid", c.recovery_grid);
    get_if(j, "recovery_grid_low", c.recovery_grid_low);
    get_if(j, "curves", c.curves);
    get_if(j, "path_coefficients", c.path_coefficients);
    get_if(j, "nsc_clip", c.nsc_clip);
    get_if(j, "path_max_entries", c.path_max_entries);
    if (j.contains("example1")) {
      const auto& e = j.at("example1");
      auto& p = c.example1;
      get_if(e, "n_train", p.n_train);
      get_if(e, "n_test", p.n_test);
      get_if(e, "p", p.p);
      get_if(e, "n_signal", p.n_signal);
      get_if(e, "beta0", p.beta0);
      get_if(e, "beta1", p.beta1);
      get_if(e, "alpha1", p.alpha1);
      get_if(e, "sigma0", p.sigma0);
      get_if(e, "sigma1", p.sigma1);
      if (e.contains("outcome")) p.outcome = parse_outcome_kind(e.at("outcome").get<std::string>());
      get_if(e, "survival_effect", p.survival_effect);
      get_if(e, "censoring_rate", p.censoring_rate);
    }
    if (j.contains("example2")) {
      const auto& e = j.at("example2");
      get_if(e, "n_train", c.example2.n_train);
      get_if(e, "n_test", c.example2.n_test);
      get_if(e, "p_noise", c.example2.p_noise);
    }
    if (j.contains("example3")) {
      const auto& e = j.at("example3");
      get_if(e, "n_train", c.example3.n_train);
      get_if(e, "n_test", c.example3.n_test);
      get_if(e, "p", c.example3.p);
      get_if(e, "n_signal", c.example3.n_signal);
      get_if(e, "sigma", c.example3.sigma);
    }
    if (j.contains("factor")) {
      const auto& e = j.at("factor");
      get_if(e, "n_train", c.factor.n_train);
      get_if(e, "n_test", c.factor.n_test);
      if (e.contains("spec")) c.factor.spec = spec_from_json(e.at("spec"));
    }
    if (j.contains("prop5")) {
      const auto& e = j.at("prop5");
      auto& p = c.prop5;
      get_if(e, "alpha", p.alpha);
      get_if(e, "c", p.c);
      get_if(e, "n", p.n);
      get_if(e, "p_cap", p.p_cap);
      get_if(e, "memory_budget_bytes", p.memory_budget_bytes);
      get_if(e, "n_plus", p.n_plus);
      get_if(e, "n_minus", p.n_minus);
      get_if(e, "lambda1", p.lambda1);
      get_if(e, "lambda2", p.lambda2);
      get_if(e, "sigma0", p.sigma0);
      get_if(e, "sigma1", p.sigma1);
      get_if(e, "beta1", p.beta1);
      get_if(e, "minus_loading", p.minus_loading);
    }
    if (j.contains("csv")) {
      const auto& e = j.at("csv");
      get_if(e, "path", c.csv.path);
      get_if(e, "train_fraction", c.csv.train_fraction);
      get_if(e, "truth", c.csv.truth);
      if (e.contains("outcome")) c.csv.schema.kind = parse_outcome_kind(e.at("outcome").get<std::string>());
      get_if(e, "response_column", c.csv.schema.response_column);
      get_if(e, "time_column", c.csv.schema.time_column);
      get_if(e, "status_column", c.csv.schema.status_column);
      get_if(e, "class_column", c.csv.schema.class_column);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["generator"] = std::string(generator_name(c.generator));
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  j["methods"] = methods;
  j["replications"] = c.replications;
  j["milestones"] = c.milestones;
  j["k"] = c.k;
  json screen = json::object();
  if (c.screen.tau) screen["tau"] = *c.screen.tau;
  if (c.screen.top_m) screen["top_m"] = *c.screen.top_m;
  if (c.screen.tau_rate) screen["tau_rate"] = *c.screen.tau_rate;
  j["screen"] = screen;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["format"] = c.format;
  j["threads"] = c.threads;
  j["recovery"] = c.recovery;
  j["recovery_grid"] = c.recovery_grid;
  j["recovery_grid_low"] = c.recovery_grid_low;
  j["curves"] = c.curves;
  j["path_coefficients"] = c.path_coefficients;
  j["nsc_clip"] = c.nsc_clip;
  j["path_max_entries"] = c.path_max_entries;
  switch (c.generator) {
    case Generator::kExample1: {
      const auto& p = c.example1;
      j["example1"] = {{"n_train", p.n_train}, {"n_test", p.n_test}, {"p", p.p},
                       {"n_signal", p.n_signal}, {"beta0", p.beta0}, {"beta1", p.beta1},
                       {"alpha1", p.alpha1}, {"sigma0", p.sigma0}, {"sigma1", p.sigma1},
                       {"outcome", std::string(outcome_kind_name(p.outcome))},
                       {"survival_effect", p.survival_effect}, {"censoring_rate", p.censoring_rate}};
      break;
    }
    case Generator::kExample2:
      j["example2"] = {{"n_train", c.example2.n_train}, {"n_test", c.example2.n_test},
                       {"p_noise", c.example2.p_noise}};
      break;
    case Generator::kExample3:
      j["example3"] = {{"n_train", c.example3.n_train}, {"n_test", c.example3.n_test},
                       {"p", c.example3.p}, {"n_signal", c.example3.n_signal},
                       {"sigma", c.example3.sigma}};
      break;
    case Generator::kFactor:
      j["factor"] = {{"n_train", c.factor.n_train}, {"n_test", c.factor.n_test},
                     {"spec", spec_to_json(c.factor.spec)}};
      break;
    case Generator::kProp5: {
      const auto& p = c.prop5;
      j["prop5"] = {{"alpha", p.alpha}, {"c", p.c}, {"n", p.n}, {"p_cap", p.p_cap},
                    {"memory_budget_bytes", p.memory_budget_bytes}, {"n_plus", p.n_plus},
                    {"n_minus", p.n_minus}, {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
                    {"sigma0", p.sigma0}, {"sigma1", p.sigma1}, {"beta1", p.beta1},
                    {"minus_loading", p.minus_loading}};
      break;
    }
    case Generator::kCsvInput:
      j["csv"] = {{"path", c.csv.path}, {"train_fraction", c.csv.train_fraction},
                  {"truth", c.csv.truth},
                  {"outcome", std::string(outcome_kind_name(c.csv.schema.kind))},
                  {"response_column", c.csv.schema.response_column},
                  {"time_column", c.csv.schema.time_column},
                  {"status_column", c.csv.schema.status_column},
                  {"class_column", c.csv.schema.class_column}};
      break;
  }
  return j.dump(2);
}

std::string summary_json(const ExperimentReport& r) {
  json j;
  j["config"] = json::parse(config_to_json(r.config));
  json aggs = json::array();
  for (const auto& a : r.aggregates)
    aggs.push_back({{"method", std::string(method_name(a.method))}, {"milestone", a.milestone},
                    {"n_ok", a.n_ok}, {"n_failed", a.n_failed}, {"good_mean", jnum(a.good_mean)},
                    {"good_sd", jnum(a.good_sd)}, {"test_mse_mean", jnum(a.test_mse_mean)},
                    {"test_corr_mean", jnum(a.test_corr_mean)},
                    {"train_p_median", jnum(a.train_p_median)},
                    {"test_p_median", jnum(a.test_p_median)},
                    {"misclass_mean", jnum(a.misclass_mean)},
                    {"refit_fallbacks", a.refit_fallbacks}});
  j["aggregates"] = aggs;
  json rec = json::array();
  for (const auto& v : r.recovery_summary)
    rec.push_back({{"method", std::string(method_name(v.method))}, {"n", v.n},
                   {"path_rate", v.path_rate}, {"best_grid_rate", v.best_grid_rate},
                   {"grid_rates", v.grid_rates}});
  j["recovery"] = rec;
  j["kkt"] = {{"paths", r.kkt.paths}, {"knots", r.kkt.knots}, {"violations", r.kkt.violations},
              {"max_violation", r.kkt.max_violation}};
  j["failed_replications"] = r.failed_replications;
  return j.dump(2) + "\n";
}

void emit_report(const ExperimentReport& r, const std::string& dir, const std::string& format) {
  if (format != "csv" && format != "json") fail(ErrorCode::kInvalidInput, "format must be csv or json");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::kIo, "cannot create output directory '" + dir + "'");
  const fs::path root(dir);

  if (format == "csv") {
    std::string s =
        "method,milestone,n_ok,n_failed,good_mean,good_sd,test_mse_mean,test_corr_mean,"
        "train_p_median,test_p_median,misclass_mean,refit_fallbacks\n";
    for (const auto& a : r.aggregates)
      s += std::string(method_name(a.method)) + "," + std::to_string(a.milestone) + "," +
           std::to_string(a.n_ok) + "," + std::to_string(a.n_failed) + "," + num(a.good_mean) + "," +
           num(a.good_sd) + "," + num(a.test_mse_mean) + "," + num(a.test_corr_mean) + "," +
           num(a.train_p_median) + "," + num(a.test_p_median) + "," + num(a.misclass_mean) + "," +
           std::to_string(a.refit_fallbacks) + "\n";
    write_file(root / "summary.csv", s);
    if (r.config.recovery) {
      std::string rs = "method,n,path_rate,best_grid_rate,grid_rates\n";
      for (const auto& v : r.recovery_summary) {
        std::string grid;
        for (double g : v.grid_rates) grid += (grid.empty() ? "" : " ") + num(g);
        rs += std::string(method_name(v.method)) + "," + std::to_string(v.n) + "," + num(v.path_rate) +
              "," + num(v.best_grid_rate) + "," + grid + "\n";
      }
      write_file(root / "recovery_summary.csv", rs);
    }
  } else {
    write_file(root / "summary.json", summary_json(r));
  }

  std::string rows =
      "replication,method,status,milestone,good,test_mse,test_corr,train_p,test_p,misclass,refit_fallback\n";
  for (const auto& x : r.rows)
    rows += std::to_string(x.replication) + "," + std::string(method_name(x.method)) + "," +
            (x.ok ? "ok" : "failed") + "," + std::to_string(x.milestone) + "," + std::to_string(x.good) +
            "," + num(x.test_mse) + "," + num(x.test_corr) + "," + num(x.train_p) + "," + num(x.test_p) +
            "," + num(x.misclass) + "," + std::to_string(x.refit_fallback) + "\n";
  write_file(root / "replications.csv", rows);

  std::string entries = "replication,method,entry_order,error\n";
  for (const auto& e : r.entries) {
    std::string order;
    for (Index j : e.entry_order) order += (order.empty() ? "" : " ") + std::to_string(j);
    std::string err = e.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    entries += std::to_string(e.replication) + "," + std::string(method_name(e.method)) + "," + order +
               "," + err + "\n";
  }
  write_file(root / "entries.csv", entries);

  if (r.config.recovery) {
    std::string rec = "replication,method,path_recovered,grid_recovered\n";
    for (const auto& v : r.recovery) {
      std::string bits;
      for (bool b : v.grid_recovered) bits += b ? '1' : '0';
      rec += std::to_string(v.replication) + "," + std::string(method_name(v.method)) + "," +
             (v.path_recovered ? "1" : "0") + "," + bits + "\n";
    }
    write_file(root / "recovery.csv", rec);
  }

  std::string curves = "replication,method,step,metric,value\n";
  for (const auto& c : r.curves)
    curves += std::to_string(c.replication) + "," + std::string(method_name(c.method)) + "," +
              std::to_string(c.step) + "," + c.metric + "," + num(c.value) + "\n";
  write_file(root / "curves.csv", curves);

  write_file(root / "kkt.csv", "paths,knots,violations,max_violation\n" + std::to_string(r.kkt.paths) +
                                   "," + std::to_string(r.kkt.knots) + "," +
                                   std::to_string(r.kkt.violations) + "," + num(r.kkt.max_violation) +
                                   "\n");
}

std::vector<ReplicationRow> read_replications_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kInvalidInput, "replications file is empty");
  const auto header = split_csv(line);
  if (header.size() != 11 || header[0] != "replication" || header[10] != "refit_fallback")
    fail(ErrorCode::kInvalidInput, "unexpected replications header");
  std::vector<ReplicationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 11) fail(ErrorCode::kInvalidInput, "malformed replications row: " + line);
    ReplicationRow r;
    r.replication = std::stoll(c[0]);
    r.method = parse_method(c[1]);
    r.ok = c[2] == "ok";
    r.milestone = std::stoll(c[3]);
    r.good = std::stoll(c[4]);
    r.test_mse = parse_double(c[5]);
    r.test_corr = parse_double(c[6]);
    r.train_p = parse_double(c[7]);
    r.test_p = parse_double(c[8]);
    r.misclass = parse_double(c[9]);
    r.refit_fallback = std::stoi(c[10]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace precond
