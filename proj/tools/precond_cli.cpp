// Command-line front end over the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "precond/precond.h"

namespace {

using nlohmann::json;

struct CliFailure {
  int status;
  std::string message;
};

void check(pc_status s) {
  if (s != PC_OK) throw CliFailure{static_cast<int>(s), pc_last_error()};
}

int report_failure(int status, const std::string& kind, const std::string& message) {
  const json err{{"error", kind}, {"code", status}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return status == 0 ? 1 : status;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{PC_ERR_IO, "cannot open '" + path + "' for reading"};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw CliFailure{PC_ERR_IO, "cannot open '" + path + "' for writing"};
  out << text;
}

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { pc_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

struct DatasetHandle {
  pc_dataset* d = nullptr;
  ~DatasetHandle() { pc_dataset_free(d); }
};

struct ReportHandle {
  pc_report* r = nullptr;
  ~ReportHandle() { pc_report_free(r); }
};

// Options shared by the data-analysis subcommands.
struct DataOptions {
  std::string input;
  std::string outcome = "continuous";
  std::optional<double> tau;
  std::optional<long> top_m;
  long k = 1;
  std::string output;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input,-i", o.input, "CSV dataset (features plus outcome columns)")->required();
  cmd->add_option("--outcome", o.outcome, "continuous, survival or class")
      ->check(CLI::IsMember({"continuous", "survival", "class"}));
  auto* tau = cmd->add_option("--tau", o.tau, "Absolute screening threshold");
  cmd->add_option("--top-m", o.top_m, "Keep the m features with largest |score|")->excludes(tau);
  cmd->add_option("--k", o.k, "Number of SPC components");
  cmd->add_option("--output,-o", o.output, "Output file (default stdout)");
}

double tau_arg(const DataOptions& o) { return o.tau ? *o.tau : -1.0; }
long top_m_arg(const DataOptions& o) { return o.top_m ? *o.top_m : 0; }

DatasetHandle load(const DataOptions& o) {
  DatasetHandle h;
  check(pc_dataset_read_csv(o.input.c_str(), o.outcome.c_str(), &h.d));
  return h;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

// Experiment configuration: file first, then preset, then individual flags.
struct ConfigOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<long> replications;
  std::vector<std::string> methods;
  std::vector<std::string> milestones;
  std::optional<long> k;
  std::optional<double> tau;
  std::optional<long> top_m;
  std::string output;
  std::optional<std::string> format;
  std::optional<unsigned> threads;
  bool recovery = false;
  bool curves = false;
};

json merged_config(const ConfigOptions& o) {
  json j = json::object();
  if (!o.config.empty()) {
    try {
      j = json::parse(read_text(o.config));
    } catch (const json::exception& e) {
      throw CliFailure{PC_ERR_INVALID_INPUT, std::string("config is not valid JSON: ") + e.what()};
    }
    if (!j.is_object()) throw CliFailure{PC_ERR_INVALID_INPUT, "config must be a JSON object"};
  }
  if (!o.preset.empty()) {
    // A preset named on the command line replaces the file's preset but keeps its other keys.
    j["preset"] = o.preset;
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.replications) j["replications"] = *o.replications;
  if (!o.methods.empty()) j["methods"] = split_list(o.methods);
  if (!o.milestones.empty()) {
    std::vector<long> ms;
    for (const auto& s : split_list(o.milestones)) {
      try {
        ms.push_back(std::stol(s));
      } catch (const std::exception&) {
        throw CliFailure{PC_ERR_INVALID_INPUT, "milestone '" + s + "' is not an integer"};
      }
    }
    j["milestones"] = ms;
  }
  if (o.k) j["k"] = *o.k;
  if (o.tau) j["screen"] = {{"tau", *o.tau}};
  if (o.top_m) j["screen"] = {{"top_m", *o.top_m}};
  if (!o.output.empty()) j["output"] = o.output;
  if (o.format) j["format"] = *o.format;
  if (o.threads) j["threads"] = *o.threads;
  if (o.recovery) j["recovery"] = true;
  if (o.curves) j["curves"] = true;
  return j;
}

void add_config_options(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("--config,-c", o.config, "JSON experiment configuration");
  cmd->add_option("--preset", o.preset,
                  "table1, table2, table3, figure5, consistency or prop5");
  cmd->add_option("--seed", o.seed, "Base random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised principal components pre-conditioning and sparse selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pc_version()));

  // simulate
  ConfigOptions sim;
  long sim_rep = 0;
  auto* simulate = app.add_subcommand("simulate", "Write one simulated replication to CSV");
  add_config_options(simulate, sim);
  simulate->add_option("--replication", sim_rep, "Replication index");
  simulate->add_option("--output,-o", sim.output, "Output directory")->required();

  // screen
  DataOptions scr;
  auto* screen = app.add_subcommand("screen", "Univariate association scores and screening");
  add_data_options(screen, scr);

  // fit
  DataOptions fit_opts;
  std::string method = "spc";
  long max_steps = 0;
  auto* fit = app.add_subcommand("fit", "Fit one method and emit JSON");
  add_data_options(fit, fit_opts);
  fit->add_option("--method,-m", method, "spc, fs, spc-fs, lasso, spc-lasso or nsc-fs")
      ->check(CLI::IsMember({"spc", "fs", "spc-fs", "lasso", "spc-lasso", "nsc-fs"}));
  fit->add_option("--max-steps", max_steps, "Variables to enter (default min(n-1, p, 20))");

  // path
  DataOptions path_opts;
  std::string path_method = "lasso";
  std::string penalty_scale = "raw";
  long max_entries = 0;
  std::string entries_out;
  auto* path = app.add_subcommand("path", "LASSO knot table and entry order");
  add_data_options(path, path_opts);
  path->add_option("--method,-m", path_method, "lasso (raw response) or spc-lasso")
      ->check(CLI::IsMember({"lasso", "spc-lasso"}));
  path->add_option("--penalty-scale", penalty_scale,
                   "raw: ||y - Xb||^2 + mu|b|_1; per-n: (1/n)||y - Xb||^2 + mu|b|_1")
      ->check(CLI::IsMember({"raw", "per-n"}));
  path->add_option("--max-entries", max_entries, "Stop after this many variables entered");
  path->add_option("--entries", entries_out, "Write the entry order JSON here (default stderr)");

  // experiment
  ConfigOptions exp;
  auto* experiment = app.add_subcommand("experiment", "Run a replicated simulation study");
  add_config_options(experiment, exp);
  experiment->add_option("--replications", exp.replications, "Number of replications");
  experiment->add_option("--method,-m", exp.methods, "Methods, comma separated");
  experiment->add_option("--milestones", exp.milestones, "Milestones, comma separated");
  experiment->add_option("--k", exp.k, "Number of SPC components");
  auto* etau = experiment->add_option("--tau", exp.tau, "Absolute screening threshold");
  experiment->add_option("--top-m", exp.top_m, "Top-m screening")->excludes(etau);
  experiment->add_option("--output,-o", exp.output, "Report directory");
  experiment->add_option("--format", exp.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  experiment->add_option("--threads", exp.threads, "Worker threads (0: all cores)");
  experiment->add_flag("--recovery", exp.recovery, "Record exact-recovery metrics");
  experiment->add_flag("--curves", exp.curves, "Record per-step curve data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_failure(PC_ERR_INVALID_INPUT, "usage", e.what());
  }

  try {
    if (*simulate) {
      const json cfg = merged_config(sim);
      std::uint64_t seed = 1;
      if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
      check(pc_simulate(cfg.dump().c_str(), seed, sim_rep, sim.output.c_str()));
    } else if (*screen) {
      DatasetHandle d = load(scr);
      OwnedString csv;
      check(pc_screen(d.d, tau_arg(scr), top_m_arg(scr), &csv.s));
      write_output(scr.output, csv.str());
    } else if (*fit) {
      DatasetHandle d = load(fit_opts);
      OwnedString out;
      check(pc_fit(d.d, method.c_str(), fit_opts.k, tau_arg(fit_opts), top_m_arg(fit_opts), max_steps,
                   &out.s));
      write_output(fit_opts.output, out.str());
    } else if (*path) {
      DatasetHandle d = load(path_opts);
      OwnedString knots, entries;
      check(pc_path(d.d, path_method == "spc-lasso" ? 1 : 0, path_opts.k, tau_arg(path_opts),
                    top_m_arg(path_opts), penalty_scale == "raw" ? 1 : 0, max_entries, &knots.s,
                    &entries.s));
      write_output(path_opts.output, knots.str());
      if (entries_out.empty())
        std::cerr << entries.str() << "\n";
      else
        write_output(entries_out, entries.str());
    } else if (*experiment) {
      const json cfg = merged_config(exp);
      ReportHandle r;
      check(pc_experiment_run(cfg.dump().c_str(), &r.r));
      const std::string dir = cfg.value("output", std::string());
      if (!dir.empty()) check(pc_report_write(r.r, dir.c_str(), cfg.value("format", std::string("csv")).c_str()));
      OwnedString summary;
      check(pc_report_summary_json(r.r, &summary.s));
      std::cout << summary.str();
    }
  } catch (const CliFailure& f) {
    return report_failure(f.status, pc_status_name(static_cast<pc_status>(f.status)), f.message);
  } catch (const std::exception& e) {
    return report_failure(PC_ERR_INTERNAL, "internal", e.what());
  }
  return 0;
}
