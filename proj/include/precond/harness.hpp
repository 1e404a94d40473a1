#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "precond/core.hpp"
#include "precond/screen.hpp"
#include "precond/simgen.hpp"

namespace precond {

enum class Generator { kExample1, kExample2, kExample3, kFactor, kProp5, kCsvInput };
enum class Method { kFs, kSpcFs, kLasso, kSpcLasso, kNscFs };

std::string_view generator_name(Generator g) noexcept;
Generator parse_generator(std::string_view name);
std::string_view method_name(Method m) noexcept;
Method parse_method(std::string_view name);

/// Screening rule for SPC methods. At most one field is set; when none is,
/// top-m with m = min(p, max(20, ceil(n / 2))) is used.
struct HarnessScreen {
  std::optional<double> tau;
  std::optional<Index> top_m;
  std::optional<double> tau_rate;  // tau = tau_rate * sqrt(log p / n)

  ScreenConfig resolve(Index n, Index p) const;
};

struct FactorGenerator {
  FactorModelSpec spec;
  Index n_train = 100;
  Index n_test = 0;
};

struct CsvInput {
  std::string path;
  CsvSchema schema;
  double train_fraction = 0.5;
  std::vector<Index> truth;  // 0-based feature indices, optional
};

struct ExperimentConfig {
  Generator generator = Generator::kExample1;
  std::vector<Method> methods{Method::kFs, Method::kSpcFs, Method::kLasso, Method::kSpcLasso};
  Index replications = 20;
  std::vector<Index> milestones{1, 5, 10, 20};
  Index k = 1;
  HarnessScreen screen;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "csv";
  unsigned threads = 0;  // 0: hardware concurrency

  bool recovery = false;  // exact-recovery metrics for lasso-type and stepwise methods
  Index recovery_grid = 20;
  double recovery_grid_low = 0.05;  // grid spans [low, 1] * mu_max, log-spaced
  bool curves = false;              // per-step curve data
  bool path_coefficients = false;   // test metrics from the selector's own coefficients
  double nsc_clip = 1e-6;
  Index path_max_entries = -1;      // -1: largest milestone

  Example1Params example1;
  Example2Params example2;
  Example3Params example3;
  FactorGenerator factor;
  Prop5Params prop5;
  CsvInput csv;
};

/// Throws kInvalidInput on an inconsistent configuration.
void validate_config(const ExperimentConfig& cfg);

/// JSON configuration. Keys absent from `text` keep the values of `base`.
ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base = {});
std::string config_to_json(const ExperimentConfig& cfg);

/// Named configurations: table1, table2, table3, figure5, consistency, prop5.
ExperimentConfig preset(std::string_view name);

/// One record per replication, method and milestone.
struct ReplicationRow {
  Index replication = 0;
  Method method = Method::kFs;
  bool ok = true;
  Index milestone = 0;
  Index good = 0;
  double test_mse = 0.0;   // NaN when not applicable
  double test_corr = 0.0;  // NaN when not applicable
  double train_p = 0.0;    // survival only, else NaN
  double test_p = 0.0;
  double misclass = 0.0;   // classification only, else NaN
  int refit_fallback = 0;
};

struct EntryRecord {
  Index replication = 0;
  Method method = Method::kFs;
  std::vector<Index> entry_order;
  std::string error;  // empty on success
};

struct RecoveryRecord {
  Index replication = 0;
  Method method = Method::kFs;
  bool path_recovered = false;
  std::vector<bool> grid_recovered;  // lasso-type only
};

struct CurvePoint {
  Index replication = 0;
  Method method = Method::kFs;
  Index step = 0;
  std::string metric;
  double value = 0.0;
};

struct AggregateRow {
  Method method = Method::kFs;
  Index milestone = 0;
  Index n_ok = 0;
  Index n_failed = 0;
  double good_mean = 0.0;
  double good_sd = 0.0;
  double test_mse_mean = 0.0;
  double test_corr_mean = 0.0;
  double train_p_median = 0.0;
  double test_p_median = 0.0;
  double misclass_mean = 0.0;
  Index refit_fallbacks = 0;
};

struct RecoverySummary {
  Method method = Method::kFs;
  Index n = 0;
  double path_rate = 0.0;
  std::vector<double> grid_rates;
  double best_grid_rate = 0.0;
};

struct KktSummary {
  Index paths = 0;
  Index knots = 0;
  Index violations = 0;
  double max_violation = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicationRow> rows;
  std::vector<EntryRecord> entries;
  std::vector<RecoveryRecord> recovery;
  std::vector<CurvePoint> curves;
  std::vector<AggregateRow> aggregates;
  std::vector<RecoverySummary> recovery_summary;
  KktSummary kkt;
  Index failed_replications = 0;  // replications where generation itself failed

  const AggregateRow& aggregate(Method m, Index milestone) const;
  const RecoverySummary& recovery_for(Method m) const;
};

/// |first `milestone` entries of entry_order intersected with truth|.
Index count_good(const std::vector<Index>& entry_order, const FeatureSet& truth, Index milestone);

/// Draws replication `replication` of a synthetic generator (not csv-input).
GeneratedData generate_data(const ExperimentConfig& cfg, Index replication);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Mean/sd reduction of replication rows, in method then milestone order.
std::vector<AggregateRow> aggregate_rows(const std::vector<ReplicationRow>& rows,
                                         const std::vector<Method>& methods,
                                         const std::vector<Index>& milestones);

/// Writes summary.{csv,json}, replications.csv, entries.csv, recovery.csv,
/// curves.csv and kkt.csv into directory `dir` (created if missing).
void emit_report(const ExperimentReport& r, const std::string& dir, const std::string& format);
std::vector<ReplicationRow> read_replications_csv(const std::string& path);
/// Aggregates, recovery rates and KKT totals as a JSON document (the content of summary.json).
std::string summary_json(const ExperimentReport& r);

}  // namespace precond
