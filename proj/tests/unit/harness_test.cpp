#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "precond/harness.hpp"
#include "precond/sparsereg.hpp"
#include "precond/spc.hpp"

using namespace precond;

namespace {

ExperimentConfig small_table1() {
  ExperimentConfig c;
  c.replications = 4;
  c.example1.p = 100;
  c.example1.n_test = 50;
  c.threads = 1;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CountGood, Examples) {
  const FeatureSet truth = FeatureSet::from({1, 3});
  EXPECT_EQ(count_good({3, 1, 99}, truth, 2), 2);
  EXPECT_EQ(count_good({3, 1, 99}, truth, 1), 1);
  EXPECT_EQ(count_good({5, 6, 7}, truth, 3), 0);
  EXPECT_EQ(count_good({3, 1}, truth, 10), 2);
  EXPECT_EQ(count_good({}, truth, 4), 0);
}

TEST(Names, RoundTrip) {
  for (Method m : {Method::kFs, Method::kSpcFs, Method::kLasso, Method::kSpcLasso, Method::kNscFs})
    EXPECT_EQ(parse_method(method_name(m)), m);
  for (Generator g : {Generator::kExample1, Generator::kExample2, Generator::kExample3, Generator::kFactor,
                      Generator::kProp5, Generator::kCsvInput})
    EXPECT_EQ(parse_generator(generator_name(g)), g);
  EXPECT_THROW(parse_method("ridge"), Error);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.milestones = {5, 5};
  EXPECT_THROW(validate_config(c), Error);
  c = ExperimentConfig{};
  c.methods = {Method::kFs, Method::kFs};
  EXPECT_THROW(validate_config(c), Error);
  c = ExperimentConfig{};
  c.replications = 0;
  EXPECT_THROW(validate_config(c), Error);
  c = ExperimentConfig{};
  c.screen.tau = 0.3;
  c.screen.top_m = 3;
  EXPECT_THROW(validate_config(c), Error);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = preset("prop5");
  c.seed = 77;
  c.threads = 2;
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  const ExperimentConfig partial = config_from_json(R"({"replications": 3})", c);
  EXPECT_EQ(partial.replications, 3);
  EXPECT_EQ(partial.seed, 77u);
  EXPECT_EQ(partial.generator, Generator::kProp5);
}

TEST(Config, Presets) {
  for (const char* name : {"table1", "table2", "table3", "figure5", "consistency", "prop5"})
    EXPECT_NO_THROW(validate_config(preset(name))) << name;
  EXPECT_THROW(preset("table9"), Error);
  EXPECT_EQ(preset("table3").milestones, (std::vector<Index>{5, 10, 20, 50}));
}

TEST(Screen, ResolveRules) {
  HarnessScreen s;
  EXPECT_EQ(s.resolve(20, 500).top_count, ScreenConfig::default_for(20, 500).top_count);
  s.tau_rate = 2.0;
  EXPECT_NEAR(*s.resolve(100, 1000).threshold, 2.0 * std::sqrt(std::log(1000.0) / 100.0), 1e-15);
}

TEST(Experiment, Deterministic) {
  const ExperimentConfig c = small_table1();
  const ExperimentReport a = run_experiment(c);
  ExperimentConfig c2 = c;
  c2.threads = 3;
  const ExperimentReport b = run_experiment(c2);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].good, b.rows[i].good);
    EXPECT_EQ(a.rows[i].test_mse, b.rows[i].test_mse);
  }
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_EQ(a.entries[i].entry_order, b.entries[i].entry_order);
}

TEST(Experiment, GoodCountsBoundedAndMonotone) {
  const ExperimentReport r = run_experiment(small_table1());
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok);
    EXPECT_GE(row.good, 0);
    EXPECT_LE(row.good, std::min<Index>(row.milestone, 20));
  }
  for (const auto& e : r.entries) {
    Index prev = 0;
    for (Index k : r.config.milestones) {
      const Index g = count_good(e.entry_order, FeatureSet::range(0, 20), k);
      EXPECT_GE(g, prev);
      prev = g;
    }
  }
  EXPECT_EQ(r.kkt.violations, 0);
  EXPECT_GT(r.kkt.knots, 0);
}

TEST(Experiment, SpcLassoMatchesManualChain) {
  ExperimentConfig c = small_table1();
  c.methods = {Method::kSpcLasso};
  c.replications = 1;
  const ExperimentReport r = run_experiment(c);

  const GeneratedData g = generate_data(c, 0);
  const Dataset train = apply_standardization(g.train, fit_standardization(g.train.x()));
  const Vector yc = train.y().array() - train.y().mean();
  const FeatureSet b = select(association_scores(train), c.screen.resolve(train.n(), train.p()));
  const SpcModel m = fit_spc(train, b, c.k);
  LarsOptions opt;
  opt.max_entries = c.milestones.back();
  const LassoPath path =
      lars_path(LassoProblem{train.x(), precondition(m, train, yc).y_tilde, PenaltyScale::kPerN, std::nullopt}, opt);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].entry_order, path.entry_order);
}

TEST(Experiment, FailuresAreRecorded) {
  ExperimentConfig c = small_table1();
  c.methods = {Method::kNscFs, Method::kFs};  // nsc-fs needs a class outcome
  c.replications = 2;
  const ExperimentReport r = run_experiment(c);
  const AggregateRow& nsc = r.aggregate(Method::kNscFs, 1);
  EXPECT_EQ(nsc.n_ok, 0);
  EXPECT_EQ(nsc.n_failed, 2);
  EXPECT_TRUE(std::isnan(nsc.good_mean));
  EXPECT_EQ(r.aggregate(Method::kFs, 1).n_ok, 2);
  for (const auto& e : r.entries)
    if (e.method == Method::kNscFs) EXPECT_FALSE(e.error.empty());
}

TEST(Experiment, ZeroNoiseHasZeroTestError) {
  ExperimentConfig c;
  c.generator = Generator::kFactor;
  c.factor.spec = single_factor_spec(30, 5, 4.0, 2.0, 1.0, 0.0);
  c.factor.n_train = 60;
  c.factor.n_test = 40;
  c.methods = {Method::kFs};
  c.milestones = {5};
  c.replications = 2;
  c.factor.spec.sigma0 = 0.0;
  c.factor.spec.sigma1 = 0.0;
  const ExperimentReport r = run_experiment(c);
  EXPECT_LT(r.aggregate(Method::kFs, 5).test_mse_mean, 1e-18);
}

TEST(Aggregate, EmptyMethodSet) {
  EXPECT_TRUE(aggregate_rows({}, {}, {1, 2}).empty());
  const std::vector<ReplicationRow> rows{{0, Method::kFs, true, 1, 2, 1.0, 0.5, NAN, NAN, NAN, 0},
                                         {1, Method::kFs, true, 1, 4, 3.0, 0.7, NAN, NAN, NAN, 1}};
  const auto agg = aggregate_rows(rows, {Method::kFs}, {1});
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_DOUBLE_EQ(agg[0].good_mean, 3.0);
  EXPECT_DOUBLE_EQ(agg[0].good_sd, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(agg[0].test_mse_mean, 2.0);
  EXPECT_EQ(agg[0].refit_fallbacks, 1);
  EXPECT_TRUE(std::isnan(agg[0].misclass_mean));
}

TEST(Report, EmitAndReadBack) {
  const ExperimentReport r = run_experiment(small_table1());
  const auto dir = std::filesystem::temp_directory_path() / "precond_harness_test";
  std::filesystem::remove_all(dir);
  emit_report(r, dir.string(), "json");
  for (const char* f : {"summary.json", "replications.csv", "entries.csv", "kkt.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto rows = read_replications_csv((dir / "replications.csv").string());
  ASSERT_EQ(rows.size(), r.rows.size());
  const auto agg = aggregate_rows(rows, r.config.methods, r.config.milestones);
  ASSERT_EQ(agg.size(), r.aggregates.size());
  for (std::size_t i = 0; i < agg.size(); ++i) {
    EXPECT_NEAR(agg[i].good_mean, r.aggregates[i].good_mean, 1e-12);
    EXPECT_NEAR(agg[i].test_mse_mean, r.aggregates[i].test_mse_mean, 1e-9 * r.aggregates[i].test_mse_mean);
  }
  EXPECT_EQ(slurp(dir / "summary.json"), summary_json(r));
  std::filesystem::remove_all(dir);
}

TEST(Report, Table3Cells) {
  ExperimentConfig c = preset("table3");
  c.replications = 2;
  c.example3.p = 200;
  c.example3.n_test = 20;
  const ExperimentReport r = run_experiment(c);
  EXPECT_EQ(r.aggregates.size(), 8u);
}
