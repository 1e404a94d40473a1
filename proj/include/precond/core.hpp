#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "precond/error.hpp"

namespace precond {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

struct ContinuousOutcome {
  Vector y;
};

/// Right-censored survival pairs; status is 1 for an event, 0 for censoring.
struct SurvivalOutcome {
  Vector time;
  IntVector status;
};

/// Class labels in 1..num_classes.
struct ClassOutcome {
  IntVector label;
  int num_classes = 0;
};

using Outcome = std::variant<ContinuousOutcome, SurvivalOutcome, ClassOutcome>;

enum class OutcomeKind { kContinuous, kSurvival, kClass };

std::string_view outcome_kind_name(OutcomeKind kind) noexcept;
OutcomeKind parse_outcome_kind(std::string_view name);

/// Per-column centering and scaling captured from a training set.
struct Standardization {
  Vector center;
  Vector scale;                // 1 for constant columns
  std::vector<bool> constant;  // columns with zero sample variance

  bool operator==(const Standardization&) const = default;
};

/// Ordered set of column indices (0-based, ascending, distinct).
struct FeatureSet {
  std::vector<Index> indices;

  Index size() const { return static_cast<Index>(indices.size()); }
  bool empty() const { return indices.empty(); }
  bool contains(Index j) const;

  static FeatureSet from(std::vector<Index> indices);
  static FeatureSet range(Index begin, Index end);

  bool operator==(const FeatureSet&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  /// Validates shapes and outcome contents; feature ids default to x1..xp.
  Dataset(Matrix x, Outcome outcome, std::vector<std::string> feature_ids = {});

  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }
  const Matrix& x() const { return x_; }
  const Outcome& outcome() const { return outcome_; }
  OutcomeKind kind() const;
  const std::vector<std::string>& feature_ids() const { return feature_ids_; }

  /// Continuous response; throws kWrongOutcome for other outcome kinds.
  const Vector& y() const;
  const SurvivalOutcome& survival() const;
  const ClassOutcome& classes() const;

  bool standardized() const { return standardization_.has_value(); }
  const std::optional<Standardization>& standardization() const { return standardization_; }

  /// Copy of the rows in `rows` (order preserved), carrying the same metadata.
  Dataset rows(const std::vector<Index>& rows) const;
  /// Same predictors with a continuous response in place of the outcome.
  Dataset with_response(Vector y) const;

 private:
  friend Dataset apply_standardization(const Dataset&, const Standardization&);

  Matrix x_;
  Outcome outcome_;
  std::vector<std::string> feature_ids_;
  std::optional<Standardization> standardization_;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

Standardization fit_standardization(const Matrix& x);
Dataset apply_standardization(const Dataset& d, const Standardization& s);
/// Centers every column and scales non-constant ones to unit sample sd (divisor n-1).
Dataset standardize(const Dataset& d);

/// Deterministic train/test split; stratified by class for categorical outcomes.
SplitDataset split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// Reproducible random stream keyed by (seed, replication).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t replication);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

RandomStream rng_stream(std::uint64_t seed, std::uint64_t replication);

// CSV ingestion/export. The header row holds column names; outcome columns
// are `y` (continuous, name configurable), `time`,`status` (survival) or
// `class` (labels). Every other column is a feature.
struct CsvSchema {
  OutcomeKind kind = OutcomeKind::kContinuous;
  std::string response_column = "y";
  std::string time_column = "time";
  std::string status_column = "status";
  std::string class_column = "class";
};

Dataset read_csv(std::istream& in, const CsvSchema& schema = {});
Dataset read_csv_file(const std::string& path, const CsvSchema& schema = {});
void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& schema = {});
void write_csv_file(const std::string& path, const Dataset& d, const CsvSchema& schema = {});

}  // namespace precond
