#include "precond/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace precond {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kWrongOutcome: return "wrong-outcome";
    case ErrorCode::kNoEvents: return "no-events";
    case ErrorCode::kEmptyScreen: return "empty-screen";
    case ErrorCode::kRank: return "rank";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kDegenerateStep: return "degenerate-step";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kDegenerateCovariate: return "degenerate-covariate";
    case ErrorCode::kInvalidClass: return "invalid-class";
    case ErrorCode::kSpec: return "spec";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kSize: return "size";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

std::string_view outcome_kind_name(OutcomeKind kind) noexcept {
  switch (kind) {
    case OutcomeKind::kContinuous: return "continuous";
    case OutcomeKind::kSurvival: return "survival";
    case OutcomeKind::kClass: return "class";
  }
  return "unknown";
}

OutcomeKind parse_outcome_kind(std::string_view name) {
  if (name == "continuous") return OutcomeKind::kContinuous;
  if (name == "survival") return OutcomeKind::kSurvival;
  if (name == "class" || name == "classification") return OutcomeKind::kClass;
  fail(ErrorCode::kInvalidInput, "unknown outcome kind '" + std::string(name) + "'");
}

bool FeatureSet::contains(Index j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

FeatureSet FeatureSet::from(std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    fail(ErrorCode::kInvalidInput, "feature set contains duplicate indices");
  if (!indices.empty() && indices.front() < 0)
    fail(ErrorCode::kInvalidInput, "feature set contains a negative index");
  return FeatureSet{std::move(indices)};
}

FeatureSet FeatureSet::range(Index begin, Index end) {
  FeatureSet s;
  for (Index j = begin; j < end; ++j) s.indices.push_back(j);
  return s;
}

namespace {

Index outcome_length(const Outcome& o) {
  return std::visit(
      [](const auto& v) -> Index {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ContinuousOutcome>) return v.y.size();
        else if constexpr (std::is_same_v<T, SurvivalOutcome>) return v.time.size();
        else return v.label.size();
      },
      o);
}

void validate_outcome(Outcome& o) {
  if (auto* s = std::get_if<SurvivalOutcome>(&o)) {
    if (s->status.size() != s->time.size())
      fail(ErrorCode::kInvalidInput, "survival time and status lengths differ");
    for (Index i = 0; i < s->time.size(); ++i) {
      if (!std::isfinite(s->time[i]) || s->time[i] < 0.0)
        fail(ErrorCode::kInvalidInput, "survival times must be finite and non-negative");
      if (s->status[i] != 0 && s->status[i] != 1)
        fail(ErrorCode::kInvalidInput, "survival status must be 0 or 1");
    }
  } else if (auto* c = std::get_if<ClassOutcome>(&o)) {
    int max_label = 0;
    for (Index i = 0; i < c->label.size(); ++i) {
      if (c->label[i] < 1) fail(ErrorCode::kInvalidClass, "class labels must be >= 1");
      max_label = std::max(max_label, c->label[i]);
    }
    if (c->num_classes == 0) c->num_classes = max_label;
    if (max_label > c->num_classes)
      fail(ErrorCode::kInvalidClass, "class label exceeds declared number of classes");
  } else {
    const auto& y = std::get<ContinuousOutcome>(o).y;
    if (!y.allFinite()) fail(ErrorCode::kInvalidInput, "response contains non-finite values");
  }
}

}  // namespace

Dataset::Dataset(Matrix x, Outcome outcome, std::vector<std::string> feature_ids)
    : x_(std::move(x)), outcome_(std::move(outcome)), feature_ids_(std::move(feature_ids)) {
  if (x_.rows() < 2) fail(ErrorCode::kInvalidInput, "dataset needs at least 2 rows");
  if (x_.cols() < 1) fail(ErrorCode::kInvalidInput, "dataset needs at least 1 column");
  if (outcome_length(outcome_) != x_.rows())
    fail(ErrorCode::kInvalidInput, "outcome length does not match number of rows");
  if (!x_.allFinite()) fail(ErrorCode::kInvalidInput, "predictors contain non-finite values");
  validate_outcome(outcome_);
  if (feature_ids_.empty()) {
    feature_ids_.reserve(static_cast<std::size_t>(x_.cols()));
    for (Index j = 0; j < x_.cols(); ++j) feature_ids_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Index>(feature_ids_.size()) != x_.cols()) {
    fail(ErrorCode::kInvalidInput, "feature id count does not match number of columns");
  }
}

OutcomeKind Dataset::kind() const {
  switch (outcome_.index()) {
    case 0: return OutcomeKind::kContinuous;
    case 1: return OutcomeKind::kSurvival;
    default: return OutcomeKind::kClass;
  }
}

const Vector& Dataset::y() const {
  if (auto* c = std::get_if<ContinuousOutcome>(&outcome_)) return c->y;
  fail(ErrorCode::kWrongOutcome, "operation requires a continuous outcome");
}

const SurvivalOutcome& Dataset::survival() const {
  if (auto* s = std::get_if<SurvivalOutcome>(&outcome_)) return *s;
  fail(ErrorCode::kWrongOutcome, "operation requires a survival outcome");
}

const ClassOutcome& Dataset::classes() const {
  if (auto* c = std::get_if<ClassOutcome>(&outcome_)) return *c;
  fail(ErrorCode::kWrongOutcome, "operation requires a class outcome");
}

Dataset Dataset::rows(const std::vector<Index>& rows) const {
  const auto m = static_cast<Index>(rows.size());
  Matrix x(m, p());
  for (Index i = 0; i < m; ++i) x.row(i) = x_.row(rows[static_cast<std::size_t>(i)]);
  Outcome o = std::visit(
      [&](const auto& v) -> Outcome {
        using T = std::decay_t<decltype(v)>;
        T out = v;
        if constexpr (std::is_same_v<T, ContinuousOutcome>) {
          out.y.resize(m);
          for (Index i = 0; i < m; ++i) out.y[i] = v.y[rows[static_cast<std::size_t>(i)]];
        } else if constexpr (std::is_same_v<T, SurvivalOutcome>) {
          out.time.resize(m);
          out.status.resize(m);
          for (Index i = 0; i < m; ++i) {
            out.time[i] = v.time[rows[static_cast<std::size_t>(i)]];
            out.status[i] = v.status[rows[static_cast<std::size_t>(i)]];
          }
        } else {
          out.label.resize(m);
          for (Index i = 0; i < m; ++i) out.label[i] = v.label[rows[static_cast<std::size_t>(i)]];
        }
        return out;
      },
      outcome_);
  Dataset d(std::move(x), std::move(o), feature_ids_);
  d.standardization_ = standardization_;
  return d;
}

Dataset Dataset::with_response(Vector y) const {
  Dataset d(x_, ContinuousOutcome{std::move(y)}, feature_ids_);
  d.standardization_ = standardization_;
  return d;
}

Standardization fit_standardization(const Matrix& x) {
  const Index n = x.rows();
  if (n < 2) fail(ErrorCode::kInvalidInput, "standardization needs at least 2 rows");
  Standardization s;
  s.center = x.colwise().mean().transpose();
  s.scale = Vector::Ones(x.cols());
  s.constant.assign(static_cast<std::size_t>(x.cols()), false);
  for (Index j = 0; j < x.cols(); ++j) {
    const double sd =
        std::sqrt((x.col(j).array() - s.center[j]).square().sum() / static_cast<double>(n - 1));
    const double magnitude = std::max(1.0, x.col(j).cwiseAbs().maxCoeff());
    if (sd <= 1e-12 * magnitude) {
      s.constant[static_cast<std::size_t>(j)] = true;
    } else {
      s.scale[j] = sd;
    }
  }
  return s;
}

Dataset apply_standardization(const Dataset& d, const Standardization& s) {
  if (s.center.size() != d.p() || s.scale.size() != d.p())
    fail(ErrorCode::kSchema, "standardization parameters do not match column count");
  Dataset out = d;
  out.x_ = (d.x().rowwise() - s.center.transpose()).array().rowwise() /
           s.scale.transpose().array();
  out.standardization_ = s;
  return out;
}

Dataset standardize(const Dataset& d) {
  return apply_standardization(d, fit_standardization(d.x()));
}

SplitDataset split(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::kInvalidInput, "train fraction must lie strictly between 0 and 1");

  // Strata: one per class for categorical outcomes, a single one otherwise.
  std::map<int, std::vector<Index>> strata;
  if (d.kind() == OutcomeKind::kClass) {
    const auto& lab = d.classes().label;
    for (Index i = 0; i < d.n(); ++i) strata[lab[i]].push_back(i);
  } else {
    auto& all = strata[0];
    all.resize(static_cast<std::size_t>(d.n()));
    std::iota(all.begin(), all.end(), Index{0});
  }

  RandomStream rng(seed, 0);
  SplitDataset out;
  out.seed = seed;
  for (auto& [label, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto take = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    out.train_rows.insert(out.train_rows.end(), members.begin(),
                          members.begin() + static_cast<std::ptrdiff_t>(take));
    out.test_rows.insert(out.test_rows.end(),
                         members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  if (out.train_rows.size() < 2)
    fail(ErrorCode::kInvalidInput, "split leaves fewer than 2 training rows");
  if (out.test_rows.size() < 2)
    fail(ErrorCode::kInvalidInput, "split leaves fewer than 2 test rows");
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = d.rows(out.train_rows);
  out.test = d.rows(out.test_rows);
  return out;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replication),
                    static_cast<std::uint32_t>(replication >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

Vector RandomStream::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix RandomStream::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

RandomStream rng_stream(std::uint64_t seed, std::uint64_t replication) {
  return RandomStream(seed, replication);
}

}  // namespace precond
