#pragma once

#include <optional>

#include "precond/core.hpp"

namespace precond {

enum class ScoreKind { kPearson, kCoxScore, kClassScore };

std::string_view score_kind_name(ScoreKind kind) noexcept;

/// Marginal association of each feature with the outcome. Ineligible
/// features (constant columns, zero Cox information) carry score 0.
struct ScreenScores {
  Vector score;
  std::vector<bool> eligible;
  ScoreKind kind = ScoreKind::kPearson;
};

/// Exactly one of `threshold` (|score| >= tau) or `top_count` (m largest) is set.
struct ScreenConfig {
  std::optional<double> threshold;
  std::optional<Index> top_count;

  static ScreenConfig absolute(double tau);
  static ScreenConfig top(Index m);
  /// top-m with m = min(p, max(20, ceil(n / 2))).
  static ScreenConfig default_for(Index n, Index p);
};

/// Sample correlation of each column with y. Requires a continuous outcome.
ScreenScores pearson_scores(const Dataset& d);
/// Pearson for continuous outcomes, Cox z for survival, pooled two-sample t for two classes.
ScreenScores association_scores(const Dataset& d);
/// Throws kEmptyScreen when nothing survives.
FeatureSet select(const ScreenScores& scores, const ScreenConfig& cfg);

}  // namespace precond
