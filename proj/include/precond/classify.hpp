#pragma once

#include "precond/core.hpp"

namespace precond {

/// Nearest shrunken centroid classifier.
struct NscModel {
  int num_classes = 0;
  Index p = 0;
  Matrix centroids;           // G x p class means
  Vector overall_centroid;    // p
  Vector pooled_sd;           // p, within-class s_j
  double s0 = 0.0;            // median of pooled_sd
  double delta = 0.0;
  Vector mk;                  // G, sqrt(1/n_k - 1/n)
  Matrix deviations;          // G x p, standardized d_kj before shrinkage
  Matrix shrunken_centroids;  // G x p
  Vector priors;              // G
};

double soft_threshold(double value, double threshold);

/// Throws kInvalidClass when a class has fewer than two samples.
NscModel nsc_fit(const Dataset& d, double delta);
/// Picks delta from a 30-point grid on [0, max |d_kj|] by training cross-entropy.
NscModel nsc_fit_auto(const Dataset& d);

/// n x G class probabilities; rows sum to 1.
Matrix nsc_predict_proba(const NscModel& m, const Dataset& d);

/// log(p / (1 - p)) of class 2 with p clipped to [clip, 1 - clip].
Vector logit_precondition(const Matrix& probs, double clip = 1e-6);

}  // namespace precond
