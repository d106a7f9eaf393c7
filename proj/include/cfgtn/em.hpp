#pragma once

#include <vector>

#include "cfgtn/likelihood.hpp"
#include "cfgtn/mixture_fit.hpp"

namespace cfgtn {

struct EmOptions {
  int max_iter = 500;
  /// Stop early once an iteration gains less than this; 0 runs all iterations.
  double tolerance = 0.0;
  /// Iteration counts at which to keep a copy of the current model.
  std::vector<int> snapshots;
  FitOptions fit;
};

struct EmSnapshot {
  int iteration;
  CfgtnModel model;
  double loglik;
  /// Wall time from the start of em_fit.
  double seconds;
};

struct EmResult {
  /// Thresholded final model; the report refers to it.
  CfgtnModel model;
  CfgtnModel raw;
  FitReport report;
  /// Log-likelihood of the start followed by one entry per iteration.
  std::vector<double> loglik_trace;
  std::vector<EmSnapshot> snapshots;
  /// Largest drop between consecutive trace entries (0 when monotone).
  double max_decrease = 0.0;
};

/// Generalized EM for the mixture. Weights are mean responsibilities.
/// Archimedean parameters and nu maximize the responsibility-weighted
/// log-likelihood by Brent search; elliptical correlations are
/// responsibility-weighted score correlations. A component update that does
/// not raise its weighted log-likelihood is rejected, so the mixture
/// log-likelihood never decreases.
EmResult em_fit(LikelihoodWorkspace& ws, const CfgtnModel& model0, const EmOptions& options = {});

/// Tolerance for the ascent check: a drop larger than this is a defect.
inline constexpr double kEmAscentSlack = 1e-8;

}  // namespace cfgtn
