#pragma once

#include "cfgtn/likelihood.hpp"
#include "cfgtn/model.hpp"
#include "cfgtn/optimizer.hpp"

namespace cfgtn {

struct FitOptions {
  SolverSettings solver;
  ParameterBounds bounds;
  double threshold = kDefaultThreshold;
};

struct MixtureFit {
  /// Thresholded model; loglik, DF and AICc in the report refer to it.
  CfgtnModel model;
  /// Optimizer output before thresholding.
  CfgtnModel raw;
  FitReport report;
  IpReport solver;
};

/// Pushes a feasible model strictly inside the optimizer's feasible region:
/// weights off zero, normal weights strictly decreasing, scalar parameters
/// and angles off their bounds. Components with zero weight stay absent.
CfgtnModel interior_start(const CfgtnModel& model, const ParameterBounds& bounds = {});

/// Maximizes the pseudo log-likelihood over the parameters of the start
/// model's structure with the interior-point solver.
MixtureFit fit_mixture(LikelihoodWorkspace& ws, const CfgtnModel& start,
                       const FitOptions& options = {});

/// Fills loglik, DF and AICc for a given model on the workspace sample.
FitReport score_model(LikelihoodWorkspace& ws, const CfgtnModel& model,
                      double threshold = kDefaultThreshold);

/// True when an angle lies within 10 * kAngleFloor of either end of (0, pi).
bool angles_at_cap(const CfgtnModel& model);

}  // namespace cfgtn
