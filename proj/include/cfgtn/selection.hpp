#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfgtn/mixture_fit.hpp"

namespace cfgtn {

/// Maximum-likelihood fit of one family on its own.
struct SingleFit {
  Family family;
  CfgtnModel model;
  FitReport report;
};

/// Archimedean families: bounded Brent search over log alpha. Elliptical
/// families: interior-point search over angles (and nu), started from the
/// normal-score correlation.
SingleFit fit_single_family(LikelihoodWorkspace& ws, Family family, const FitOptions& options = {});

struct SingleComponentResult {
  SingleFit best;
  /// Successful fits in family order.
  std::vector<SingleFit> fits;
  std::vector<std::string> warnings;
};

/// Fits all five families and keeps the AICc minimizer. A family whose fit
/// throws is skipped with a warning; throws ConvergenceError if all fail.
SingleComponentResult fit_single_component_best(LikelihoodWorkspace& ws,
                                                const FitOptions& options = {});

struct SelectionStep {
  /// 0 for the single-component stage, else the number of normal components.
  int k = 0;
  CfgtnModel initial;
  CfgtnModel fitted;
  double loglik = 0.0;
  int df = 0;
  double aicc = 0.0;
  bool accepted = false;
  bool converged = false;
  std::string note;
};

struct StepwiseOptions {
  int max_k = 8;
  /// A step must lower AICc by more than this to count as an improvement.
  double aicc_slack = 1e-6;
  FitOptions fit;
};

struct SelectionResult {
  /// Thresholded AICc-best model over the visited steps.
  CfgtnModel model;
  FitReport report;
  std::vector<SelectionStep> trace;
  SingleComponentResult single;
};

/// Best single-component model, then the full mixture with k = 1, 2, ...
/// normal components, each started from equal weights, until AICc stops
/// improving or max_k is reached.
SelectionResult stepwise_fit(LikelihoodWorkspace& ws, const StepwiseOptions& options = {});

/// Start of the k-normal full mixture: equal weights (normal weights nudged
/// strictly decreasing), copula parameters from `previous`, and an identity
/// correlation for the normal added at this step.
CfgtnModel stepwise_start(const CfgtnModel& previous, int k);

/// Names of the bootstrap parameter table for a frozen structure: packed
/// slots followed by the off-diagonal correlations of elliptical components.
std::vector<std::string> parameter_names(const CfgtnModel& model);
std::vector<double> parameter_values(const CfgtnModel& model);

struct BootstrapOptions {
  int resamples = 200;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  FitOptions fit;
};

struct BootstrapResult {
  std::vector<std::string> names;
  std::vector<double> standard_errors;
  /// One row per successful refit.
  std::vector<std::vector<double>> estimates;
  int resamples = 0;
  int failures = 0;
  int not_converged = 0;
};

/// Refits the template's structure on resampled rows of the sample and
/// reports the per-parameter standard deviation across refits. Throws
/// ConvergenceError if more than half of the refits fail.
BootstrapResult bootstrap_standard_errors(const PseudoSample& sample, const CfgtnModel& templ,
                                          const BootstrapOptions& options = {});

/// Same, with the resampled row indices supplied by the caller.
BootstrapResult bootstrap_from_indices(const PseudoSample& sample, const CfgtnModel& templ,
                                       const std::vector<std::vector<std::size_t>>& index_sets,
                                       const BootstrapOptions& options = {});

}  // namespace cfgtn
