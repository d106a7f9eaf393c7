#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfgtn/em.hpp"
#include "cfgtn/selection.hpp"

namespace cfgtn {

/// Equally spaced lattice on [0.01, 0.99]^p with M points per axis.
class EvaluationGrid {
 public:
  EvaluationGrid(int dimension, int points_per_axis);

  int dimension() const { return p_; }
  int points_per_axis() const { return m_; }
  /// Axis value i in [0, M): 0.01 + i * 0.98 / (M - 1).
  double axis(int i) const;
  std::size_t size() const;
  /// Calls visit(point) for every grid point in lexicographic order.
  void for_each(const std::function<void(std::span<const double>)>& visit) const;

 private:
  int p_;
  int m_;
};

/// Points per axis used for dimension p: 100, 50, 25 for p = 2, 3, 4 and 10
/// beyond.
int default_grid_points(int p);

using DensityFunction = std::function<double(std::span<const double>)>;

/// Mean of |estimate - truth| over every grid point. Throws NonFiniteError
/// naming the first point where either value is not finite.
double mae_on_grid(const DensityFunction& estimate, const DensityFunction& truth,
                   const EvaluationGrid& grid);

DensityFunction model_density(const CfgtnModel& model);
DensityFunction true_density(const ScenarioSpec& spec);

/// Compact structure label of a model, e.g. "C+G+T+N2".
std::string structure_label(const CfgtnModel& model);

struct ReplicationRecord {
  std::string scenario;
  double tau = 0.0;
  int p = 2;
  std::size_t n = 0;
  int rep = 0;
  double mae = 0.0;
  double seconds = 0.0;
  std::string structure;
  /// Empty on success.
  std::string error;
};

struct SuiteConfig {
  std::vector<std::string> scenarios;
  std::vector<double> taus;
  std::vector<std::size_t> sizes;
  std::vector<int> dims;
  int replications = 50;
  std::uint64_t seed = 42;
  /// Replace simulated uniforms by their pseudo-observations before fitting.
  bool rerank = false;
  unsigned threads = 0;
  /// Points per axis; 0 picks default_grid_points(p).
  int grid_points = 0;
  StepwiseOptions stepwise;
};

/// Seed of the data for one cell and replication. Depends only on the cell
/// values, not on the cell's position in the configuration.
std::uint64_t replication_seed(std::uint64_t seed, const std::string& scenario, double tau,
                               int p, std::size_t n, int rep);

/// Simulate, fit by stepwise selection, score against the true density.
ReplicationRecord run_replication(const ScenarioSpec& spec, double tau, int rep,
                                  std::uint64_t seed, const SuiteConfig& config);

/// Every (scenario, tau, p, n, replication) cell, ordered by cell then
/// replication index. Failures are recorded in the error field.
std::vector<ReplicationRecord> run_scenario_suite(const SuiteConfig& config);

void write_replication_csv(std::ostream& out, const std::vector<ReplicationRecord>& records);

/// Estimates of the three-component reference mixture
/// (Clayton 0.40 alpha 3, Gumbel 0.25 alpha 10, normal 0.35 rho 0.5).
struct ComparisonRow {
  int rep = 0;
  std::string algorithm;
  double loglik = 0.0;
  double seconds = 0.0;
  double w_clayton = 0.0;
  double w_gumbel = 0.0;
  double w_normal = 0.0;
  double alpha_clayton = 0.0;
  double alpha_gumbel = 0.0;
  double rho = 0.0;
  bool converged = false;
};

struct ComparisonSummary {
  std::string algorithm;
  int replications = 0;
  double mean_loglik = 0.0;
  double mean_seconds = 0.0;
  double rmse_w_clayton = 0.0;
  double rmse_w_gumbel = 0.0;
  double rmse_w_normal = 0.0;
  double rmse_alpha_clayton = 0.0;
  double rmse_alpha_gumbel = 0.0;
  double rmse_rho = 0.0;
};

struct CompareConfig {
  int replications = 20;
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  std::vector<int> em_iterations{50, 100, 500};
  unsigned threads = 0;
  FitOptions fit;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  /// "IP" first, then "EM-<iterations>" in configuration order.
  std::vector<ComparisonSummary> summary;
  std::vector<std::string> errors;
};

/// Fits the reference mixture structure by interior point and by EM from the
/// same start: equal weights and single-family MLEs for the copula parameters.
ComparisonResult compare_em_ip(const CompareConfig& config);

void write_comparison_csv(std::ostream& out, const ComparisonResult& result);
void write_comparison_rows_csv(std::ostream& out, const ComparisonResult& result);

}  // namespace cfgtn
