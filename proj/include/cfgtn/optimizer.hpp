#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfgtn {

using Objective = std::function<double(std::span<const double>)>;

/// min f(beta) subject to lower <= beta <= upper, eq_matrix beta = eq_rhs,
/// ineq_matrix beta <= ineq_rhs. Bounds may be infinite; empty matrices
/// mean no constraints of that kind.
struct NlpProblem {
  Objective objective;
  std::vector<double> lower;
  std::vector<double> upper;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;

  std::size_t dimension() const { return lower.size(); }
};

struct SolverSettings {
  double mu_initial = 0.1;
  double mu_shrink = 0.2;
  /// Outer loop ends once mu drops below this and the KKT residual is small.
  double mu_final = 1e-9;
  double kkt_tolerance = 1e-6;
  double constraint_tolerance = 1e-8;
  int max_outer = 30;
  int max_inner = 200;
  double fd_step = 6e-6;
  /// Keep per-iteration barrier values in the report.
  bool record_trace = false;

  void validate() const;
};

/// Primal-dual iterate of a barrier subproblem.
struct BarrierState {
  std::vector<double> beta;
  /// One per inequality row (bounds first, then general rows); all positive.
  Eigen::VectorXd slacks;
  Eigen::VectorXd ineq_multipliers;
  Eigen::VectorXd eq_multipliers;
  double mu = 0.0;
};

enum class StepKind { Direct, ConjugateGradient };

struct IterationRecord {
  int outer;
  double mu;
  double barrier_objective;
  double objective;
  StepKind step;
};

struct IpReport {
  int iterations = 0;
  int outer_iterations = 0;
  int direct_steps = 0;
  int cg_steps = 0;
  long objective_evaluations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
  double wall_time = 0.0;
  /// "converged", "iteration budget exhausted" or "line search failed".
  std::string status;
  std::vector<IterationRecord> trace;
};

struct IpResult {
  std::vector<double> beta;
  IpReport report;
  BarrierState state;
};

/// Log-barrier interior-point method. Each barrier subproblem is solved by
/// Newton steps on its primal-dual KKT system with a damped-BFGS Hessian of f
/// (direct step, Armijo line search on the barrier objective); when the
/// direct step is unusable, a projected Steihaug-CG trust-region step is
/// taken instead. Gradients are central finite differences.
///
/// Throws InfeasibleStartError if beta0 is not strictly inside the bounds and
/// inequalities or violates the equalities by more than constraint_tolerance.
/// Budget exhaustion and line-search failure return the last feasible
/// iterate with converged = false.
IpResult interior_point_minimize(const NlpProblem& problem, std::span<const double> beta0,
                                 const SolverSettings& settings = {});

/// Central differences with per-slot step fd_step * max(1, |beta_i|). A
/// non-finite probe falls back to a one-sided difference; throws
/// NonFiniteError when both sides are non-finite.
std::vector<double> finite_difference_gradient(const Objective& objective,
                                               std::span<const double> beta, double fd_step);

}  // namespace cfgtn
