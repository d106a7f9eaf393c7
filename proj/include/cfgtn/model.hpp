#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cfgtn/copula.hpp"
#include "cfgtn/correlation.hpp"
#include "cfgtn/sampling.hpp"

namespace cfgtn {

/// Mixture of Clayton, Frank, Gumbel, Student-t and k Gaussian copulas.
/// A component is present when its weight is positive.
struct CfgtnModel {
  int dimension = 2;
  double w_clayton = 0.0;
  double w_frank = 0.0;
  double w_gumbel = 0.0;
  double w_t = 0.0;
  /// Non-increasing.
  std::vector<double> normal_weights;
  double alpha_clayton = 1.0;
  double alpha_frank = 1.0;
  double alpha_gumbel = 2.0;
  double nu = 10.0;
  AngleVector theta_t;
  std::vector<AngleVector> theta_normals;

  /// Zero weights everywhere, identity correlations.
  static CfgtnModel empty(int p);

  int normal_count() const { return static_cast<int>(normal_weights.size()); }
  double total_weight() const;
  /// Throws DomainError on any violated invariant.
  void validate() const;

  friend bool operator==(const CfgtnModel&, const CfgtnModel&) = default;
};

/// Which components a parameter vector carries.
struct Structure {
  bool clayton = false;
  bool frank = false;
  bool gumbel = false;
  bool t = false;
  int normals = 0;
  int dimension = 2;

  int component_count() const { return clayton + frank + gumbel + t + normals; }
  friend bool operator==(const Structure&, const Structure&) = default;
};

Structure structure_of(const CfgtnModel& model);
/// The full model with k normal components.
Structure full_structure(int p, int normals);

/// Parameter bounds used by the optimizer.
struct ParameterBounds {
  double alpha_clayton_max = 50.0;
  double alpha_frank_max = 50.0;
  double alpha_gumbel_max = 50.0;
  double nu_min = 0.5;
  double nu_max = 2000.0;
};

/// Flat packing of the free parameters of a fixed structure, in the order
/// weights (C, F, G, T, N1..Nk), alphas (C, F, G), nu, theta_T, theta_N1..Nk,
/// with the constraints attached.
struct ParameterVector {
  Structure structure;
  std::vector<double> values;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Sum-to-one row: eq_matrix * beta = eq_rhs.
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  /// Ordering rows w_{j+1} - w_j <= 0: ineq_matrix * beta <= ineq_rhs.
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  std::size_t weight_count = 0;
  /// Supplies fields of absent components on unpack.
  CfgtnModel base;

  std::size_t size() const { return values.size(); }
};

ParameterVector pack(const CfgtnModel& model, const ParameterBounds& bounds = {});
/// Rebuild a model from new slot values for the packed structure.
CfgtnModel unpack(const ParameterVector& layout, std::span<const double> values);
inline CfgtnModel unpack(const ParameterVector& packed) { return unpack(packed, packed.values); }

/// One present component with its Cholesky factor resolved.
struct ModelComponent {
  Family family;
  double weight;
  double alpha = 0.0;
  double dof = 0.0;
  CholeskyFactor factor{};
  /// Index into normal_weights for Gaussian components, else -1.
  int normal_index = -1;
};

/// Present components in the order C, F, G, T, N1..Nk.
std::vector<ModelComponent> model_components(const CfgtnModel& model);

/// Generic mixture representation (true-density evaluation, sampling).
std::vector<CopulaComponent> to_copula_components(const CfgtnModel& model);

/// log c(u) by log-sum-exp over present components.
double mixture_log_density(const CfgtnModel& model, std::span<const double> u);

/// Sum over rows of mixture_log_density; throws NonFiniteError on -inf/NaN.
double log_pseudo_likelihood(const CfgtnModel& model, const PseudoSample& sample);

inline constexpr double kDefaultThreshold = 0.01;

/// Effective parameter count: 2 per kept Archimedean, 2 + p(p-1)/2 for a kept
/// t, 1 + p(p-1)/2 per kept normal, minus 1. Kept means weight > threshold;
/// when nothing passes, the largest-weight component counts as kept.
int degrees_of_freedom(const CfgtnModel& model, double threshold = kDefaultThreshold);

/// -2L + 2 DF + 2 DF (2 DF + 1) / (n - DF - 1). Requires n > DF + 1.
double aicc(double loglik, int df, std::size_t n);

/// Drops components with weight <= threshold (the largest always survives)
/// and renormalizes the rest.
CfgtnModel threshold_components(const CfgtnModel& model, double threshold = kDefaultThreshold);

/// Outcome of one fit.
struct FitReport {
  double loglik = 0.0;
  int df = 0;
  double aicc = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
  bool converged = false;
  double kkt_residual = 0.0;
  /// Some angle sat on the [1e-6, pi - 1e-6] cap after the fit.
  bool angle_cap_hit = false;
};

}  // namespace cfgtn
