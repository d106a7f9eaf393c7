#pragma once

#include <span>
#include <vector>

#include "cfgtn/sampling.hpp"

namespace cfgtn {

/// Raw data: n >= 10 rows, no missing entries.
using RawSample = SampleMatrix;

/// Column-wise rescaled empirical CDF: rank / (n + 1), ties by average rank.
PseudoSample pseudo_observations(const RawSample& x);

/// Average ranks (1-based) of a column.
std::vector<double> average_ranks(std::span<const double> column);

/// Location-scale Student-t marginal.
struct TMarginalFit {
  double location = 0.0;
  double scale = 1.0;
  double dof = 10.0;
  double loglik = 0.0;
  int iterations = 0;
};

inline constexpr double kMarginalMaxDof = 1e4;

/// Maximum likelihood fit over (location, log scale, log dof) by damped
/// Newton with analytic gradient; dof is capped at kMarginalMaxDof.
/// Throws InputError for fewer than 10 values or a constant column,
/// ConvergenceError when the iteration cap is reached.
TMarginalFit fit_t_marginal(std::span<const double> x);

/// Log-likelihood of the location-scale t and its gradient with respect to
/// (location, log scale, log dof).
double t_marginal_loglik(std::span<const double> x, double location, double scale, double dof,
                         double* gradient = nullptr);

/// u = T_dof((x - location) / scale), clamped to [1e-10, 1 - 1e-10].
std::vector<double> transform_with_t(std::span<const double> x, const TMarginalFit& fit);

/// Inverse of transform_with_t.
double t_marginal_quantile(double u, const TMarginalFit& fit);

}  // namespace cfgtn
