#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "cfgtn/correlation.hpp"

namespace cfgtn {

enum class Family { Clayton, Frank, Gumbel, StudentT, Gaussian };

std::string_view family_name(Family family);
/// Accepts "clayton", "frank", "gumbel", "t", "normal" (and "gaussian").
Family family_from_name(std::string_view name);
constexpr bool is_archimedean(Family f) {
  return f == Family::Clayton || f == Family::Frank || f == Family::Gumbel;
}

/// Coordinates are clamped to [kUnitEpsilon, 1 - kUnitEpsilon] before evaluation.
inline constexpr double kUnitEpsilon = 1e-10;

/// Throws DomainError unless every coordinate is in (0, 1) and p >= 2; returns
/// the clamped point.
std::vector<double> checked_unit_point(std::span<const double> u);

/// Throws DomainError when alpha is outside the family's parameter space.
void check_archimedean_param(Family family, double alpha);

// Log copula densities. All are exact closed forms or exact derivative
// recursions, evaluated in log space.
double clayton_log_density(std::span<const double> u, double alpha);
double frank_log_density(std::span<const double> u, double alpha);
double gumbel_log_density(std::span<const double> u, double alpha);
double gaussian_log_density(std::span<const double> u, const CorrelationMatrix& R);
double gaussian_log_density(std::span<const double> u, const CholeskyFactor& L);
double student_t_log_density(std::span<const double> u, const CorrelationMatrix& R, double nu);
double student_t_log_density(std::span<const double> u, const CholeskyFactor& L, double nu);

/// Inverse Kendall-tau maps. For elliptical families the result is the
/// correlation rho = sin(pi tau / 2). Requires 0 < tau < 1.
double kendall_tau_to_param(Family family, double tau);
/// Forward maps tau(parameter).
double param_to_kendall_tau(Family family, double param);

/// Kernels on pre-transformed coordinates. No argument checking; these are
/// the shared evaluation path for the public functions and the likelihood.
namespace kernel {

double clayton(std::span<const double> log_u, double alpha);
/// log of the positive polynomial coefficients (k = 1..p) used by the Frank
/// and Gumbel kernels; compute once per parameter value, not per row.
std::vector<double> frank_log_coefficients(int p);
std::vector<double> gumbel_log_coefficients(int p, double alpha);
double frank(std::span<const double> u, double alpha, std::span<const double> log_coeffs);
double gumbel(std::span<const double> log_u, std::span<const double> log_neg_log_u, double alpha,
              std::span<const double> log_coeffs);
/// z = normal scores.
double gaussian(std::span<const double> z, const CholeskyFactor& L, double half_log_det);
/// t = Student-t scores, sum_log1p = sum_j log1p(t_j^2 / nu),
/// log_constant = t_log_constant(nu, p).
double student_t(std::span<const double> t, double sum_log1p, const CholeskyFactor& L,
                 double half_log_det, double nu, double log_constant);
double t_log_constant(double nu, int p);

/// Positive coefficients e_k (k = 0..p) with
/// |d^p/dt^p exp(-t^a)| = exp(-t^a) t^{-p} sum_k e_k t^{a k}.
std::vector<double> gumbel_coefficients(int p, double a);
/// Positive coefficients c_k (k = 0..p) with Li_{1-p}(y) = sum_k c_k x^k, x = y / (1 - y).
std::vector<double> frank_coefficients(int p);

}  // namespace kernel

/// One parametric copula with its mixture weight.
struct CopulaComponent {
  Family family = Family::Gaussian;
  double weight = 1.0;
  /// Archimedean parameter.
  double alpha = 1.0;
  /// Student-t degrees of freedom.
  double dof = 0.0;
  /// Elliptical correlation.
  CorrelationMatrix correlation{};
};

/// Weighted mixture of arbitrary copula components (used for true densities
/// in simulations, where e.g. two t components may appear).
class MixtureDensity {
 public:
  explicit MixtureDensity(std::vector<CopulaComponent> components);

  int dimension() const { return p_; }
  const std::vector<CopulaComponent>& components() const { return components_; }
  double log_density(std::span<const double> u) const;
  double density(std::span<const double> u) const;

 private:
  std::vector<CopulaComponent> components_;
  std::vector<CholeskyFactor> factors_;
  int p_ = 0;
};

}  // namespace cfgtn
