#include "cfgtn/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cfgtn/errors.hpp"

namespace cfgtn::special {

namespace {
// Stay in double precision; the default policy promotes to long double,
// which dominates likelihood time when t scores are refreshed.
using DoublePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
using StudentT = boost::math::students_t_distribution<double, DoublePolicy>;
}  // namespace

namespace {

// Acklam's coefficients for the central and tail regions.
constexpr double kA[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                         -2.759285104469687e+02, 1.383577518672690e+02,
                         -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                         -1.556989798598866e+02, 6.680131188771972e+01,
                         -1.328068155288572e+01};
constexpr double kC[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                         -2.400758277161838e+00, -2.549732539343734e+00,
                         4.374664141464968e+00,  2.938163982698783e+00};
constexpr double kD[] = {7.784695709041462e-03, 3.224671290700398e-01,
                         2.445134137142996e+00, 3.754408661907416e+00};
constexpr double kLowBreak = 0.02425;

// Lower-half quantile, u in (0, 0.5].
double lower_quantile(double u) {
  double x;
  if (u < kLowBreak) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
        ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  } else {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
        (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
  }
  // Halley refinement.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double w = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - w / (1.0 + 0.5 * x * w);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: argument outside [0,1]");
  }
  if (u <= 0.5) return lower_quantile(u);
  return -lower_quantile(1.0 - u);
}

double t_cdf(double x, double nu) {
  if (!(nu > 0.0)) throw DomainError("t_cdf: degrees of freedom must be positive");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  StudentT dist(nu);
  return boost::math::cdf(dist, x);
}

double t_quantile(double u, double nu) {
  if (!(nu > 0.0)) throw DomainError("t_quantile: degrees of freedom must be positive");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("t_quantile: argument outside (0,1)");
  StudentT dist(nu);
  return boost::math::quantile(dist, u);
}

double t_log_pdf(double x, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  auto integrand = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, x, 12, 1e-14);
  return integral / x;
}

double log1mexp(double t) {
  return t > std::numbers::ln2 ? std::log1p(-std::exp(-t)) : std::log(-std::expm1(-t));
}

double log_expm1(double x) {
  if (x > 30.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace cfgtn::special
