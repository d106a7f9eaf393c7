#pragma once

#include <span>

namespace cfgtn::special {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile. Acklam's rational approximation polished by one
/// Halley step against erfc; relative accuracy near machine precision.
double normal_quantile(double u);

/// Student-t CDF with real-valued degrees of freedom.
double t_cdf(double x, double nu);

/// Student-t quantile via the inverse regularized incomplete beta function.
double t_quantile(double u, double nu);

/// Log density of the univariate Student-t at x.
double t_log_pdf(double x, double nu);

/// First Debye function D1(x) = (1/x) * int_0^x t / (e^t - 1) dt.
double debye1(double x);

/// log(exp(x) - 1) without overflow for large x.
/// log(1 - e^-t) for t > 0, accurate at both ends.
double log1mexp(double t);
double log_expm1(double x);

/// log(sum_i exp(v_i)); returns -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

}  // namespace cfgtn::special
