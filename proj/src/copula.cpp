#include "cfgtn/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "cfgtn/errors.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

using special::log_expm1;

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Clayton: return "clayton";
    case Family::Frank: return "frank";
    case Family::Gumbel: return "gumbel";
    case Family::StudentT: return "t";
    case Family::Gaussian: return "normal";
  }
  return "unknown";
}

Family family_from_name(std::string_view name) {
  if (name == "clayton") return Family::Clayton;
  if (name == "frank") return Family::Frank;
  if (name == "gumbel") return Family::Gumbel;
  if (name == "t" || name == "student_t") return Family::StudentT;
  if (name == "normal" || name == "gaussian") return Family::Gaussian;
  throw DomainError("unknown copula family '" + std::string(name) + "'");
}

std::vector<double> checked_unit_point(std::span<const double> u) {
  if (u.size() < 2) throw DomainError("copula dimension must be at least 2");
  std::vector<double> out(u.begin(), u.end());
  for (double& x : out) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("coordinate outside (0,1)");
    x = std::clamp(x, kUnitEpsilon, 1.0 - kUnitEpsilon);
  }
  return out;
}

void check_archimedean_param(Family family, double alpha) {
  switch (family) {
    case Family::Clayton:
      if (!(alpha > 0.0)) throw DomainError("Clayton alpha must be > 0");
      return;
    case Family::Frank:
      if (!(alpha > 0.0)) throw DomainError("Frank alpha must be > 0");
      return;
    case Family::Gumbel:
      if (!(alpha >= 1.0)) throw DomainError("Gumbel alpha must be >= 1");
      return;
    default:
      throw DomainError("not an Archimedean family");
  }
}

namespace kernel {

namespace {

// Small fixed-capacity scratch buffer; densities are only evaluated for
// moderate p but the fallback keeps arbitrary p correct.
class Scratch {
 public:
  explicit Scratch(std::size_t n) : n_(n) {
    if (n > stack_.size()) heap_.resize(n);
  }
  double* data() { return n_ > stack_.size() ? heap_.data() : stack_.data(); }

 private:
  std::array<double, 16> stack_{};
  std::vector<double> heap_;
  std::size_t n_;
};

// Solves L y = b (forward substitution) and returns y'y.
double forward_quadratic(std::span<const double> b, const Eigen::MatrixXd& L) {
  const std::size_t p = b.size();
  Scratch scratch(p);
  double* y = scratch.data();
  double q = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= L(i, j) * y[j];
    y[i] = s / L(i, i);
    q += y[i] * y[i];
  }
  return q;
}

}  // namespace

double clayton(std::span<const double> log_u, double alpha) {
  const std::size_t p = log_u.size();
  double s = 0.0;
  for (std::size_t k = 1; k < p; ++k) s += std::log1p(static_cast<double>(k) * alpha);
  double sum_log_u = 0.0;
  double m = 0.0;
  for (double lu : log_u) {
    sum_log_u += lu;
    m = std::max(m, -alpha * lu);
  }
  // log(sum_j u_j^-alpha - p + 1)
  double log_a;
  if (m < 50.0) {
    double acc = 0.0;
    for (double lu : log_u) acc += std::expm1(-alpha * lu);
    log_a = std::log1p(acc);
  } else {
    double acc = 0.0;
    for (double lu : log_u) acc += std::exp(-alpha * lu - m);
    log_a = m + std::log(acc - static_cast<double>(p - 1) * std::exp(-m));
  }
  return s - (alpha + 1.0) * sum_log_u - (static_cast<double>(p) + 1.0 / alpha) * log_a;
}

std::vector<double> frank_coefficients(int p) {
  std::vector<double> c(static_cast<std::size_t>(p) + 1, 0.0);
  c[1] = 1.0;  // Li_0(y) = x
  for (int d = 1; d < p; ++d) {
    std::vector<double> next(c.size(), 0.0);
    for (int k = 1; k <= d; ++k) {
      next[k] += k * c[k];
      next[k + 1] += k * c[k];
    }
    c = std::move(next);
  }
  return c;
}

std::vector<double> frank_log_coefficients(int p) {
  const auto c = frank_coefficients(p);
  std::vector<double> out(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) out[k - 1] = std::log(c[k]);
  return out;
}

double frank(std::span<const double> u, double alpha, std::span<const double> log_coeffs) {
  const int p = static_cast<int>(u.size());
  const double log_den = special::log1mexp(alpha);
  double log_y = -static_cast<double>(p - 1) * log_den;
  double sum_log_dphi = 0.0;
  const double log_alpha = std::log(alpha);
  for (double x : u) {
    log_y += special::log1mexp(alpha * x);
    sum_log_dphi += log_alpha - log_expm1(alpha * x);
  }
  const double log_1my = special::log1mexp(-log_y);
  const double log_x = log_y - log_1my;

  Scratch scratch(static_cast<std::size_t>(p));
  double* terms = scratch.data();
  for (int k = 1; k <= p; ++k) terms[k - 1] = log_coeffs[k - 1] + k * log_x;
  const double log_psi = -log_alpha + special::log_sum_exp({terms, static_cast<std::size_t>(p)});
  return log_psi + sum_log_dphi;
}

std::vector<double> gumbel_coefficients(int p, double a) {
  std::vector<double> e(static_cast<std::size_t>(p) + 1, 0.0);
  e[0] = 1.0;
  for (int d = 0; d < p; ++d) {
    std::vector<double> next(e.size(), 0.0);
    for (int k = 1; k <= d + 1; ++k) {
      next[k] = (static_cast<double>(d) - a * k) * e[k] + a * e[k - 1];
    }
    e = std::move(next);
  }
  return e;
}

std::vector<double> gumbel_log_coefficients(int p, double alpha) {
  const auto e = gumbel_coefficients(p, 1.0 / alpha);
  std::vector<double> out(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) {
    out[k - 1] = e[k] > 0.0 ? std::log(e[k]) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

double gumbel(std::span<const double> log_u, std::span<const double> log_neg_log_u,
              double alpha, std::span<const double> log_coeffs) {
  const int p = static_cast<int>(log_u.size());
  const double a = 1.0 / alpha;
  Scratch scratch(static_cast<std::size_t>(p));
  double* terms = scratch.data();
  double sum_log_dphi = 0.0;
  const double log_alpha = std::log(alpha);
  for (int j = 0; j < p; ++j) {
    terms[j] = alpha * log_neg_log_u[j];
    sum_log_dphi += log_alpha + (alpha - 1.0) * log_neg_log_u[j] - log_u[j];
  }
  const double log_t = special::log_sum_exp({terms, static_cast<std::size_t>(p)});
  for (int k = 1; k <= p; ++k) terms[k - 1] = log_coeffs[k - 1] + a * k * log_t;
  const double log_poly = special::log_sum_exp({terms, static_cast<std::size_t>(p)});
  return -std::exp(a * log_t) - p * log_t + log_poly + sum_log_dphi;
}

double gaussian(std::span<const double> z, const CholeskyFactor& L, double half_log_det) {
  double zz = 0.0;
  for (double v : z) zz += v * v;
  const double q = forward_quadratic(z, L.matrix());
  return -half_log_det - 0.5 * (q - zz);
}

double t_log_constant(double nu, int p) {
  return std::lgamma(0.5 * (nu + p)) + (p - 1) * std::lgamma(0.5 * nu) -
         p * std::lgamma(0.5 * (nu + 1.0));
}

double student_t(std::span<const double> t, double sum_log1p, const CholeskyFactor& L,
                 double half_log_det, double nu, double log_constant) {
  const double p = static_cast<double>(t.size());
  const double q = forward_quadratic(t, L.matrix());
  return log_constant - half_log_det - 0.5 * (nu + p) * std::log1p(q / nu) +
         0.5 * (nu + 1.0) * sum_log1p;
}

}  // namespace kernel

double clayton_log_density(std::span<const double> u, double alpha) {
  check_archimedean_param(Family::Clayton, alpha);
  auto x = checked_unit_point(u);
  for (double& v : x) v = std::log(v);
  return kernel::clayton(x, alpha);
}

double frank_log_density(std::span<const double> u, double alpha) {
  check_archimedean_param(Family::Frank, alpha);
  const auto x = checked_unit_point(u);
  return kernel::frank(x, alpha, kernel::frank_log_coefficients(static_cast<int>(x.size())));
}

double gumbel_log_density(std::span<const double> u, double alpha) {
  check_archimedean_param(Family::Gumbel, alpha);
  auto log_u = checked_unit_point(u);
  std::vector<double> loglog(log_u.size());
  for (std::size_t j = 0; j < log_u.size(); ++j) {
    log_u[j] = std::log(log_u[j]);
    loglog[j] = std::log(-log_u[j]);
  }
  return kernel::gumbel(log_u, loglog, alpha,
                        kernel::gumbel_log_coefficients(static_cast<int>(log_u.size()), alpha));
}

namespace {

CholeskyFactor checked_factor(const CorrelationMatrix& R) {
  if (min_eigenvalue(R) < 1e-10) {
    throw SingularMatrixError("correlation matrix is numerically rank-deficient");
  }
  return correlation_to_cholesky(R);
}

void check_dimension(std::span<const double> u, const CholeskyFactor& L) {
  if (static_cast<int>(u.size()) != L.dimension()) {
    throw DomainError("point dimension does not match correlation dimension");
  }
}

}  // namespace

double gaussian_log_density(std::span<const double> u, const CholeskyFactor& L) {
  check_dimension(u, L);
  auto z = checked_unit_point(u);
  for (double& v : z) v = special::normal_quantile(v);
  return kernel::gaussian(z, L, L.half_log_det());
}

double gaussian_log_density(std::span<const double> u, const CorrelationMatrix& R) {
  return gaussian_log_density(u, checked_factor(R));
}

double student_t_log_density(std::span<const double> u, const CholeskyFactor& L, double nu) {
  if (!(nu > 0.0)) throw DomainError("t copula degrees of freedom must be > 0");
  check_dimension(u, L);
  auto t = checked_unit_point(u);
  double sum_log1p = 0.0;
  for (double& v : t) {
    v = special::t_quantile(v, nu);
    sum_log1p += std::log1p(v * v / nu);
  }
  const int p = static_cast<int>(t.size());
  return kernel::student_t(t, sum_log1p, L, L.half_log_det(), nu, kernel::t_log_constant(nu, p));
}

double student_t_log_density(std::span<const double> u, const CorrelationMatrix& R, double nu) {
  if (!(nu > 0.0)) throw DomainError("t copula degrees of freedom must be > 0");
  return student_t_log_density(u, checked_factor(R), nu);
}

namespace {

double frank_tau(double alpha) {
  // tau = 1 - 4/alpha * (1 - D1(alpha)), with 1 - D1 integrated directly to
  // avoid cancellation at small alpha.
  if (alpha < 1e-4) return alpha / 9.0 - alpha * alpha * alpha / 900.0;
  const double one_minus_d1 = 1.0 - special::debye1(alpha);
  return 1.0 - 4.0 / alpha * one_minus_d1;
}

}  // namespace

double param_to_kendall_tau(Family family, double param) {
  switch (family) {
    case Family::Clayton:
      check_archimedean_param(family, param);
      return param / (param + 2.0);
    case Family::Gumbel:
      check_archimedean_param(family, param);
      return 1.0 - 1.0 / param;
    case Family::Frank:
      check_archimedean_param(family, param);
      return frank_tau(param);
    case Family::StudentT:
    case Family::Gaussian:
      if (!(param >= -1.0 && param <= 1.0)) throw DomainError("correlation outside [-1,1]");
      return 2.0 / std::numbers::pi * std::asin(param);
  }
  throw DomainError("unknown family");
}

double kendall_tau_to_param(Family family, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("Kendall tau must lie in (0,1)");
  switch (family) {
    case Family::Clayton: return 2.0 * tau / (1.0 - tau);
    case Family::Gumbel: return 1.0 / (1.0 - tau);
    case Family::StudentT:
    case Family::Gaussian: return std::sin(0.5 * std::numbers::pi * tau);
    case Family::Frank: {
      auto f = [tau](double a) { return frank_tau(a) - tau; };
      // tau(alpha) ~ alpha / 9 near zero, so 8 tau lies below the root.
      const double lo = std::min(8.0 * tau, 1e-3);
      double hi = 10.0;
      while (f(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw ConvergenceError("Frank tau inversion: no bracket");
      }
      std::uintmax_t max_iter = 200;
      auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)); };
      const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
      if (max_iter >= 200) throw ConvergenceError("Frank tau inversion did not converge");
      return 0.5 * (a + b);
    }
  }
  throw DomainError("unknown family");
}

MixtureDensity::MixtureDensity(std::vector<CopulaComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0)) throw DomainError("mixture weights must be nonnegative");
    total += c.weight;
    if (is_archimedean(c.family)) {
      check_archimedean_param(c.family, c.alpha);
      factors_.emplace_back();
    } else {
      if (c.family == Family::StudentT && !(c.dof > 0.0)) {
        throw DomainError("t component needs positive dof");
      }
      factors_.push_back(correlation_to_cholesky(c.correlation));
      if (p_ == 0) p_ = c.correlation.dimension();
      if (p_ != c.correlation.dimension()) throw DomainError("component dimensions differ");
    }
  }
  if (std::abs(total - 1.0) > 1e-8) throw DomainError("mixture weights must sum to 1");
}

double MixtureDensity::log_density(std::span<const double> u) const {
  if (p_ != 0 && static_cast<int>(u.size()) != p_) throw DomainError("dimension mismatch");
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (c.weight <= 0.0) continue;
    double lc = 0.0;
    switch (c.family) {
      case Family::Clayton: lc = clayton_log_density(u, c.alpha); break;
      case Family::Frank: lc = frank_log_density(u, c.alpha); break;
      case Family::Gumbel: lc = gumbel_log_density(u, c.alpha); break;
      case Family::Gaussian: lc = gaussian_log_density(u, factors_[i]); break;
      case Family::StudentT: lc = student_t_log_density(u, factors_[i], c.dof); break;
    }
    terms.push_back(std::log(c.weight) + lc);
  }
  return special::log_sum_exp(terms);
}

double MixtureDensity::density(std::span<const double> u) const {
  return std::exp(log_density(u));
}

}  // namespace cfgtn
