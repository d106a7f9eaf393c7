#pragma once
// Reference computations that share no code with the library: closed-form
// CDFs differentiated numerically, textbook density formulas evaluated in
// long double, and plain quadrature.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace oracle {

using Point = std::vector<long double>;
using Cdf = std::function<long double(const Point&)>;

inline long double clayton_cdf(const Point& u, long double a) {
  long double s = 1.0L - static_cast<long double>(u.size());
  for (auto v : u) s += std::pow(v, -a);
  return std::pow(s, -1.0L / a);
}

inline long double frank_cdf(const Point& u, long double a) {
  long double prod = 1.0L;
  for (auto v : u) prod *= std::expm1(-a * v);
  const long double den = std::pow(std::expm1(-a), static_cast<long double>(u.size() - 1));
  return -std::log1p(prod / den) / a;
}

inline long double gumbel_cdf(const Point& u, long double a) {
  long double s = 0.0L;
  for (auto v : u) s += std::pow(-std::log(v), a);
  return std::exp(-std::pow(s, 1.0L / a));
}

// d^p C / du_1 ... du_p by central differences over the 2^p corners of a cube
// of half-width h, with one Richardson step.
inline long double mixed_partial(const Cdf& cdf, const Point& u, long double h = 1e-3L) {
  const std::size_t p = u.size();
  auto raw = [&](long double step) {
    long double sum = 0.0L;
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
      Point x = u;
      int minus = 0;
      for (std::size_t j = 0; j < p; ++j) {
        if (mask & (1u << j)) {
          x[j] += step;
        } else {
          x[j] -= step;
          ++minus;
        }
      }
      sum += (minus % 2 ? -1.0L : 1.0L) * cdf(x);
    }
    return sum / std::pow(2.0L * step, static_cast<long double>(p));
  };
  return (4.0L * raw(h / 2) - raw(h)) / 3.0L;
}

// Truncated multivariate jet: coefficients indexed by subsets of p unit
// directions with e_j^2 = 0, so evaluating a closed-form CDF on jets yields
// its exact mixed partial d^p C / du_1 ... du_p in the top coefficient.
struct Jet {
  std::vector<long double> c;  // c[mask]

  static Jet constant(int p, long double v) {
    Jet j{std::vector<long double>(std::size_t{1} << p, 0.0L)};
    j.c[0] = v;
    return j;
  }
  static Jet variable(int p, int k, long double v) {
    Jet j = constant(p, v);
    j.c[std::size_t{1} << k] = 1.0L;
    return j;
  }
  long double value() const { return c[0]; }
  long double top() const { return c.back(); }

  friend Jet operator+(Jet a, const Jet& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] += b.c[i];
    return a;
  }
  friend Jet operator+(Jet a, long double b) {
    a.c[0] += b;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r{std::vector<long double>(a.c.size(), 0.0L)};
    for (std::size_t x = 0; x < a.c.size(); ++x) {
      if (a.c[x] == 0.0L) continue;
      const std::size_t rest = (a.c.size() - 1) & ~x;
      // Enumerate submasks of the complement, including the empty one.
      for (std::size_t y = rest;; y = (y - 1) & rest) {
        r.c[x | y] += a.c[x] * b.c[y];
        if (y == 0) break;
      }
    }
    return r;
  }
  friend Jet operator*(Jet a, long double b) {
    for (auto& v : a.c) v *= b;
    return a;
  }
};

// f(x0 + n) = sum_k f^(k)(x0) n^k / k!, with derivs[k] = f^(k)(x0); n is
// nilpotent so the series stops at the number of directions.
inline Jet compose(const Jet& x, const std::vector<long double>& derivs) {
  Jet n = x;
  n.c[0] = 0.0L;
  const int p = std::countr_zero(x.c.size());
  Jet out = Jet::constant(p, derivs[0]);
  Jet power = Jet::constant(p, 1.0L);
  long double fact = 1.0L;
  for (int k = 1; k <= p; ++k) {
    power = power * n;
    fact *= k;
    out = out + power * (derivs[k] / fact);
  }
  return out;
}

inline int jet_order(const Jet& x) { return std::countr_zero(x.c.size()); }

inline Jet exp(const Jet& x) {
  return compose(x, std::vector<long double>(jet_order(x) + 1, std::exp(x.value())));
}

inline Jet log(const Jet& x) {
  std::vector<long double> d{std::log(x.value())};
  long double f = 1.0L;  // (-1)^(k-1) (k-1)! / x^k
  for (int k = 1; k <= jet_order(x); ++k) {
    d.push_back(f / std::pow(x.value(), static_cast<long double>(k)));
    f *= -k;
  }
  return compose(x, d);
}

inline Jet pow(const Jet& x, long double r) {
  std::vector<long double> d;
  long double falling = 1.0L;
  for (int k = 0; k <= jet_order(x); ++k) {
    d.push_back(falling * std::pow(x.value(), r - k));
    falling *= r - k;
  }
  return compose(x, d);
}

// log1p and expm1 keep full precision in the value where the CDFs need it.
inline Jet log1p(const Jet& x) {
  Jet j = log(x + 1.0L);
  j.c[0] = std::log1p(x.value());
  return j;
}

inline Jet expm1(const Jet& x) {
  Jet j = exp(x);
  j.c[0] = std::expm1(x.value());
  return j;
}

inline std::vector<Jet> jet_point(const std::vector<double>& u) {
  const int p = static_cast<int>(u.size());
  std::vector<Jet> x;
  for (int k = 0; k < p; ++k) x.push_back(Jet::variable(p, k, u[k]));
  return x;
}

// The three closed-form CDFs, differentiated exactly.
inline long double clayton_density_ad(const std::vector<double>& u, long double a) {
  const auto x = jet_point(u);
  Jet s = Jet::constant(static_cast<int>(u.size()), 1.0L - u.size());
  for (const auto& v : x) s = s + pow(v, -a);
  return pow(s, -1.0L / a).top();
}

inline long double frank_density_ad(const std::vector<double>& u, long double a) {
  const auto x = jet_point(u);
  const int p = static_cast<int>(u.size());
  Jet prod = Jet::constant(p, 1.0L);
  for (const auto& v : x) prod = prod * expm1(v * -a);
  const long double den = std::pow(std::expm1(-a), static_cast<long double>(p - 1));
  return (log1p(prod * (1.0L / den)) * (-1.0L / a)).top();
}

inline long double gumbel_density_ad(const std::vector<double>& u, long double a) {
  const auto x = jet_point(u);
  Jet s = Jet::constant(static_cast<int>(u.size()), 0.0L);
  for (const auto& v : x) s = s + pow(log(v) * -1.0L, a);
  return exp(pow(s, 1.0L / a) * -1.0L).top();
}

struct Rule {
  std::vector<long double> nodes;
  std::vector<long double> weights;
};

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0L / ((1.0L - x * x) * dp * dp);
  }
  return r;
}

// Composite rule on [lo, hi]: `panels` equal panels of an n-point rule.
inline Rule composite(long double lo, long double hi, int panels, int n) {
  const Rule base = gauss_legendre(n);
  Rule r;
  const long double width = (hi - lo) / panels;
  for (int k = 0; k < panels; ++k) {
    const long double mid = lo + (k + 0.5L) * width;
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(mid + 0.5L * width * base.nodes[i]);
      r.weights.push_back(0.5L * width * base.weights[i]);
    }
  }
  return r;
}

inline long double std_normal_pdf(long double z) {
  return std::exp(-0.5L * z * z) / std::sqrt(2.0L * std::numbers::pi_v<long double>);
}

inline long double std_normal_cdf(long double z) {
  return 0.5L * std::erfc(-z / std::numbers::sqrt2_v<long double>);
}

// Integral of a copula density over the unit cube after u = Phi(z), so the
// integrand c(Phi(z)) prod phi(z_j) is smooth and decays like a Gaussian.
inline long double integrate_copula(const std::function<double(const std::vector<double>&)>& density,
                                    int p, const Rule& rule) {
  const std::size_t m = rule.nodes.size();
  std::vector<double> u(p);
  std::vector<long double> phi(m);
  std::vector<double> cdf(m);
  for (std::size_t i = 0; i < m; ++i) {
    phi[i] = std_normal_pdf(rule.nodes[i]) * rule.weights[i];
    cdf[i] = static_cast<double>(std_normal_cdf(rule.nodes[i]));
  }
  std::vector<std::size_t> idx(p, 0);
  long double total = 0.0L;
  while (true) {
    long double w = 1.0L;
    for (int j = 0; j < p; ++j) {
      u[j] = cdf[idx[j]];
      w *= phi[idx[j]];
    }
    total += w * density(u);
    int j = 0;
    while (j < p && ++idx[j] == m) idx[j++] = 0;
    if (j == p) break;
  }
  return total;
}

inline double normal_quantile(double u) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), u);
}

inline double t_quantile(double u, double nu) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(nu), u);
}

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Gaussian copula density from the explicit inverse and determinant.
inline long double gaussian_copula_density(const std::vector<double>& u, const Eigen::MatrixXd& R) {
  const int p = static_cast<int>(u.size());
  VectorL z(p);
  for (int j = 0; j < p; ++j) z(j) = normal_quantile(u[j]);
  const MatrixL Rl = R.cast<long double>();
  const MatrixL A = Rl.inverse() - MatrixL::Identity(p, p);
  return std::exp(-0.5L * z.dot(A * z)) / std::sqrt(Rl.determinant());
}

// Multivariate t density as a normal scale mixture, integrated over the
// precision w ~ Gamma(nu/2, rate nu/2) in log w.
inline long double t_density_mixture(const VectorL& x, const MatrixL& R, long double nu) {
  const int p = static_cast<int>(x.size());
  const long double q = x.dot(R.inverse() * x);
  const long double log_det = std::log(R.determinant());
  static const Rule rule = composite(-40.0L, 8.0L, 96, 20);
  const long double half_nu = 0.5L * nu;
  const long double log_norm = half_nu * std::log(half_nu) - std::lgamma(half_nu) -
                               0.5L * p * std::log(2.0L * std::numbers::pi_v<long double>) -
                               0.5L * log_det;
  long double total = 0.0L;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const long double s = rule.nodes[i];
    const long double w = std::exp(s);
    // Gamma density times the normal kernel times the Jacobian dw = w ds.
    const long double log_f = log_norm + (half_nu + 0.5L * p) * s - w * (half_nu + 0.5L * q);
    total += rule.weights[i] * std::exp(log_f);
  }
  return total;
}

inline long double t_copula_density(const std::vector<double>& u, const Eigen::MatrixXd& R, double nu) {
  const int p = static_cast<int>(u.size());
  VectorL x(p);
  for (int j = 0; j < p; ++j) x(j) = t_quantile(u[j], nu);
  long double margins = 1.0L;
  for (int j = 0; j < p; ++j) {
    VectorL xj(1);
    xj(0) = x(j);
    margins *= t_density_mixture(xj, MatrixL::Identity(1, 1), nu);
  }
  return t_density_mixture(x, R.cast<long double>(), nu) / margins;
}

// Correlations of the 3 x 3 hyperspherical parameterization written out by
// hand: rows (1), (c21, s21), (c31, s31 c32, s31 s32).
inline Eigen::Matrix3d correlation_from_angles_3(double t21, double t31, double t32) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  R(1, 0) = R(0, 1) = std::cos(t21);
  R(2, 0) = R(0, 2) = std::cos(t31);
  R(2, 1) = R(1, 2) = std::cos(t21) * std::cos(t31) + std::sin(t21) * std::sin(t31) * std::cos(t32);
  return R;
}

// Coefficients of |d^p/dt^p exp(-t^a)| = exp(-t^a) t^-p sum_k e_k t^(a k) via
// the falling-factorial (Stirling) expansion of the chain rule for t^a.
inline std::vector<long double> gumbel_coefficients(int p, long double a) {
  auto falling = [p](long double y) {
    long double out = 1.0L;
    for (int i = 0; i < p; ++i) out *= y - i;
    return out;
  };
  std::vector<long double> e(p + 1, 0.0L);
  long double k_fact = 1.0L;
  for (int k = 1; k <= p; ++k) {
    k_fact *= k;
    long double sum = 0.0L;
    long double binom = 1.0L;
    for (int j = 0; j <= k; ++j) {
      sum += ((k - j) % 2 ? -1.0L : 1.0L) * binom * falling(a * j);
      binom = binom * (k - j) / (j + 1);
    }
    e[k] = ((p + k) % 2 ? -1.0L : 1.0L) * sum / k_fact;
  }
  return e;
}

// Li_{-n}(y) = sum_m m^n y^m by direct summation (|y| < 1).
inline long double polylog_negative(int n, long double y) {
  long double total = 0.0L;
  long double ym = y;
  for (int m = 1; m < 5000; ++m) {
    const long double term = std::pow(static_cast<long double>(m), n) * ym;
    total += term;
    if (std::fabs(term) < 1e-22L * std::fabs(total)) break;
    ym *= y;
  }
  return total;
}

// O(n^2) Kendall tau-b.
inline double kendall_tau_naive(const std::vector<double>& x, const std::vector<double>& y) {
  long long concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tie_x;
      } else if (dy == 0) {
        ++tie_y;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + tie_x);
  const double n2 = static_cast<double>(concordant + discordant + tie_y);
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

// Asymptotic Kolmogorov tail P(sqrt(n) D > x).
inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k < 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

// One-sample KS p-value of `values` against the continuous CDF F.
inline double ks_pvalue(std::vector<double> values, const std::function<double(double)>& F) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = F(values[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  // Stephens' finite-sample correction.
  return kolmogorov_tail(d * (sn + 0.12 + 0.11 / sn));
}

// Kendall distribution K(t) = P(C(U, V) <= t) of a bivariate Archimedean
// copula with generator phi: K(t) = t - phi(t) / phi'(t).
inline double kendall_distribution(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& dphi, double t) {
  return t - phi(t) / dphi(t);
}

}  // namespace oracle
