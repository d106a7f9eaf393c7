#include "cfgtn/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "cfgtn/errors.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

std::vector<double> average_ranks(std::span<const double> column) {
  const std::size_t n = column.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && column[order[j]] == column[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

PseudoSample pseudo_observations(const RawSample& x) {
  const auto n = x.rows();
  if (x.cols() < 2) throw InputError("dimension must be at least 2");
  SampleMatrix u(n, x.cols());
  const double scale = 1.0 / static_cast<double>(n + 1);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Eigen::VectorXd col = x.col(j);
    for (double v : col) {
      if (!std::isfinite(v)) throw InputError("non-finite value in raw sample");
    }
    const auto ranks = average_ranks({col.data(), static_cast<std::size_t>(n)});
    for (Eigen::Index i = 0; i < n; ++i) u(i, j) = ranks[i] * scale;
  }
  return PseudoSample(std::move(u));
}

double t_marginal_loglik(std::span<const double> x, double location, double scale, double dof,
                         double* gradient) {
  const double n = static_cast<double>(x.size());
  const double half = 0.5 * (dof + 1.0);
  double ll = n * (std::lgamma(half) - std::lgamma(0.5 * dof) -
                   0.5 * std::log(dof * std::numbers::pi) - std::log(scale));
  double g_loc = 0.0, g_log_scale = -n, g_dof = 0.0;
  for (double v : x) {
    const double r = (v - location) / scale;
    const double r2 = r * r;
    const double l1p = std::log1p(r2 / dof);
    ll -= half * l1p;
    if (gradient) {
      const double denom = dof + r2;
      g_loc += (dof + 1.0) * r / (scale * denom);
      g_log_scale += (dof + 1.0) * r2 / denom;
      g_dof += -0.5 * l1p + half * r2 / (dof * denom);
    }
  }
  if (gradient) {
    using boost::math::digamma;
    g_dof += n * (0.5 * digamma(half) - 0.5 * digamma(0.5 * dof) - 0.5 / dof);
    gradient[0] = g_loc;
    gradient[1] = g_log_scale;
    gradient[2] = g_dof * dof;  // chain rule for log dof
  }
  return ll;
}

TMarginalFit fit_t_marginal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw InputError("t marginal fit needs at least 10 values");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (!(var > 0.0)) throw InputError("degenerate (constant) column");

  const double log_dof_max = std::log(kMarginalMaxDof);
  const double log_dof_min = std::log(0.05);
  Eigen::Vector3d theta(mean, 0.5 * std::log(var), std::log(10.0));

  auto eval = [&](const Eigen::Vector3d& th, Eigen::Vector3d* g) {
    double buf[3];
    const double ll =
        t_marginal_loglik(x, th(0), std::exp(th(1)), std::exp(th(2)), g ? buf : nullptr);
    if (g) *g = Eigen::Vector3d(buf[0], buf[1], buf[2]);
    return ll;
  };
  auto projected = [&](const Eigen::Vector3d& th, Eigen::Vector3d g) {
    if (th(2) >= log_dof_max && g(2) > 0.0) g(2) = 0.0;
    if (th(2) <= log_dof_min && g(2) < 0.0) g(2) = 0.0;
    return g;
  };

  const double tol = 1e-9 * std::max(1.0, static_cast<double>(n));
  Eigen::Vector3d g;
  double ll = eval(theta, &g);
  for (int iter = 1; iter <= 200; ++iter) {
    if (projected(theta, g).lpNorm<Eigen::Infinity>() < tol) {
      return {theta(0), std::exp(theta(1)), std::exp(theta(2)), ll, iter - 1};
    }
    // Hessian by central differences of the analytic gradient.
    Eigen::Matrix3d H;
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta(k)));
      Eigen::Vector3d tp = theta, tm = theta, gp, gm;
      tp(k) += h;
      tm(k) -= h;
      eval(tp, &gp);
      eval(tm, &gm);
      H.col(k) = (gp - gm) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::Matrix3d neg = -H;
    // Levenberg damping until the negative Hessian is positive definite.
    double damping = 0.0;
    Eigen::LLT<Eigen::Matrix3d> llt(neg);
    while (llt.info() != Eigen::Success) {
      damping = damping == 0.0 ? 1e-6 * std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff())
                               : 10.0 * damping;
      llt.compute(neg + damping * Eigen::Matrix3d::Identity());
    }
    Eigen::Vector3d step = llt.solve(projected(theta, g));
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Eigen::Vector3d cand = theta + t * step;
      cand(2) = std::clamp(cand(2), log_dof_min, log_dof_max);
      Eigen::Vector3d gc;
      const double llc = eval(cand, &gc);
      if (std::isfinite(llc) && llc >= ll - 1e-12 * std::abs(ll)) {
        const bool progress = (cand - theta).lpNorm<Eigen::Infinity>() > 1e-15;
        theta = cand;
        g = gc;
        ll = llc;
        accepted = progress;
        break;
      }
    }
    if (!accepted) {
      // No representable ascent left; accept as stationary to rounding.
      return {theta(0), std::exp(theta(1)), std::exp(theta(2)), ll, iter};
    }
  }
  throw ConvergenceError("t marginal fit reached the iteration cap");
}

std::vector<double> transform_with_t(std::span<const double> x, const TMarginalFit& fit) {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - fit.location) / fit.scale;
    u[i] = std::clamp(special::t_cdf(z, fit.dof), 1e-10, 1.0 - 1e-10);
  }
  return u;
}

double t_marginal_quantile(double u, const TMarginalFit& fit) {
  return fit.location + fit.scale * special::t_quantile(u, fit.dof);
}

}  // namespace cfgtn
