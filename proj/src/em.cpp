#include "cfgtn/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "cfgtn/errors.hpp"

namespace cfgtn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Responsibility-weighted log-likelihood of one component.
double weighted_q(const Eigen::VectorXd& r, const Eigen::VectorXd& logc) {
  if (!logc.allFinite()) return kNegInf;
  return r.dot(logc);
}

// Maximizes Q over log(param) in [lo, hi]; returns the better of the search
// result and the current value.
double brent_update(const std::function<double(double)>& q, double current, double lo, double hi) {
  auto neg = [&](double x) {
    const double v = q(std::exp(x));
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  std::uintmax_t iters = 100;
  const auto [x, fx] = boost::math::tools::brent_find_minima(neg, lo, hi, 40, iters);
  const double candidate = std::exp(x);
  return (-fx > q(current)) ? candidate : current;
}

CorrelationMatrix weighted_correlation(const SampleMatrix& scores, const Eigen::VectorXd& weights) {
  const Eigen::MatrixXd z = scores;
  Eigen::MatrixXd c = z.transpose() * weights.asDiagonal() * z;
  const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  c = d.asDiagonal() * c * d.asDiagonal();
  c.diagonal().setOnes();
  c = 0.5 * (c + c.transpose()).eval();
  c = c.cwiseMax(-1.0).cwiseMin(1.0);
  return CorrelationMatrix(c);
}

// Angles of a proposed correlation, or nullopt when it is numerically singular.
std::optional<AngleVector> proposal_angles(const CorrelationMatrix& R) {
  if (!(min_eigenvalue(R) > 1e-10)) return std::nullopt;
  try {
    return clamp_angles(correlation_to_angles(R).values());
  } catch (const Error&) {
    return std::nullopt;
  }
}

Eigen::VectorXd column(LikelihoodWorkspace& ws, const ModelComponent& c) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ws.rows()));
  ws.component(c, {out.data(), ws.rows()});
  return out;
}

}  // namespace

EmResult em_fit(LikelihoodWorkspace& ws, const CfgtnModel& model0, const EmOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  model0.validate();
  if (model0.dimension != ws.dimension()) throw DomainError("model dimension does not match sample");
  if (options.max_iter < 0) throw DomainError("max_iter must be nonnegative");
  for (const auto& c : model_components(model0)) {
    if (!(c.weight > 0.0)) throw DomainError("EM needs strictly positive weights");
  }
  for (int j = 0; j < model0.normal_count(); ++j) {
    if (!(model0.normal_weights[j] > 0.0)) throw DomainError("EM needs strictly positive weights");
  }

  const auto& bounds = options.fit.bounds;
  const double n = static_cast<double>(ws.rows());
  CfgtnModel m = model0;
  EmResult out;
  double loglik = ws.log_likelihood(m);
  out.loglik_trace.push_back(loglik);

  int iter = 0;
  for (iter = 1; iter <= options.max_iter; ++iter) {
    // E-step.
    const Eigen::MatrixXd terms = ws.weighted_component_log_densities(m);
    const Eigen::VectorXd row_max = terms.rowwise().maxCoeff();
    const Eigen::MatrixXd shifted = (terms.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd row_sum = shifted.rowwise().sum();
    const Eigen::MatrixXd resp = row_sum.cwiseInverse().asDiagonal() * shifted;

    // M-step, one component at a time.
    const auto comps = model_components(m);
    CfgtnModel next = m;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const ModelComponent& c = comps[k];
      const Eigen::VectorXd r = resp.col(static_cast<Eigen::Index>(k));
      const double w = r.sum() / n;
      Eigen::VectorXd logc(static_cast<Eigen::Index>(ws.rows()));
      switch (c.family) {
        case Family::Clayton: {
          next.w_clayton = w;
          auto q = [&](double a) {
            ws.clayton(a, {logc.data(), ws.rows()});
            return weighted_q(r, logc);
          };
          next.alpha_clayton = brent_update(q, m.alpha_clayton, std::log(1e-4),
                                            std::log(bounds.alpha_clayton_max));
          break;
        }
        case Family::Frank: {
          next.w_frank = w;
          auto q = [&](double a) {
            ws.frank(a, {logc.data(), ws.rows()});
            return weighted_q(r, logc);
          };
          next.alpha_frank = brent_update(q, m.alpha_frank, std::log(1e-4),
                                          std::log(bounds.alpha_frank_max));
          break;
        }
        case Family::Gumbel: {
          next.w_gumbel = w;
          auto q = [&](double a) {
            ws.gumbel(std::max(a, 1.0), {logc.data(), ws.rows()});
            return weighted_q(r, logc);
          };
          next.alpha_gumbel = std::max(
              1.0, brent_update(q, m.alpha_gumbel, 0.0, std::log(bounds.alpha_gumbel_max)));
          break;
        }
        case Family::StudentT: {
          next.w_t = w;
          // One scale-mixture reweighting step for the correlation at the
          // current nu, then nu by Brent search with the correlation fixed.
          const SampleMatrix& t = ws.t_scores_for(m.nu);
          const Eigen::MatrixXd L = c.factor.matrix();
          const int p = ws.dimension();
          Eigen::VectorXd v = r;
          for (Eigen::Index i = 0; i < v.size(); ++i) {
            const Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(
                Eigen::VectorXd(t.row(i).transpose()));
            v(i) *= (m.nu + p) / (m.nu + x.squaredNorm());
          }
          const double q_old = weighted_q(r, column(ws, c));
          if (auto th = proposal_angles(weighted_correlation(t, v))) {
            ModelComponent trial = c;
            trial.factor = angles_to_cholesky(*th);
            if (weighted_q(r, column(ws, trial)) > q_old) next.theta_t = *th;
          }
          const CholeskyFactor factor = angles_to_cholesky(next.theta_t);
          auto q = [&](double nu) {
            ws.student_t(factor, nu, {logc.data(), ws.rows()});
            return weighted_q(r, logc);
          };
          next.nu = brent_update(q, m.nu, std::log(bounds.nu_min), std::log(bounds.nu_max));
          break;
        }
        case Family::Gaussian: {
          const int j = c.normal_index;
          next.normal_weights[j] = w;
          const double q_old = weighted_q(r, column(ws, c));
          if (auto th = proposal_angles(weighted_correlation(ws.normal_scores(), r))) {
            ModelComponent trial = c;
            trial.factor = angles_to_cholesky(*th);
            if (weighted_q(r, column(ws, trial)) > q_old) next.theta_normals[j] = *th;
          }
          break;
        }
      }
    }

    // Relabel normals so their weights stay non-increasing.
    std::vector<int> order(static_cast<std::size_t>(next.normal_count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return next.normal_weights[a] > next.normal_weights[b];
    });
    CfgtnModel sorted = next;
    for (std::size_t j = 0; j < order.size(); ++j) {
      sorted.normal_weights[j] = next.normal_weights[order[j]];
      sorted.theta_normals[j] = next.theta_normals[order[j]];
    }
    const double total = sorted.total_weight();
    for (double* w : {&sorted.w_clayton, &sorted.w_frank, &sorted.w_gumbel, &sorted.w_t}) *w /= total;
    for (double& w : sorted.normal_weights) w /= total;

    m = std::move(sorted);
    const double updated = ws.log_likelihood(m);
    out.max_decrease = std::max(out.max_decrease, loglik - updated);
    const double gain = updated - loglik;
    loglik = updated;
    out.loglik_trace.push_back(loglik);
    if (std::find(options.snapshots.begin(), options.snapshots.end(), iter) !=
        options.snapshots.end()) {
      out.snapshots.push_back(
          {iter, m, loglik,
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    }
    if (options.tolerance > 0.0 && gain < options.tolerance) break;
  }

  out.raw = m;
  out.model = threshold_components(m, options.fit.threshold);
  out.report = score_model(ws, out.model, options.fit.threshold);
  out.report.iterations = std::min(iter, options.max_iter);
  const std::size_t t = out.loglik_trace.size();
  out.report.converged = t >= 2 && std::abs(out.loglik_trace[t - 1] - out.loglik_trace[t - 2]) < 1e-6;
  out.report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace cfgtn
