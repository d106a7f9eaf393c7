#include "cfgtn/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cfgtn/errors.hpp"

namespace cfgtn {

void SolverSettings::validate() const {
  if (!(mu_initial > 0.0)) throw DomainError("mu_initial must be positive");
  if (!(mu_shrink > 0.0 && mu_shrink < 1.0)) throw DomainError("mu_shrink must lie in (0,1)");
  if (!(mu_final > 0.0)) throw DomainError("mu_final must be positive");
  if (!(kkt_tolerance > 0.0)) throw DomainError("kkt_tolerance must be positive");
  if (!(constraint_tolerance > 0.0)) throw DomainError("constraint_tolerance must be positive");
  if (max_outer < 1 || max_inner < 1) throw DomainError("iteration limits must be positive");
  if (!(fd_step > 0.0)) throw DomainError("fd_step must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_call(const Objective& f, std::span<const double> x) {
  try {
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  } catch (const Error&) {
    return kInf;
  }
}

}  // namespace

std::vector<double> finite_difference_gradient(const Objective& objective,
                                               std::span<const double> beta, double fd_step) {
  std::vector<double> x(beta.begin(), beta.end());
  std::vector<double> grad(x.size());
  const double f0 = safe_call(objective, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = fd_step * std::max(1.0, std::abs(xi));
    x[i] = xi + h;
    const double fp = safe_call(objective, x);
    x[i] = xi - h;
    const double fm = safe_call(objective, x);
    x[i] = xi;
    const bool okp = std::isfinite(fp), okm = std::isfinite(fm);
    if (okp && okm) {
      grad[i] = (fp - fm) / (2.0 * h);
    } else if (okp && std::isfinite(f0)) {
      grad[i] = (fp - f0) / h;
    } else if (okm && std::isfinite(f0)) {
      grad[i] = (f0 - fm) / h;
    } else {
      throw NonFiniteError("finite-difference probes non-finite in slot " + std::to_string(i));
    }
  }
  return grad;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class BarrierSolver {
 public:
  BarrierSolver(const NlpProblem& problem, const SolverSettings& settings)
      : problem_(problem), settings_(settings), n_(static_cast<Eigen::Index>(problem.dimension())) {
    if (problem.upper.size() != problem.lower.size()) {
      throw DomainError("bound vectors differ in length");
    }
    // Stack finite bounds and general inequalities into G x <= h.
    std::vector<std::pair<Eigen::Index, double>> rows;  // (slot, sign)
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (std::isfinite(problem.lower[i])) rows.emplace_back(i, -1.0);
      if (std::isfinite(problem.upper[i])) rows.emplace_back(i, 1.0);
    }
    const Eigen::Index general = problem.ineq_matrix.rows();
    G_ = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()) + general, n_);
    h_ = VectorXd::Zero(G_.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto [slot, sign] = rows[r];
      G_(static_cast<Eigen::Index>(r), slot) = sign;
      h_(static_cast<Eigen::Index>(r)) =
          sign > 0 ? problem.upper[slot] : -problem.lower[slot];
    }
    if (general > 0) {
      if (problem.ineq_matrix.cols() != n_) throw DomainError("inequality matrix width mismatch");
      G_.bottomRows(general) = problem.ineq_matrix;
      h_.tail(general) = problem.ineq_rhs;
    }
    A_ = problem.eq_matrix.rows() > 0 ? problem.eq_matrix : MatrixXd(0, n_);
    b_ = problem.eq_matrix.rows() > 0 ? problem.eq_rhs : VectorXd(0);
    if (A_.cols() != n_) throw DomainError("equality matrix width mismatch");
    if (A_.rows() > 0) aat_.compute(A_ * A_.transpose());
  }

  IpResult run(std::span<const double> beta0) {
    const auto start = std::chrono::steady_clock::now();
    settings_.validate();
    if (static_cast<Eigen::Index>(beta0.size()) != n_) throw DomainError("start point size mismatch");
    VectorXd x = Eigen::Map<const VectorXd>(beta0.data(), n_);
    VectorXd s = slacks(x);
    if (s.size() > 0 && !(s.minCoeff() > 0.0)) {
      throw InfeasibleStartError("start point is not strictly inside the inequality constraints");
    }
    if (A_.rows() > 0 && (A_ * x - b_).lpNorm<Eigen::Infinity>() > settings_.constraint_tolerance) {
      throw InfeasibleStartError("start point violates the equality constraints");
    }
    double fx = eval(x);
    if (!std::isfinite(fx)) throw NonFiniteError("objective not finite at the start point");

    IpReport report;
    report.initial_objective = fx;
    const VectorXd x0 = x;
    const double f0 = fx;

    double mu = settings_.mu_initial;
    VectorXd lambda = (mu / s.array()).matrix();
    VectorXd g = gradient(x);
    VectorXd y = multiplier_estimate(g, lambda);
    B_ = initial_hessian();
    first_update_ = !curvature_.allFinite();
    radius_ = 1.0;

    bool stalled_fatal = false;
    for (int outer = 1; outer <= settings_.max_outer; ++outer) {
      report.outer_iterations = outer;
      // Each barrier subproblem is solved to accuracy mu, so the iterates track
      // the central path instead of skipping the early, large-mu problems.
      const double inner_tol = std::max(mu, settings_.kkt_tolerance);
      for (int inner = 0; inner < settings_.max_inner; ++inner) {
        s = slacks(x);
        y = multiplier_estimate(g, lambda);
        if (barrier_error(g, s, lambda, y, mu) <= inner_tol) break;

        const VectorXd sigma = (lambda.array() / s.array()).matrix();
        const VectorXd grad_phi = g + G_.transpose() * (mu / s.array()).matrix();
        const MatrixXd W = B_ + G_.transpose() * sigma.asDiagonal() * G_;
        const double phi = fx - mu * s.array().log().sum();

        VectorXd dx;
        StepKind kind = StepKind::Direct;
        double f_new = kInf;
        VectorXd x_new;
        bool ok = direct_step(W, grad_phi, x, s, mu, phi, dx, x_new, f_new);
        if (!ok) {
          kind = StepKind::ConjugateGradient;
          ok = cg_step(W, grad_phi, x, s, mu, phi, dx, x_new, f_new);
        }
        if (!ok) {
          // No primal progress is possible; a pure dual step may still close
          // the complementarity gap left over from the previous mu.
          const VectorXd reset = (mu / s.array()).matrix();
          if (reset.isApprox(lambda, 1e-12)) {
            stalled_fatal = true;
            break;
          }
          lambda = reset;
          continue;
        }
        ++report.iterations;
        (kind == StepKind::Direct ? report.direct_steps : report.cg_steps)++;

        // Dual update from the linearized complementarity condition.
        const VectorXd s_new = slacks(x_new);
        const VectorXd gdx = G_ * (x_new - x);
        VectorXd dlambda =
            ((mu / s.array()) - lambda.array() + sigma.array() * gdx.array()).matrix();
        const double tau = std::max(0.99, 1.0 - mu);
        double alpha_dual = 1.0;
        for (Eigen::Index i = 0; i < dlambda.size(); ++i) {
          if (dlambda(i) < 0.0) alpha_dual = std::min(alpha_dual, -tau * lambda(i) / dlambda(i));
        }
        lambda += alpha_dual * dlambda;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
          const double central = mu / s_new(i);
          lambda(i) = std::clamp(lambda(i), central / 1e10, central * 1e10);
        }

        const VectorXd g_new = gradient(x_new);
        if (kind == StepKind::Direct && last_alpha_ < 1e-2) {
          // A heavily cut step means the quasi-Newton model has gone stale;
          // restart it from the current curvature diagonal.
          B_ = initial_hessian();
          first_update_ = !curvature_.allFinite();
        } else {
          bfgs_update(x_new - x, g_new - g);
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if (settings_.record_trace) {
          const VectorXd sn = slacks(x);
          report.trace.push_back({outer, mu, fx - mu * sn.array().log().sum(), fx, kind});
        }
      }
      s = slacks(x);
      y = multiplier_estimate(g, lambda);
      const double err = barrier_error(g, s, lambda, y, mu);
      report.kkt_residual = std::max(err, primal_infeasibility(x));
      if (stalled_fatal) break;
      if (mu <= settings_.mu_final && report.kkt_residual <= settings_.kkt_tolerance) {
        report.converged = true;
        break;
      }
      if (mu > settings_.mu_final) {
        mu *= settings_.mu_shrink;
        lambda = lambda.cwiseMax((mu / s.array() / 1e10).matrix());
      }
    }

    if (report.converged) {
      report.status = "converged";
    } else {
      report.status = stalled_fatal ? "line search failed" : "iteration budget exhausted";
    }
    if (!(fx <= f0)) {
      // Never return something worse than the start.
      x = x0;
      fx = f0;
      report.converged = false;
    }
    report.objective = fx;
    report.objective_evaluations = evaluations_;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    IpResult result;
    result.beta.assign(x.data(), x.data() + n_);
    result.state = {result.beta, slacks(x), lambda, multiplier_estimate(g, lambda), mu};
    result.report = std::move(report);
    return result;
  }

 private:
  VectorXd slacks(const VectorXd& x) const { return h_ - G_ * x; }

  double primal_infeasibility(const VectorXd& x) const {
    return A_.rows() > 0 ? (A_ * x - b_).lpNorm<Eigen::Infinity>() : 0.0;
  }

  double eval(const VectorXd& x) {
    ++evaluations_;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!(x(i) >= problem_.lower[i] && x(i) <= problem_.upper[i])) return kInf;
    }
    return safe_call(problem_.objective, {x.data(), static_cast<std::size_t>(n_)});
  }

  // Central differences, switching to a second-order one-sided stencil that
  // points into the interior when a bound is closer than the step.
  VectorXd gradient(const VectorXd& x) {
    VectorXd g(n_);
    curvature_.resize(n_);
    VectorXd probe = x;
    const double f0 = eval(x);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double xi = x(i);
      const double h = settings_.fd_step * std::max(1.0, std::abs(xi));
      const double room_lo = xi - problem_.lower[i];
      const double room_hi = problem_.upper[i] - xi;
      auto at = [&](double v) {
        probe(i) = v;
        const double r = eval(probe);
        probe(i) = xi;
        return r;
      };
      double gi = std::numeric_limits<double>::quiet_NaN();
      curvature_(i) = std::numeric_limits<double>::quiet_NaN();
      if (room_lo > h && room_hi > h) {
        const double fp = at(xi + h), fm = at(xi - h);
        if (std::isfinite(fp) && std::isfinite(fm)) {
          gi = (fp - fm) / (2.0 * h);
          curvature_(i) = (fp - 2.0 * f0 + fm) / (h * h);
        }
      }
      if (std::isnan(gi)) {
        const double dir = room_hi >= room_lo ? 1.0 : -1.0;
        const double hh = std::min(h, 0.49 * std::max(room_lo, room_hi));
        const double f1 = at(xi + dir * hh), f2 = at(xi + 2.0 * dir * hh);
        if (std::isfinite(f1) && std::isfinite(f2)) {
          gi = dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * hh);
        } else if (std::isfinite(f1)) {
          gi = dir * (f1 - f0) / hh;
        } else {
          throw NonFiniteError("finite-difference probes non-finite in slot " + std::to_string(i));
        }
      }
      g(i) = gi;
    }
    return g;
  }

  VectorXd project(const VectorXd& v) const {
    if (A_.rows() == 0) return v;
    return v - A_.transpose() * aat_.solve(A_ * v);
  }

  VectorXd multiplier_estimate(const VectorXd& g, const VectorXd& lambda) const {
    if (A_.rows() == 0) return VectorXd(0);
    return -aat_.solve(A_ * (g + G_.transpose() * lambda));
  }

  double barrier_error(const VectorXd& g, const VectorXd& s, const VectorXd& lambda,
                       const VectorXd& y, double mu) const {
    VectorXd r = g + G_.transpose() * lambda;
    if (A_.rows() > 0) r += A_.transpose() * y;
    double err = r.lpNorm<Eigen::Infinity>();
    if (s.size() > 0) err = std::max(err, (s.array() * lambda.array() - mu).abs().maxCoeff());
    return err;
  }

  double max_step(const VectorXd& s, const VectorXd& dx, double mu) const {
    const VectorXd ds = -(G_ * dx);
    const double tau = std::max(0.99, 1.0 - mu);
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      if (ds(i) < 0.0) alpha = std::min(alpha, -tau * s(i) / ds(i));
    }
    return alpha;
  }

  double barrier_value(const VectorXd& x, double mu, double& fx) {
    const VectorXd s = slacks(x);
    if (s.size() > 0 && !(s.minCoeff() > 0.0)) return kInf;
    fx = eval(x);
    if (!std::isfinite(fx)) return kInf;
    return fx - mu * s.array().log().sum();
  }

  bool direct_step(const MatrixXd& W, const VectorXd& grad_phi, const VectorXd& x,
                   const VectorXd& s, double mu, double phi, VectorXd& dx, VectorXd& x_new,
                   double& f_new) {
    const Eigen::Index me = A_.rows();
    if (me == 0) {
      Eigen::LLT<MatrixXd> llt(W);
      if (llt.info() != Eigen::Success) return false;
      dx = -llt.solve(grad_phi);
    } else {
      MatrixXd K = MatrixXd::Zero(n_ + me, n_ + me);
      K.topLeftCorner(n_, n_) = W;
      K.topRightCorner(n_, me) = A_.transpose();
      K.bottomLeftCorner(me, n_) = A_;
      VectorXd rhs(n_ + me);
      rhs.head(n_) = -grad_phi;
      rhs.tail(me) = b_ - A_ * x;
      Eigen::PartialPivLU<MatrixXd> lu(K);
      const VectorXd sol = lu.solve(rhs);
      if (!sol.allFinite() || (K * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) return false;
      dx = sol.head(n_);
    }
    if (!dx.allFinite()) return false;
    const double slope = grad_phi.dot(dx);
    if (!(slope < 0.0)) return false;

    const double alpha_max = max_step(s, dx, mu);
    double alpha = alpha_max;
    for (int k = 0; k < 50 && alpha > 1e-12; ++k, alpha *= 0.5) {
      last_alpha_ = alpha / alpha_max;
      VectorXd cand = x + alpha * dx;
      double fc = kInf;
      const double phic = barrier_value(cand, mu, fc);
      // Roundoff slack lets tiny steps near the optimum through.
      if (phic <= phi + 1e-4 * alpha * slope + 1e-13 * std::abs(phi)) {
        x_new = std::move(cand);
        f_new = fc;
        return true;
      }
    }
    return false;
  }

  // Projected Steihaug-CG on the quadratic model of the barrier objective.
  VectorXd steihaug(const MatrixXd& W, const VectorXd& grad_phi, double radius) const {
    VectorXd z = VectorXd::Zero(n_);
    VectorXd r = project(grad_phi);
    VectorXd d = -r;
    const double r0 = r.norm();
    if (r0 == 0.0) return z;
    auto to_boundary = [&](const VectorXd& z0, const VectorXd& dir) {
      const double a = dir.squaredNorm(), b = 2.0 * z0.dot(dir), c = z0.squaredNorm() - radius * radius;
      const double t = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
      return VectorXd(z0 + t * dir);
    };
    for (Eigen::Index j = 0; j < 2 * n_ + 5; ++j) {
      const VectorXd Wd = W * d;
      const double dwd = d.dot(Wd);
      if (dwd <= 0.0) return to_boundary(z, d);
      const double a = r.squaredNorm() / dwd;
      const VectorXd z_next = z + a * d;
      if (z_next.norm() >= radius) return to_boundary(z, d);
      const VectorXd r_next = r + a * project(Wd);
      if (r_next.norm() < 1e-10 * r0) return z_next;
      const double beta = r_next.squaredNorm() / r.squaredNorm();
      d = -r_next + beta * d;
      z = z_next;
      r = r_next;
    }
    return z;
  }

  bool cg_step(const MatrixXd& W, const VectorXd& grad_phi, const VectorXd& x, const VectorXd& s,
               double mu, double phi, VectorXd& dx, VectorXd& x_new, double& f_new) {
    for (int attempt = 0; attempt < 40 && radius_ > 1e-14; ++attempt) {
      dx = steihaug(W, grad_phi, radius_);
      // Restore equality feasibility drift exactly along the row space.
      if (A_.rows() > 0) dx += A_.transpose() * aat_.solve(b_ - A_ * (x + dx));
      const bool on_boundary = dx.norm() >= 0.99 * radius_;
      dx *= max_step(s, dx, mu);
      const double predicted = -(grad_phi.dot(dx) + 0.5 * dx.dot(W * dx));
      if (!(predicted > 0.0)) {
        radius_ *= 0.25;
        continue;
      }
      VectorXd cand = x + dx;
      double fc = kInf;
      const double phic = barrier_value(cand, mu, fc);
      const double ratio = (phi - phic) / predicted;
      if (std::isfinite(phic) && ratio > 1e-4) {
        if (ratio > 0.75 && on_boundary) radius_ = std::min(2.0 * radius_, 1e3);
        if (ratio < 0.25) radius_ *= 0.25;
        x_new = std::move(cand);
        f_new = fc;
        return true;
      }
      radius_ *= 0.25;
    }
    radius_ = 1.0;
    return false;
  }

  // Diagonal of the finite-difference Hessian from the gradient probes,
  // floored to keep it positive definite.
  MatrixXd initial_hessian() const {
    if (!curvature_.allFinite()) return MatrixXd::Identity(n_, n_);
    const double scale = std::max(curvature_.cwiseAbs().maxCoeff(), 1e-8);
    VectorXd d = curvature_.cwiseAbs().cwiseMax(1e-6 * scale);
    return d.asDiagonal();
  }

  void bfgs_update(const VectorXd& step, const VectorXd& dg) {
    if (step.norm() < 1e-14 || !dg.allFinite()) return;
    double sy = step.dot(dg);
    if (first_update_ && sy > 0.0) {
      B_ = (dg.squaredNorm() / sy) * MatrixXd::Identity(n_, n_);
      first_update_ = false;
    }
    const VectorXd Bs = B_ * step;
    const double sBs = step.dot(Bs);
    if (!(sBs > 0.0)) return;
    VectorXd r = dg;
    if (sy < 0.2 * sBs) {
      // Powell damping keeps B positive definite.
      const double theta = 0.8 * sBs / (sBs - sy);
      r = theta * dg + (1.0 - theta) * Bs;
      sy = step.dot(r);
    }
    MatrixXd next = B_ - (Bs * Bs.transpose()) / sBs + (r * r.transpose()) / sy;
    next = 0.5 * (next + next.transpose()).eval();
    // Damping guarantees positive definiteness only in exact arithmetic.
    Eigen::LLT<MatrixXd> llt(next);
    if (llt.info() != Eigen::Success || !next.allFinite()) return;
    // Updates along nearly flat directions (parameters of a vanishing
    // component) can drive the conditioning past what the KKT solve
    // tolerates; start over from the curvature diagonal then.
    const VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    const double ratio = d.maxCoeff() / d.minCoeff();
    if (ratio * ratio > 1e12) {
      B_ = initial_hessian();
      return;
    }
    B_ = std::move(next);
  }

  const NlpProblem& problem_;
  SolverSettings settings_;
  Eigen::Index n_;
  MatrixXd G_;
  VectorXd h_;
  MatrixXd A_;
  VectorXd b_;
  Eigen::LDLT<MatrixXd> aat_;
  MatrixXd B_;
  VectorXd curvature_;
  bool first_update_ = true;
  double radius_ = 1.0;
  double last_alpha_ = 1.0;
  long evaluations_ = 0;
};

}  // namespace

IpResult interior_point_minimize(const NlpProblem& problem, std::span<const double> beta0,
                                 const SolverSettings& settings) {
  if (!problem.objective) throw DomainError("problem has no objective");
  BarrierSolver solver(problem, settings);
  return solver.run(beta0);
}

}  // namespace cfgtn
