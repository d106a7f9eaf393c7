#include "cfgtn/mixture_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cfgtn/errors.hpp"

namespace cfgtn {

namespace {

constexpr double kWeightFloor = 1e-6;

void renormalize(CfgtnModel& m) {
  const double total = m.total_weight();
  m.w_clayton /= total;
  m.w_frank /= total;
  m.w_gumbel /= total;
  m.w_t /= total;
  for (double& w : m.normal_weights) w /= total;
}

AngleVector interior_angles(const AngleVector& theta) {
  const double lo = 10.0 * kAngleFloor;
  const double hi = std::numbers::pi - lo;
  std::vector<double> a = theta.values();
  for (double& v : a) v = std::clamp(v, lo, hi);
  return AngleVector(std::move(a));
}

double inside(double v, double lo, double hi) {
  const double margin = 1e-4 * std::max(1.0, hi - lo);
  return std::clamp(v, lo + std::min(margin, 1e-3), hi - margin);
}

}  // namespace

CfgtnModel interior_start(const CfgtnModel& model, const ParameterBounds& bounds) {
  model.validate();
  CfgtnModel m = model;
  const int present = structure_of(m).component_count();
  auto lift = [&](double& w) {
    if (w > 0.0) w = (1.0 - kWeightFloor) * w + kWeightFloor / present;
  };
  for (double* w : {&m.w_clayton, &m.w_frank, &m.w_gumbel, &m.w_t}) lift(*w);
  // Zero-weight normals still count as present slots for the optimizer.
  for (double& w : m.normal_weights) w = (1.0 - kWeightFloor) * w + kWeightFloor / present;

  const int k = m.normal_count();
  if (k > 1) {
    const double smallest = *std::min_element(m.normal_weights.begin(), m.normal_weights.end());
    const double delta = std::min(1e-3, 0.5 * smallest / k);
    for (int j = 0; j < k; ++j) m.normal_weights[j] += delta * (0.5 * (k - 1) - j);
  }
  renormalize(m);

  m.alpha_clayton = inside(m.alpha_clayton, 0.0, bounds.alpha_clayton_max);
  m.alpha_frank = inside(m.alpha_frank, 0.0, bounds.alpha_frank_max);
  m.alpha_gumbel = inside(m.alpha_gumbel, 1.0, bounds.alpha_gumbel_max);
  m.nu = inside(m.nu, bounds.nu_min, bounds.nu_max);
  m.theta_t = interior_angles(m.theta_t);
  for (auto& th : m.theta_normals) th = interior_angles(th);
  return m;
}

bool angles_at_cap(const CfgtnModel& model) {
  const double lo = 10.0 * kAngleFloor;
  auto at_cap = [&](const AngleVector& th) {
    return std::any_of(th.values().begin(), th.values().end(),
                       [&](double a) { return a <= lo || a >= std::numbers::pi - lo; });
  };
  if (model.w_t > 0.0 && at_cap(model.theta_t)) return true;
  for (int j = 0; j < model.normal_count(); ++j) {
    if (model.normal_weights[j] > 0.0 && at_cap(model.theta_normals[j])) return true;
  }
  return false;
}

FitReport score_model(LikelihoodWorkspace& ws, const CfgtnModel& model, double threshold) {
  FitReport r;
  r.loglik = ws.log_likelihood(model);
  r.df = degrees_of_freedom(model, threshold);
  r.aicc = aicc(r.loglik, r.df, ws.rows());
  r.angle_cap_hit = angles_at_cap(model);
  return r;
}

MixtureFit fit_mixture(LikelihoodWorkspace& ws, const CfgtnModel& start, const FitOptions& options) {
  if (start.dimension != ws.dimension()) throw DomainError("model dimension does not match sample");
  const CfgtnModel inner = interior_start(start, options.bounds);
  const ParameterVector layout = pack(inner, options.bounds);
  const double n = static_cast<double>(ws.rows());

  NlpProblem problem;
  problem.objective = [&](std::span<const double> beta) {
    return -ws.log_likelihood(unpack(layout, beta)) / n;
  };
  problem.lower = layout.lower;
  problem.upper = layout.upper;
  problem.eq_matrix = layout.eq_matrix;
  problem.eq_rhs = layout.eq_rhs;
  problem.ineq_matrix = layout.ineq_matrix;
  problem.ineq_rhs = layout.ineq_rhs;

  const IpResult result = interior_point_minimize(problem, layout.values, options.solver);

  MixtureFit fit;
  fit.raw = unpack(layout, result.beta);
  renormalize(fit.raw);
  fit.model = threshold_components(fit.raw, options.threshold);
  fit.report = score_model(ws, fit.model, options.threshold);
  fit.report.iterations = result.report.iterations;
  fit.report.wall_time = result.report.wall_time;
  fit.report.converged = result.report.converged;
  fit.report.kkt_residual = result.report.kkt_residual;
  fit.solver = result.report;
  return fit;
}

}  // namespace cfgtn
