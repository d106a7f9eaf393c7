#include "cfgtn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cfgtn/errors.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

CfgtnModel CfgtnModel::empty(int p) {
  if (p < 2) throw DomainError("dimension must be at least 2");
  CfgtnModel m;
  m.dimension = p;
  m.theta_t = AngleVector::identity(p);
  return m;
}

double CfgtnModel::total_weight() const {
  double s = w_clayton + w_frank + w_gumbel + w_t;
  for (double w : normal_weights) s += w;
  return s;
}

void CfgtnModel::validate() const {
  if (dimension < 2) throw DomainError("dimension must be at least 2");
  for (double w : {w_clayton, w_frank, w_gumbel, w_t}) {
    if (!(w >= 0.0)) throw DomainError("weights must be nonnegative");
  }
  for (double w : normal_weights) {
    if (!(w >= 0.0)) throw DomainError("weights must be nonnegative");
  }
  if (std::abs(total_weight() - 1.0) > 1e-8) throw DomainError("weights must sum to 1");
  for (std::size_t j = 1; j < normal_weights.size(); ++j) {
    if (normal_weights[j] > normal_weights[j - 1] + 1e-12) {
      throw DomainError("normal weights must be non-increasing");
    }
  }
  if (normal_weights.size() != theta_normals.size()) {
    throw DomainError("one angle vector per normal component required");
  }
  if (!(alpha_clayton > 0.0)) throw DomainError("Clayton alpha must be > 0");
  if (!(alpha_frank > 0.0)) throw DomainError("Frank alpha must be > 0");
  if (!(alpha_gumbel >= 1.0)) throw DomainError("Gumbel alpha must be >= 1");
  if (!(nu > 0.0)) throw DomainError("t degrees of freedom must be > 0");
  if (theta_t.dimension() != dimension) throw DomainError("t angle dimension mismatch");
  for (const auto& th : theta_normals) {
    if (th.dimension() != dimension) throw DomainError("normal angle dimension mismatch");
  }
}

Structure structure_of(const CfgtnModel& m) {
  return {.clayton = m.w_clayton > 0.0,
          .frank = m.w_frank > 0.0,
          .gumbel = m.w_gumbel > 0.0,
          .t = m.w_t > 0.0,
          .normals = m.normal_count(),
          .dimension = m.dimension};
}

Structure full_structure(int p, int normals) {
  return {.clayton = true, .frank = true, .gumbel = true, .t = true, .normals = normals,
          .dimension = p};
}

ParameterVector pack(const CfgtnModel& model, const ParameterBounds& bounds) {
  model.validate();
  ParameterVector pv;
  pv.structure = structure_of(model);
  pv.base = model;
  const auto& s = pv.structure;
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto slot = [&](double v, double lo, double hi) {
    pv.values.push_back(v);
    pv.lower.push_back(lo);
    pv.upper.push_back(hi);
  };
  if (s.clayton) slot(model.w_clayton, 0.0, inf);
  if (s.frank) slot(model.w_frank, 0.0, inf);
  if (s.gumbel) slot(model.w_gumbel, 0.0, inf);
  if (s.t) slot(model.w_t, 0.0, inf);
  for (double w : model.normal_weights) slot(w, 0.0, inf);
  pv.weight_count = pv.values.size();
  if (s.clayton) slot(model.alpha_clayton, 0.0, bounds.alpha_clayton_max);
  if (s.frank) slot(model.alpha_frank, 0.0, bounds.alpha_frank_max);
  if (s.gumbel) slot(model.alpha_gumbel, 1.0, bounds.alpha_gumbel_max);
  if (s.t) {
    slot(model.nu, bounds.nu_min, bounds.nu_max);
    for (double a : model.theta_t.values()) slot(a, kAngleFloor, std::numbers::pi - kAngleFloor);
  }
  for (const auto& th : model.theta_normals) {
    for (double a : th.values()) slot(a, kAngleFloor, std::numbers::pi - kAngleFloor);
  }

  const auto n = static_cast<Eigen::Index>(pv.values.size());
  pv.eq_matrix = Eigen::MatrixXd::Zero(1, n);
  pv.eq_matrix.leftCols(static_cast<Eigen::Index>(pv.weight_count)).setOnes();
  pv.eq_rhs = Eigen::VectorXd::Ones(1);

  const int k = s.normals;
  const auto first_normal = static_cast<Eigen::Index>(pv.weight_count) - k;
  pv.ineq_matrix = Eigen::MatrixXd::Zero(std::max(k - 1, 0), n);
  pv.ineq_rhs = Eigen::VectorXd::Zero(std::max(k - 1, 0));
  for (int j = 0; j + 1 < k; ++j) {
    pv.ineq_matrix(j, first_normal + j) = -1.0;
    pv.ineq_matrix(j, first_normal + j + 1) = 1.0;
  }
  return pv;
}

CfgtnModel unpack(const ParameterVector& layout, std::span<const double> values) {
  if (values.size() != layout.values.size()) throw DomainError("parameter vector size mismatch");
  const auto& s = layout.structure;
  CfgtnModel m = layout.base;
  std::size_t i = 0;
  auto next = [&] { return values[i++]; };
  m.w_clayton = s.clayton ? next() : 0.0;
  m.w_frank = s.frank ? next() : 0.0;
  m.w_gumbel = s.gumbel ? next() : 0.0;
  m.w_t = s.t ? next() : 0.0;
  m.normal_weights.assign(static_cast<std::size_t>(s.normals), 0.0);
  for (double& w : m.normal_weights) w = next();
  if (s.clayton) m.alpha_clayton = next();
  if (s.frank) m.alpha_frank = next();
  if (s.gumbel) m.alpha_gumbel = next();
  const std::size_t q = angle_count(s.dimension);
  auto angles = [&] {
    std::vector<double> a(values.begin() + static_cast<std::ptrdiff_t>(i),
                          values.begin() + static_cast<std::ptrdiff_t>(i + q));
    i += q;
    return AngleVector(std::move(a));
  };
  if (s.t) {
    m.nu = next();
    m.theta_t = angles();
  }
  m.theta_normals.clear();
  for (int j = 0; j < s.normals; ++j) m.theta_normals.push_back(angles());
  return m;
}

std::vector<ModelComponent> model_components(const CfgtnModel& m) {
  std::vector<ModelComponent> out;
  if (m.w_clayton > 0.0) out.push_back({Family::Clayton, m.w_clayton, m.alpha_clayton});
  if (m.w_frank > 0.0) out.push_back({Family::Frank, m.w_frank, m.alpha_frank});
  if (m.w_gumbel > 0.0) out.push_back({Family::Gumbel, m.w_gumbel, m.alpha_gumbel});
  if (m.w_t > 0.0) {
    out.push_back({Family::StudentT, m.w_t, 0.0, m.nu, angles_to_cholesky(m.theta_t)});
  }
  for (int j = 0; j < m.normal_count(); ++j) {
    if (m.normal_weights[j] <= 0.0) continue;
    out.push_back({Family::Gaussian, m.normal_weights[j], 0.0, 0.0,
                   angles_to_cholesky(m.theta_normals[j]), j});
  }
  return out;
}

std::vector<CopulaComponent> to_copula_components(const CfgtnModel& m) {
  std::vector<CopulaComponent> out;
  for (const auto& c : model_components(m)) {
    CopulaComponent cc{.family = c.family, .weight = c.weight, .alpha = c.alpha, .dof = c.dof};
    if (!is_archimedean(c.family)) cc.correlation = cholesky_to_correlation(c.factor);
    out.push_back(std::move(cc));
  }
  return out;
}

double mixture_log_density(const CfgtnModel& model, std::span<const double> u) {
  if (static_cast<int>(u.size()) != model.dimension) throw DomainError("dimension mismatch");
  std::vector<double> terms;
  for (const auto& c : model_components(model)) {
    double lc = 0.0;
    switch (c.family) {
      case Family::Clayton: lc = clayton_log_density(u, c.alpha); break;
      case Family::Frank: lc = frank_log_density(u, c.alpha); break;
      case Family::Gumbel: lc = gumbel_log_density(u, c.alpha); break;
      case Family::StudentT: lc = student_t_log_density(u, c.factor, c.dof); break;
      case Family::Gaussian: lc = gaussian_log_density(u, c.factor); break;
    }
    terms.push_back(std::log(c.weight) + lc);
  }
  return special::log_sum_exp(terms);
}

int degrees_of_freedom(const CfgtnModel& m, double threshold) {
  if (!(threshold >= 0.0 && threshold < 0.5)) throw DomainError("threshold must lie in [0, 0.5)");
  const int q = static_cast<int>(angle_count(m.dimension));
  struct Entry {
    double weight;
    int cost;
  };
  std::vector<Entry> entries = {{m.w_clayton, 2}, {m.w_frank, 2}, {m.w_gumbel, 2},
                                {m.w_t, 2 + q}};
  for (double w : m.normal_weights) entries.push_back({w, 1 + q});
  int df = -1;
  bool any = false;
  for (const auto& e : entries) {
    if (e.weight > threshold) {
      df += e.cost;
      any = true;
    }
  }
  if (!any) {
    const auto largest = std::max_element(entries.begin(), entries.end(),
                                          [](const Entry& a, const Entry& b) { return a.weight < b.weight; });
    df += largest->cost;
  }
  return df;
}

double aicc(double loglik, int df, std::size_t n) {
  const double k = df;
  const double nn = static_cast<double>(n);
  if (!(nn > k + 1.0)) throw DomainError("AICc requires n > DF + 1");
  return -2.0 * loglik + 2.0 * k + 2.0 * k * (2.0 * k + 1.0) / (nn - k - 1.0);
}

CfgtnModel threshold_components(const CfgtnModel& model, double threshold) {
  CfgtnModel m = model;
  // Identify the largest component so at least one survives.
  double largest = std::max({m.w_clayton, m.w_frank, m.w_gumbel, m.w_t});
  for (double w : m.normal_weights) largest = std::max(largest, w);
  auto keep = [&](double w) { return w > threshold || (w == largest && w > 0.0); };

  bool removed = false;
  for (double* w : {&m.w_clayton, &m.w_frank, &m.w_gumbel, &m.w_t}) {
    if (*w > 0.0 && !keep(*w)) {
      *w = 0.0;
      removed = true;
    }
  }
  std::vector<double> weights;
  std::vector<AngleVector> angles;
  for (std::size_t j = 0; j < m.normal_weights.size(); ++j) {
    if (keep(m.normal_weights[j])) {
      weights.push_back(m.normal_weights[j]);
      angles.push_back(m.theta_normals[j]);
    } else {
      removed = true;
    }
  }
  m.normal_weights = std::move(weights);
  m.theta_normals = std::move(angles);

  // Renormalize only after a removal so a second pass is an exact no-op.
  const double total = m.total_weight();
  if (removed) {
    m.w_clayton /= total;
    m.w_frank /= total;
    m.w_gumbel /= total;
    m.w_t /= total;
    for (double& w : m.normal_weights) w /= total;
  }
  return m;
}

}  // namespace cfgtn
