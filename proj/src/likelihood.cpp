#include "cfgtn/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfgtn/errors.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

namespace {

constexpr std::size_t kTCacheSize = 4;
constexpr std::size_t kColumnCacheSize = 3;

// Cache slot: C, F, G, T, then one per normal index.
std::size_t slot_of(const ModelComponent& c) {
  switch (c.family) {
    case Family::Clayton: return 0;
    case Family::Frank: return 1;
    case Family::Gumbel: return 2;
    case Family::StudentT: return 3;
    case Family::Gaussian: return 4 + static_cast<std::size_t>(c.normal_index);
  }
  return 0;
}

std::vector<double> key_of(const ModelComponent& c) {
  std::vector<double> key{c.alpha, c.dof};
  if (!is_archimedean(c.family)) {
    const auto& m = c.factor.matrix();
    key.insert(key.end(), m.data(), m.data() + m.size());
  }
  return key;
}

}  // namespace

LikelihoodWorkspace::LikelihoodWorkspace(const PseudoSample& sample)
    : sample_(sample), n_(sample.rows()), p_(sample.dimension()) {
  const auto n = static_cast<Eigen::Index>(n_);
  u_ = sample.values().unaryExpr(
      [](double u) { return std::clamp(u, kUnitEpsilon, 1.0 - kUnitEpsilon); });
  log_u_ = u_.array().log().matrix();
  log_neg_log_u_ = (-log_u_.array()).log().matrix();
  normal_scores_.resize(n, p_);
  for (Eigen::Index i = 0; i < u_.size(); ++i) {
    normal_scores_.data()[i] = special::normal_quantile(u_.data()[i]);
  }
  // Quantiles are odd about 1/2 and rank data repeats the same values in
  // every column, so t scores are computed once per distinct min(u, 1-u).
  // 1-u is exact for u >= 1/2.
  const auto total = static_cast<std::size_t>(u_.size());
  std::vector<double> folded(total);
  for (std::size_t i = 0; i < total; ++i) folded[i] = std::min(u_.data()[i], 1.0 - u_.data()[i]);
  distinct_folded_ = folded;
  std::sort(distinct_folded_.begin(), distinct_folded_.end());
  distinct_folded_.erase(std::unique(distinct_folded_.begin(), distinct_folded_.end()),
                         distinct_folded_.end());
  fold_index_.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    fold_index_[i] = static_cast<std::uint32_t>(
        std::lower_bound(distinct_folded_.begin(), distinct_folded_.end(), folded[i]) -
        distinct_folded_.begin());
  }
}

namespace {

std::span<const double> row_of(const SampleMatrix& m, std::size_t i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

void LikelihoodWorkspace::clayton(double alpha, std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) out[i] = kernel::clayton(row_of(log_u_, i), alpha);
}

void LikelihoodWorkspace::frank(double alpha, std::span<double> out) const {
  const auto coeffs = kernel::frank_log_coefficients(p_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = kernel::frank(row_of(u_, i), alpha, coeffs);
}

void LikelihoodWorkspace::gumbel(double alpha, std::span<double> out) const {
  const auto coeffs = kernel::gumbel_log_coefficients(p_, alpha);
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = kernel::gumbel(row_of(log_u_, i), row_of(log_neg_log_u_, i), alpha, coeffs);
  }
}

void LikelihoodWorkspace::gaussian(const CholeskyFactor& factor, std::span<double> out) const {
  const double hld = factor.half_log_det();
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = kernel::gaussian(row_of(normal_scores_, i), factor, hld);
  }
}

const LikelihoodWorkspace::TScores& LikelihoodWorkspace::t_scores(double nu) {
  for (auto it = t_cache_.begin(); it != t_cache_.end(); ++it) {
    if (it->nu == nu) {
      if (it != t_cache_.begin()) {
        TScores hit = std::move(*it);
        t_cache_.erase(it);
        t_cache_.push_front(std::move(hit));
      }
      return t_cache_.front();
    }
  }
  TScores entry{nu, SampleMatrix(u_.rows(), u_.cols()), Eigen::VectorXd::Zero(u_.rows())};
  std::vector<double> lower(distinct_folded_.size());
  std::vector<double> log1p_sq(distinct_folded_.size());
  for (std::size_t k = 0; k < lower.size(); ++k) {
    lower[k] = special::t_quantile(distinct_folded_[k], nu);
    log1p_sq[k] = std::log1p(lower[k] * lower[k] / nu);
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < p_; ++j) {
      const auto flat = i * static_cast<std::size_t>(p_) + static_cast<std::size_t>(j);
      const auto k = fold_index_[flat];
      entry.scores(i, j) = u_(i, j) > 0.5 ? -lower[k] : lower[k];
      acc += log1p_sq[k];
    }
    entry.sum_log1p(i) = acc;
  }
  t_cache_.push_front(std::move(entry));
  if (t_cache_.size() > kTCacheSize) t_cache_.pop_back();
  return t_cache_.front();
}

void LikelihoodWorkspace::student_t(const CholeskyFactor& factor, double nu,
                                    std::span<double> out) {
  const auto& ts = t_scores(nu);
  const double hld = factor.half_log_det();
  const double lc = kernel::t_log_constant(nu, p_);
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = kernel::student_t(row_of(ts.scores, i), ts.sum_log1p(i), factor, hld, nu, lc);
  }
}

void LikelihoodWorkspace::component(const ModelComponent& c, std::span<double> out) {
  switch (c.family) {
    case Family::Clayton: clayton(c.alpha, out); return;
    case Family::Frank: frank(c.alpha, out); return;
    case Family::Gumbel: gumbel(c.alpha, out); return;
    case Family::Gaussian: gaussian(c.factor, out); return;
    case Family::StudentT: student_t(c.factor, c.dof, out); return;
  }
}

const Eigen::VectorXd& LikelihoodWorkspace::cached_component(const ModelComponent& c) {
  const std::size_t slot = slot_of(c);
  if (column_cache_.size() <= slot) column_cache_.resize(slot + 1);
  auto& entries = column_cache_[slot];
  std::vector<double> key = key_of(c);
  for (auto it = entries.begin(); it != entries.end(); ++it) {
    if (it->key == key) {
      if (it != entries.begin()) {
        ColumnEntry hit = std::move(*it);
        entries.erase(it);
        entries.push_front(std::move(hit));
      }
      return entries.front().values;
    }
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(n_));
  component(c, {values.data(), n_});
  entries.push_front({std::move(key), std::move(values)});
  if (entries.size() > kColumnCacheSize) entries.pop_back();
  return entries.front().values;
}

Eigen::MatrixXd LikelihoodWorkspace::weighted_component_log_densities(const CfgtnModel& model) {
  if (model.dimension != p_) throw DomainError("model dimension does not match sample");
  const auto comps = model_components(model);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(comps.size()));
  for (std::size_t k = 0; k < comps.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) =
        cached_component(comps[k]).array() + std::log(comps[k].weight);
  }
  return out;
}

double LikelihoodWorkspace::log_likelihood(const CfgtnModel& model) {
  const Eigen::MatrixXd terms = weighted_component_log_densities(model);
  const auto k = terms.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < terms.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) m = std::max(m, terms(i, j));
    double s = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) s += std::exp(terms(i, j) - m);
    const double row = m + std::log(s);
    if (!std::isfinite(row)) {
      throw NonFiniteError("log density not finite at row " + std::to_string(i));
    }
    total += row;
  }
  return total;
}

double log_pseudo_likelihood(const CfgtnModel& model, const PseudoSample& sample) {
  LikelihoodWorkspace ws(sample);
  return ws.log_likelihood(model);
}

}  // namespace cfgtn
