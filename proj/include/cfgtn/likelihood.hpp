#pragma once

#include <cstdint>
#include <deque>
#include <span>

#include <Eigen/Dense>

#include "cfgtn/model.hpp"
#include "cfgtn/sampling.hpp"

namespace cfgtn {

/// Per-sample cache of coordinate transforms (log u, log(-log u), normal
/// scores, and t scores for recently used dof values) so repeated likelihood
/// evaluations during a fit cost one kernel call per row and component.
///
/// Not thread-safe: the t-score cache is mutated on evaluation. Use one
/// workspace per fit.
class LikelihoodWorkspace {
 public:
  explicit LikelihoodWorkspace(const PseudoSample& sample);

  std::size_t rows() const { return n_; }
  int dimension() const { return p_; }
  const PseudoSample& sample() const { return sample_; }
  /// Phi^{-1}(u), rows() x dimension().
  const SampleMatrix& normal_scores() const { return normal_scores_; }
  /// T_nu^{-1}(u), rows() x dimension(); cached for recent nu values.
  const SampleMatrix& t_scores_for(double nu) { return t_scores(nu).scores; }

  /// Per-row log density of one component, written to out (size rows()).
  void clayton(double alpha, std::span<double> out) const;
  void frank(double alpha, std::span<double> out) const;
  void gumbel(double alpha, std::span<double> out) const;
  void gaussian(const CholeskyFactor& factor, std::span<double> out) const;
  void student_t(const CholeskyFactor& factor, double nu, std::span<double> out);
  void component(const ModelComponent& c, std::span<double> out);

  /// rows() x K matrix of log(weight_k) + log c_k(u_i) for present components
  /// in model_components order.
  Eigen::MatrixXd weighted_component_log_densities(const CfgtnModel& model);

  /// Sum over rows of the mixture log density; NonFiniteError if any row is
  /// not finite.
  double log_likelihood(const CfgtnModel& model);

 private:
  struct TScores {
    double nu;
    SampleMatrix scores;
    Eigen::VectorXd sum_log1p;
  };
  const TScores& t_scores(double nu);

  // Recent per-row log densities of each component slot, so a probe that
  // moves one component's parameters recomputes only that column.
  struct ColumnEntry {
    std::vector<double> key;
    Eigen::VectorXd values;
  };
  const Eigen::VectorXd& cached_component(const ModelComponent& c);
  std::vector<std::deque<ColumnEntry>> column_cache_;

  PseudoSample sample_;
  std::size_t n_;
  int p_;
  SampleMatrix u_;
  SampleMatrix log_u_;
  SampleMatrix log_neg_log_u_;
  SampleMatrix normal_scores_;
  std::deque<TScores> t_cache_;
  std::vector<double> distinct_folded_;
  std::vector<std::uint32_t> fold_index_;
};

}  // namespace cfgtn
