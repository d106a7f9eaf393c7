#include "cfgtn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "cfgtn/errors.hpp"
#include "cfgtn/parallel.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

namespace {

constexpr double kAlphaMin = 1e-4;

CorrelationMatrix normal_score_correlation(const PseudoSample& sample) {
  const auto n = static_cast<Eigen::Index>(sample.rows());
  const int p = sample.dimension();
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      z(i, j) = special::normal_quantile(
          std::clamp(sample.values()(i, j), kUnitEpsilon, 1.0 - kUnitEpsilon));
    }
  }
  z.rowwise() -= z.colwise().mean();
  Eigen::MatrixXd c = z.transpose() * z;
  const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  c = d.asDiagonal() * c * d.asDiagonal();
  c.diagonal().setOnes();
  c = 0.5 * (c + c.transpose()).eval();
  CorrelationMatrix R(c);
  if (min_eigenvalue(R) < 1e-6) return CorrelationMatrix::identity(p);
  return R;
}

SingleFit fit_archimedean(LikelihoodWorkspace& ws, Family family, const FitOptions& options) {
  CfgtnModel m = CfgtnModel::empty(ws.dimension());
  double lo = std::log(kAlphaMin);
  double hi = 0.0;
  double* slot = nullptr;
  switch (family) {
    case Family::Clayton:
      m.w_clayton = 1.0;
      slot = &m.alpha_clayton;
      hi = std::log(options.bounds.alpha_clayton_max);
      break;
    case Family::Frank:
      m.w_frank = 1.0;
      slot = &m.alpha_frank;
      hi = std::log(options.bounds.alpha_frank_max);
      break;
    case Family::Gumbel:
      m.w_gumbel = 1.0;
      slot = &m.alpha_gumbel;
      lo = 0.0;
      hi = std::log(options.bounds.alpha_gumbel_max);
      break;
    default:
      throw DomainError("not an Archimedean family");
  }
  auto negll = [&](double log_alpha) {
    *slot = std::exp(log_alpha);
    try {
      return -ws.log_likelihood(m);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  std::uintmax_t iterations = 200;
  const auto [x, fx] = boost::math::tools::brent_find_minima(negll, lo, hi, 40, iterations);
  if (!std::isfinite(fx)) throw ConvergenceError("no finite likelihood for " + std::string(family_name(family)));
  *slot = std::exp(x);
  if (family == Family::Gumbel) *slot = std::max(*slot, 1.0);

  SingleFit fit{family, m, score_model(ws, m, options.threshold)};
  fit.report.iterations = static_cast<int>(iterations);
  fit.report.converged = iterations < 200;
  return fit;
}

SingleFit fit_elliptical(LikelihoodWorkspace& ws, Family family, const FitOptions& options) {
  CfgtnModel m = CfgtnModel::empty(ws.dimension());
  const AngleVector start = correlation_to_angles(normal_score_correlation(ws.sample()));
  if (family == Family::StudentT) {
    m.w_t = 1.0;
    m.theta_t = start;
  } else {
    m.normal_weights = {1.0};
    m.theta_normals = {start};
  }
  MixtureFit mf = fit_mixture(ws, m, options);
  return {family, mf.model, mf.report};
}

}  // namespace

SingleFit fit_single_family(LikelihoodWorkspace& ws, Family family, const FitOptions& options) {
  if (is_archimedean(family)) return fit_archimedean(ws, family, options);
  return fit_elliptical(ws, family, options);
}

SingleComponentResult fit_single_component_best(LikelihoodWorkspace& ws, const FitOptions& options) {
  SingleComponentResult out;
  for (Family f : {Family::Clayton, Family::Frank, Family::Gumbel, Family::StudentT,
                   Family::Gaussian}) {
    try {
      out.fits.push_back(fit_single_family(ws, f, options));
    } catch (const Error& e) {
      out.warnings.push_back(std::string(family_name(f)) + " fit failed: " + e.what());
    }
  }
  if (out.fits.empty()) throw ConvergenceError("every single-family fit failed");
  out.best = *std::min_element(out.fits.begin(), out.fits.end(), [](const auto& a, const auto& b) {
    return a.report.aicc < b.report.aicc;
  });
  return out;
}

CfgtnModel stepwise_start(const CfgtnModel& previous, int k) {
  if (k < 1) throw DomainError("number of normal components must be at least 1");
  CfgtnModel m = previous;
  const double base = 1.0 / (4 + k);
  m.w_clayton = m.w_frank = m.w_gumbel = m.w_t = base;
  m.normal_weights.assign(static_cast<std::size_t>(k), base);
  const double delta = 1e-3 * base;
  for (int j = 0; j < k; ++j) m.normal_weights[j] += delta * (0.5 * (k - 1) - j);
  m.theta_normals.resize(std::min<std::size_t>(previous.theta_normals.size(), k));
  while (m.normal_count() > static_cast<int>(m.theta_normals.size())) {
    m.theta_normals.push_back(AngleVector::identity(m.dimension));
  }
  return m;
}

SelectionResult stepwise_fit(LikelihoodWorkspace& ws, const StepwiseOptions& options) {
  if (options.max_k < 1) throw DomainError("max_k must be at least 1");
  SelectionResult out;
  out.single = fit_single_component_best(ws, options.fit);
  const SingleFit& best_single = out.single.best;
  out.model = best_single.model;
  out.report = best_single.report;
  out.trace.push_back({0, best_single.model, best_single.model, best_single.report.loglik,
                       best_single.report.df, best_single.report.aicc, true,
                       best_single.report.converged, std::string(family_name(best_single.family))});

  // Copula parameters for the first mixture step come from the single fits.
  CfgtnModel carrier = CfgtnModel::empty(ws.dimension());
  for (const auto& f : out.single.fits) {
    switch (f.family) {
      case Family::Clayton: carrier.alpha_clayton = f.model.alpha_clayton; break;
      case Family::Frank: carrier.alpha_frank = f.model.alpha_frank; break;
      case Family::Gumbel: carrier.alpha_gumbel = f.model.alpha_gumbel; break;
      case Family::StudentT:
        carrier.nu = f.model.nu;
        carrier.theta_t = f.model.theta_t;
        break;
      case Family::Gaussian: carrier.theta_normals = f.model.theta_normals; break;
    }
  }

  double current = out.report.aicc;
  for (int k = 1; k <= options.max_k; ++k) {
    SelectionStep step;
    step.k = k;
    step.initial = stepwise_start(carrier, k);
    MixtureFit fit;
    try {
      fit = fit_mixture(ws, step.initial, options.fit);
    } catch (const Error& e) {
      step.fitted = step.initial;
      step.note = std::string("fit failed: ") + e.what();
      out.trace.push_back(std::move(step));
      break;
    }
    step.fitted = fit.model;
    step.loglik = fit.report.loglik;
    step.df = fit.report.df;
    step.aicc = fit.report.aicc;
    step.converged = fit.report.converged;
    step.accepted = fit.report.aicc < current - options.aicc_slack;
    out.trace.push_back(step);
    if (!step.accepted) break;
    current = fit.report.aicc;
    out.model = fit.model;
    out.report = fit.report;
    carrier = fit.raw;
  }
  return out;
}

std::vector<std::string> parameter_names(const CfgtnModel& model) {
  const Structure s = structure_of(model);
  std::vector<std::string> names;
  if (s.clayton) names.push_back("w_clayton");
  if (s.frank) names.push_back("w_frank");
  if (s.gumbel) names.push_back("w_gumbel");
  if (s.t) names.push_back("w_t");
  for (int j = 1; j <= s.normals; ++j) names.push_back("w_normal" + std::to_string(j));
  if (s.clayton) names.push_back("alpha_clayton");
  if (s.frank) names.push_back("alpha_frank");
  if (s.gumbel) names.push_back("alpha_gumbel");
  const int p = model.dimension;
  auto angle_names = [&](const std::string& prefix) {
    for (int i = 1; i < p; ++i) {
      for (int j = 0; j < i; ++j) {
        names.push_back(prefix + "_" + std::to_string(i + 1) + std::to_string(j + 1));
      }
    }
  };
  if (s.t) {
    names.push_back("nu");
    angle_names("theta_t");
  }
  for (int j = 1; j <= s.normals; ++j) angle_names("theta_normal" + std::to_string(j));
  if (s.t) angle_names("rho_t");
  for (int j = 1; j <= s.normals; ++j) angle_names("rho_normal" + std::to_string(j));
  return names;
}

std::vector<double> parameter_values(const CfgtnModel& model) {
  std::vector<double> values = pack(model).values;
  auto correlations = [&](const AngleVector& theta) {
    const Eigen::MatrixXd R = angles_to_correlation(theta).matrix();
    for (int i = 1; i < model.dimension; ++i) {
      for (int j = 0; j < i; ++j) values.push_back(R(i, j));
    }
  };
  if (model.w_t > 0.0) correlations(model.theta_t);
  for (const auto& th : model.theta_normals) correlations(th);
  return values;
}

BootstrapResult bootstrap_from_indices(const PseudoSample& sample, const CfgtnModel& templ,
                                       const std::vector<std::vector<std::size_t>>& index_sets,
                                       const BootstrapOptions& options) {
  const int B = static_cast<int>(index_sets.size());
  if (B < 2) throw DomainError("bootstrap needs at least 2 resamples");
  templ.validate();
  if (templ.dimension != sample.dimension()) throw DomainError("model dimension does not match sample");

  BootstrapResult out;
  out.names = parameter_names(templ);
  out.resamples = B;
  const std::size_t width = out.names.size();

  struct Refit {
    std::vector<double> values;
    bool ok = false;
    bool converged = false;
  };
  std::vector<Refit> refits(index_sets.size());
  parallel_for(index_sets.size(), options.threads, [&](std::size_t b) {
    const auto& idx = index_sets[b];
    SampleMatrix rows(static_cast<Eigen::Index>(idx.size()), sample.dimension());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= sample.rows()) throw DomainError("bootstrap row index out of range");
      rows.row(static_cast<Eigen::Index>(i)) = sample.values().row(static_cast<Eigen::Index>(idx[i]));
    }
    try {
      LikelihoodWorkspace ws{PseudoSample(std::move(rows))};
      const MixtureFit fit = fit_mixture(ws, templ, options.fit);
      std::vector<double> v = parameter_values(fit.raw);
      if (v.size() != width) return;
      refits[b] = {std::move(v), true, fit.report.converged};
    } catch (const Error&) {
      // Counted as a failure below.
    }
  });

  for (auto& r : refits) {
    if (!r.ok) {
      ++out.failures;
      continue;
    }
    if (!r.converged) ++out.not_converged;
    out.estimates.push_back(std::move(r.values));
  }
  if (2 * out.failures > B) {
    throw ConvergenceError(std::to_string(out.failures) + " of " + std::to_string(B) +
                           " bootstrap refits failed");
  }
  if (out.estimates.size() < 2) throw ConvergenceError("fewer than 2 successful bootstrap refits");

  out.standard_errors.assign(width, 0.0);
  const double m = static_cast<double>(out.estimates.size());
  for (std::size_t j = 0; j < width; ++j) {
    double mean = 0.0;
    for (const auto& row : out.estimates) mean += row[j];
    mean /= m;
    double ss = 0.0;
    for (const auto& row : out.estimates) ss += (row[j] - mean) * (row[j] - mean);
    out.standard_errors[j] = std::sqrt(ss / (m - 1.0));
  }
  return out;
}

BootstrapResult bootstrap_standard_errors(const PseudoSample& sample, const CfgtnModel& templ,
                                          const BootstrapOptions& options) {
  if (options.resamples < 2) throw DomainError("bootstrap needs at least 2 resamples");
  std::vector<std::vector<std::size_t>> index_sets(static_cast<std::size_t>(options.resamples));
  for (std::size_t b = 0; b < index_sets.size(); ++b) {
    RandomStream stream(derive_seed(options.seed, b));
    auto& idx = index_sets[b];
    idx.resize(sample.rows());
    for (auto& i : idx) i = stream.index(sample.rows());
  }
  return bootstrap_from_indices(sample, templ, index_sets, options);
}

}  // namespace cfgtn
