#include "cfgtn/evaluation.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <algorithm>
#include <memory>
#include <ostream>

#include "cfgtn/errors.hpp"
#include "cfgtn/marginals.hpp"
#include "cfgtn/parallel.hpp"

namespace cfgtn {

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

EvaluationGrid::EvaluationGrid(int dimension, int points_per_axis) : p_(dimension), m_(points_per_axis) {
  if (p_ < 1) throw DomainError("grid dimension must be positive");
  if (m_ < 2) throw DomainError("grid needs at least 2 points per axis");
}

double EvaluationGrid::axis(int i) const {
  if (i < 0 || i >= m_) throw DomainError("grid index out of range");
  return 0.01 + i * 0.98 / (m_ - 1);
}

std::size_t EvaluationGrid::size() const {
  std::size_t s = 1;
  for (int j = 0; j < p_; ++j) s *= static_cast<std::size_t>(m_);
  return s;
}

void EvaluationGrid::for_each(const std::function<void(std::span<const double>)>& visit) const {
  std::vector<double> values(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) values[i] = axis(i);
  std::vector<int> idx(static_cast<std::size_t>(p_), 0);
  std::vector<double> point(static_cast<std::size_t>(p_), values[0]);
  while (true) {
    visit(point);
    int j = p_ - 1;
    while (j >= 0 && ++idx[j] == m_) {
      idx[j] = 0;
      point[j] = values[0];
      --j;
    }
    if (j < 0) break;
    point[j] = values[idx[j]];
  }
}

int default_grid_points(int p) {
  switch (p) {
    case 2: return 100;
    case 3: return 50;
    case 4: return 25;
    default: return 10;
  }
}

double mae_on_grid(const DensityFunction& estimate, const DensityFunction& truth,
                   const EvaluationGrid& grid) {
  double total = 0.0;
  grid.for_each([&](std::span<const double> u) {
    const double a = estimate(u);
    const double b = truth(u);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      std::string where = "(";
      for (std::size_t j = 0; j < u.size(); ++j) where += (j ? "," : "") + num(u[j]);
      throw NonFiniteError("density not finite at grid point " + where + ")");
    }
    total += std::abs(a - b);
  });
  return total / static_cast<double>(grid.size());
}

DensityFunction model_density(const CfgtnModel& model) {
  return [model](std::span<const double> u) { return std::exp(mixture_log_density(model, u)); };
}

DensityFunction true_density(const ScenarioSpec& spec) {
  auto mixture = std::make_shared<MixtureDensity>(spec.resolve());
  return [mixture](std::span<const double> u) { return mixture->density(u); };
}

std::string structure_label(const CfgtnModel& model) {
  std::string label;
  auto add = [&](const std::string& part) { label += (label.empty() ? "" : "+") + part; };
  if (model.w_clayton > 0.0) add("C");
  if (model.w_frank > 0.0) add("F");
  if (model.w_gumbel > 0.0) add("G");
  if (model.w_t > 0.0) add("T");
  int k = 0;
  for (double w : model.normal_weights) k += w > 0.0;
  if (k > 0) add("N" + std::to_string(k));
  return label;
}

std::uint64_t replication_seed(std::uint64_t seed, const std::string& scenario, double tau, int p,
                               std::size_t n, int rep) {
  const std::string cell = scenario + "|" + num(tau) + "|" + std::to_string(p) + "|" + std::to_string(n);
  return derive_seed(derive_seed(seed, fnv1a(cell)), static_cast<std::uint64_t>(rep));
}

ReplicationRecord run_replication(const ScenarioSpec& spec, double tau, int rep, std::uint64_t seed,
                                  const SuiteConfig& config) {
  ReplicationRecord rec;
  rec.scenario = spec.name;
  rec.tau = tau;
  rec.p = spec.dimension;
  rec.n = spec.n;
  rec.rep = rep;
  try {
    const auto start = std::chrono::steady_clock::now();
    const MixtureDraw draw = sample_mixture(spec, seed);
    PseudoSample data = draw.sample;
    if (config.rerank) data = pseudo_observations(draw.sample.values());
    LikelihoodWorkspace ws(data);
    const SelectionResult sel = stepwise_fit(ws, config.stepwise);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const int m = config.grid_points > 0 ? config.grid_points : default_grid_points(spec.dimension);
    rec.mae = mae_on_grid(model_density(sel.model), true_density(spec),
                          EvaluationGrid(spec.dimension, m));
    rec.structure = structure_label(sel.model);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<ReplicationRecord> run_scenario_suite(const SuiteConfig& config) {
  if (config.scenarios.empty() || config.taus.empty() || config.sizes.empty() || config.dims.empty()) {
    throw DomainError("suite configuration lists must be nonempty");
  }
  if (config.replications < 1) throw DomainError("replications must be at least 1");
  struct Job {
    ScenarioSpec spec;
    double tau;
    int rep;
  };
  std::vector<Job> jobs;
  for (const auto& name : config.scenarios) {
    for (double tau : config.taus) {
      for (int p : config.dims) {
        for (std::size_t n : config.sizes) {
          const ScenarioSpec spec = make_scenario(name, tau, p, n);
          for (int r = 0; r < config.replications; ++r) jobs.push_back({spec, tau, r});
        }
      }
    }
  }
  std::vector<ReplicationRecord> records(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const std::uint64_t seed = replication_seed(config.seed, job.spec.name, job.tau,
                                                job.spec.dimension, job.spec.n, job.rep);
    records[i] = run_replication(job.spec, job.tau, job.rep, seed, config);
  });
  return records;
}

void write_replication_csv(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  out << "scenario,tau,p,n,rep,mae,seconds,structure\n";
  for (const auto& r : records) {
    // Scenarios without a common tau (fixed-parameter mixtures) report NA.
    const std::string tau = std::isfinite(r.tau) ? num(r.tau) : "NA";
    out << r.scenario << ',' << tau << ',' << r.p << ',' << r.n << ',' << r.rep << ','
        << (r.error.empty() ? num(r.mae) : "NA") << ',' << num(r.seconds) << ','
        << (r.error.empty() ? r.structure : "failed") << '\n';
  }
}

namespace {

ComparisonRow row_of(int rep, const std::string& algorithm, const CfgtnModel& m, double loglik,
                     double seconds, bool converged) {
  ComparisonRow row;
  row.rep = rep;
  row.algorithm = algorithm;
  row.loglik = loglik;
  row.seconds = seconds;
  row.w_clayton = m.w_clayton;
  row.w_gumbel = m.w_gumbel;
  row.w_normal = m.normal_weights.empty() ? 0.0 : m.normal_weights[0];
  row.alpha_clayton = m.alpha_clayton;
  row.alpha_gumbel = m.alpha_gumbel;
  row.rho = m.theta_normals.empty() ? 0.0 : angles_to_correlation(m.theta_normals[0])(1, 0);
  row.converged = converged;
  return row;
}

}  // namespace

ComparisonResult compare_em_ip(const CompareConfig& config) {
  if (config.replications < 1) throw DomainError("replications must be at least 1");
  const ScenarioSpec spec = make_scenario("table1", 0.0, 2, config.n);
  const int max_em = config.em_iterations.empty()
                         ? 0
                         : *std::max_element(config.em_iterations.begin(), config.em_iterations.end());

  std::vector<std::vector<ComparisonRow>> per_rep(static_cast<std::size_t>(config.replications));
  std::vector<std::string> errors(per_rep.size());
  parallel_for(per_rep.size(), config.threads, [&](std::size_t r) {
    const int rep = static_cast<int>(r);
    try {
      const MixtureDraw draw = sample_mixture(spec, derive_seed(config.seed, r));
      LikelihoodWorkspace ws(draw.sample);

      const auto setup_start = std::chrono::steady_clock::now();
      CfgtnModel start = CfgtnModel::empty(2);
      start.w_clayton = start.w_gumbel = 1.0 / 3.0;
      start.normal_weights = {1.0 / 3.0};
      start.alpha_clayton = fit_single_family(ws, Family::Clayton, config.fit).model.alpha_clayton;
      start.alpha_gumbel = fit_single_family(ws, Family::Gumbel, config.fit).model.alpha_gumbel;
      start.theta_normals = fit_single_family(ws, Family::Gaussian, config.fit).model.theta_normals;
      const double setup =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - setup_start).count();

      const MixtureFit ip = fit_mixture(ws, start, config.fit);
      per_rep[r].push_back(row_of(rep, "IP", ip.raw, ws.log_likelihood(ip.raw),
                                  setup + ip.report.wall_time, ip.report.converged));
      if (max_em > 0) {
        EmOptions em_opts;
        em_opts.max_iter = max_em;
        em_opts.snapshots = config.em_iterations;
        em_opts.fit = config.fit;
        const EmResult em = em_fit(ws, start, em_opts);
        for (int iters : config.em_iterations) {
          for (const auto& snap : em.snapshots) {
            if (snap.iteration != iters) continue;
            per_rep[r].push_back(row_of(rep, "EM-" + std::to_string(iters), snap.model, snap.loglik,
                                        setup + snap.seconds, em.max_decrease <= kEmAscentSlack));
          }
        }
      }
    } catch (const std::exception& e) {
      errors[r] = "replication " + std::to_string(rep) + ": " + e.what();
      per_rep[r].clear();
    }
  });

  ComparisonResult out;
  for (std::size_t r = 0; r < per_rep.size(); ++r) {
    for (auto& row : per_rep[r]) out.rows.push_back(std::move(row));
    if (!errors[r].empty()) out.errors.push_back(errors[r]);
  }

  std::vector<std::string> algorithms{"IP"};
  for (int iters : config.em_iterations) algorithms.push_back("EM-" + std::to_string(iters));
  const auto truth = spec.resolve();
  const double true_rho = truth[2].correlation.matrix()(1, 0);
  for (const auto& alg : algorithms) {
    ComparisonSummary s;
    s.algorithm = alg;
    auto sq = [](double a, double b) { return (a - b) * (a - b); };
    for (const auto& row : out.rows) {
      if (row.algorithm != alg) continue;
      ++s.replications;
      s.mean_loglik += row.loglik;
      s.mean_seconds += row.seconds;
      s.rmse_w_clayton += sq(row.w_clayton, truth[0].weight);
      s.rmse_w_gumbel += sq(row.w_gumbel, truth[1].weight);
      s.rmse_w_normal += sq(row.w_normal, truth[2].weight);
      s.rmse_alpha_clayton += sq(row.alpha_clayton, truth[0].alpha);
      s.rmse_alpha_gumbel += sq(row.alpha_gumbel, truth[1].alpha);
      s.rmse_rho += sq(row.rho, true_rho);
    }
    if (s.replications > 0) {
      const double k = s.replications;
      s.mean_loglik /= k;
      s.mean_seconds /= k;
      for (double* v : {&s.rmse_w_clayton, &s.rmse_w_gumbel, &s.rmse_w_normal,
                        &s.rmse_alpha_clayton, &s.rmse_alpha_gumbel, &s.rmse_rho}) {
        *v = std::sqrt(*v / k);
      }
    }
    out.summary.push_back(s);
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const ComparisonResult& result) {
  out << "algorithm,replications,mean_loglik,mean_seconds,rmse_w_clayton,rmse_w_gumbel,"
         "rmse_w_normal,rmse_alpha_clayton,rmse_alpha_gumbel,rmse_rho\n";
  for (const auto& s : result.summary) {
    out << s.algorithm << ',' << s.replications << ',' << num(s.mean_loglik) << ','
        << num(s.mean_seconds) << ',' << num(s.rmse_w_clayton) << ',' << num(s.rmse_w_gumbel) << ','
        << num(s.rmse_w_normal) << ',' << num(s.rmse_alpha_clayton) << ','
        << num(s.rmse_alpha_gumbel) << ',' << num(s.rmse_rho) << '\n';
  }
}

void write_comparison_rows_csv(std::ostream& out, const ComparisonResult& result) {
  out << "rep,algorithm,loglik,seconds,w_clayton,w_gumbel,w_normal,alpha_clayton,alpha_gumbel,rho,"
         "converged\n";
  for (const auto& r : result.rows) {
    out << r.rep << ',' << r.algorithm << ',' << num(r.loglik) << ',' << num(r.seconds) << ','
        << num(r.w_clayton) << ',' << num(r.w_gumbel) << ',' << num(r.w_normal) << ','
        << num(r.alpha_clayton) << ',' << num(r.alpha_gumbel) << ',' << num(r.rho) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

}  // namespace cfgtn
