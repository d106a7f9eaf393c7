// cfgtn: fit, simulate, evaluate, compare-em-ip, bootstrap-se.
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgtn/em.hpp"
#include "cfgtn/errors.hpp"
#include "cfgtn/evaluation.hpp"
#include "cfgtn/io.hpp"
#include "cfgtn/marginals.hpp"
#include "cfgtn/parallel.hpp"
#include "cfgtn/selection.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cfgtn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  bool verbose = false;
};

struct SolverFlags {
  double mu0 = SolverSettings{}.mu_initial;
  double kkt_tol = SolverSettings{}.kkt_tolerance;
  int max_outer = SolverSettings{}.max_outer;
  double fd_step = SolverSettings{}.fd_step;
  double threshold = kDefaultThreshold;

  FitOptions options() const {
    FitOptions o;
    o.solver.mu_initial = mu0;
    o.solver.kkt_tolerance = kkt_tol;
    o.solver.max_outer = max_outer;
    o.solver.fd_step = fd_step;
    o.threshold = threshold;
    o.solver.validate();
    if (!(threshold >= 0.0 && threshold < 0.5)) throw InputError("threshold must lie in [0, 0.5)");
    return o;
  }

  json to_json() const {
    return {{"mu0", mu0}, {"kkt_tol", kkt_tol}, {"max_outer", max_outer}, {"fd_step", fd_step}};
  }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--mu0", f.mu0, "Initial barrier parameter")->capture_default_str();
  cmd->add_option("--kkt-tol", f.kkt_tol, "KKT residual tolerance")->capture_default_str();
  cmd->add_option("--max-outer", f.max_outer, "Barrier (outer) iteration cap")->capture_default_str();
  cmd->add_option("--fd-step", f.fd_step, "Relative finite-difference step")->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Weight below which a component is dropped")
      ->capture_default_str();
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << '\n';
}

// Raw data in, pseudo-observations out; marginal fits are appended to `report`.
PseudoSample prepare_sample(const std::string& input, const std::string& margins, json& report) {
  const CsvTable table = read_csv(input);
  const auto p = table.values.cols();
  const auto n = table.values.rows();
  if (p < 2) throw InputError("dimension must be at least 2");
  if (p > 6) throw InputError("dimension must be at most 6");
  if (n < 30) throw InputError("at least 30 rows are required");
  report["n"] = n;
  report["p"] = p;
  report["columns"] = table.header;
  report["margins"] = margins;
  if (margins == "empirical") return pseudo_observations(table.values);

  SampleMatrix u(n, p);
  json fits = json::array();
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd col = table.values.col(j);
    const TMarginalFit fit = fit_t_marginal({col.data(), static_cast<std::size_t>(n)});
    const auto uj = transform_with_t({col.data(), static_cast<std::size_t>(n)}, fit);
    for (Eigen::Index i = 0; i < n; ++i) u(i, j) = uj[static_cast<std::size_t>(i)];
    fits.push_back({{"column", table.header[static_cast<std::size_t>(j)]},
                    {"location", fit.location},
                    {"scale", fit.scale},
                    {"dof", fit.dof},
                    {"loglik", fit.loglik},
                    {"iterations", fit.iterations}});
  }
  report["marginal_fits"] = fits;
  return PseudoSample(std::move(u));
}

json report_json(const FitReport& r) {
  return {{"loglik", r.loglik},       {"df", r.df},
          {"aicc", r.aicc},           {"iterations", r.iterations},
          {"converged", r.converged}, {"kkt_residual", r.kkt_residual},
          {"angle_cap_hit", r.angle_cap_hit}};
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string input;
  std::string out = "model.json";
  std::string report;
  std::string trace;
  std::string margins = "empirical";
  int max_k = 8;
  SolverFlags solver;
};

int cmd_fit(const FitArgs& a, const Globals& g) {
  const auto start = std::chrono::steady_clock::now();
  json report;
  report["command"] = "fit";
  report["input"] = a.input;
  const PseudoSample sample = prepare_sample(a.input, a.margins, report);
  if (a.max_k < 0) throw InputError("max-k must be nonnegative");

  StepwiseOptions opts;
  opts.max_k = a.max_k;
  opts.fit = a.solver.options();
  LikelihoodWorkspace ws(sample);
  log(g, "fitting " + std::to_string(sample.rows()) + " x " + std::to_string(sample.dimension()));
  const SelectionResult sel = stepwise_fit(ws, opts);

  report["seed"] = g.seed;
  report["max_k"] = a.max_k;
  report["threshold"] = a.solver.threshold;
  report["solver"] = a.solver.to_json();
  report["structure"] = structure_label(sel.model);
  report["selected"] = report_json(sel.report);
  json singles = json::array();
  for (const auto& f : sel.single.fits) {
    json s = report_json(f.report);
    s["family"] = std::string(family_name(f.family));
    singles.push_back(s);
  }
  report["single_component"] = singles;
  std::vector<std::string> warnings = sel.single.warnings;
  if (sel.report.angle_cap_hit) warnings.push_back("a correlation angle sits on its [1e-6, pi - 1e-6] cap");
  report["warnings"] = warnings;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["metadata"] = {{"created", timestamp()}, {"wall_seconds", secs}};

  std::ostringstream trace;
  trace << "k,structure,loglik,df,aicc,accepted,converged,note\n";
  for (const auto& s : sel.trace) {
    trace << s.k << ',' << structure_label(s.fitted) << ',' << format_double(s.loglik) << ','
          << s.df << ',' << format_double(s.aicc) << ',' << (s.accepted ? 1 : 0) << ','
          << (s.converged ? 1 : 0) << ',' << s.note << '\n';
  }

  write_text_file(a.out, model_to_json(sel.model, sel.report));
  write_text_file(a.report.empty() ? sibling(a.out, ".report.json") : a.report, report.dump(2) + "\n");
  write_text_file(a.trace.empty() ? sibling(a.out, ".trace.csv") : a.trace, trace.str());
  log(g, "selected " + structure_label(sel.model) + ", AICc " + format_double(sel.report.aicc));
  if (!sel.report.converged) {
    std::cerr << "warning: selected fit did not converge; model written but flagged\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  double tau = 0.4;
  int p = 2;
  std::size_t n = 1000;
  std::string out = "sample.csv";
  std::string truth;
};

std::string scenario_list() {
  std::string s;
  for (const auto& name : scenario_names()) s += (s.empty() ? "" : ", ") + name;
  return s;
}

void check_scenario(const std::string& name) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InputError("unknown scenario '" + name + "'; valid names: " + scenario_list());
  }
}

int cmd_simulate(const SimulateArgs& a, const Globals& g) {
  check_scenario(a.scenario);
  if (a.p < 2) throw InputError("dimension must be at least 2");
  const ScenarioSpec spec = make_scenario(a.scenario, a.tau, a.p, a.n);
  const MixtureDraw draw = sample_mixture(spec, g.seed);
  std::ostringstream csv;
  write_sample_csv(csv, draw.sample.values());
  write_text_file(a.out, csv.str());
  write_text_file(a.truth.empty() ? sibling(a.out, ".scenario.json") : a.truth,
                  scenario_to_json(spec, g.seed));
  log(g, "wrote " + std::to_string(spec.n) + " rows of " + spec.name);
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth;
  std::string model;
  std::vector<std::string> scenarios;
  std::vector<double> taus;
  std::vector<std::size_t> sizes;
  std::vector<int> dims;
  bool full_grid = false;
  bool no_timing = false;
  int reps = 10;
  bool rerank = false;
  int grid_points = 0;
  int max_k = 8;
  std::string out = "mae.csv";
  SolverFlags solver;
};

// Common tau of a scenario's components, NaN when none is tau-specified.
double scenario_tau(const ScenarioSpec& spec) {
  for (const auto& c : spec.components) {
    if (c.tau) return *c.tau;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int cmd_evaluate(EvaluateArgs a, const Globals& g) {
  SuiteConfig cfg;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.rerank = a.rerank;
  cfg.grid_points = a.grid_points;
  cfg.replications = a.reps;
  cfg.stepwise.max_k = a.max_k;
  cfg.stepwise.fit = a.solver.options();
  if (a.reps < 1) throw InputError("reps must be at least 1");

  std::vector<ReplicationRecord> records;
  if (!a.truth.empty()) {
    if (!fs::exists(a.truth)) throw InputError("truth JSON not found: " + a.truth);
    const ScenarioSpec spec = scenario_from_json(read_text_file(a.truth));
    const double tau = scenario_tau(spec);
    if (!a.model.empty()) {
      if (!fs::exists(a.model)) throw InputError("model JSON not found: " + a.model);
      const CfgtnModel model = model_from_json(read_text_file(a.model));
      if (model.dimension != spec.dimension) throw InputError("model and truth dimensions differ");
      ReplicationRecord rec;
      rec.scenario = spec.name;
      rec.tau = tau;
      rec.p = spec.dimension;
      rec.n = spec.n;
      const int m = a.grid_points > 0 ? a.grid_points : default_grid_points(spec.dimension);
      rec.mae = mae_on_grid(model_density(model), true_density(spec), EvaluationGrid(spec.dimension, m));
      rec.structure = structure_label(model);
      records.push_back(rec);
    } else {
      records.resize(static_cast<std::size_t>(a.reps));
      parallel_for(records.size(), g.threads, [&](std::size_t r) {
        const int rep = static_cast<int>(r);
        const auto seed = replication_seed(g.seed, spec.name, tau, spec.dimension, spec.n, rep);
        records[r] = run_replication(spec, tau, rep, seed, cfg);
      });
    }
  } else {
    if (a.full_grid) {
      // The complete simulation protocol: seven scenarios, four tau levels,
      // three sample sizes, three dimensions.
      a.scenarios = {"clayton-frank", "clayton-t5",    "clayton-normal", "cfgt5n",
                     "clayton-t5-t15", "t5-t15",       "t5-t15-normal"};
      a.taus = {0.2, 0.4, 0.6, 0.8};
      a.sizes = {500, 1000, 2000};
      a.dims = {2, 3, 4};
    }
    if (a.scenarios.empty()) throw InputError("evaluate needs --truth, --scenarios or --full-grid");
    for (const auto& s : a.scenarios) check_scenario(s);
    cfg.scenarios = a.scenarios;
    cfg.taus = a.taus.empty() ? std::vector<double>{0.4} : a.taus;
    cfg.sizes = a.sizes.empty() ? std::vector<std::size_t>{1000} : a.sizes;
    cfg.dims = a.dims.empty() ? std::vector<int>{2} : a.dims;
    log(g, "running suite");
    records = run_scenario_suite(cfg);
  }

  if (a.no_timing) {
    for (auto& r : records) r.seconds = 0.0;
  }
  std::ostringstream csv;
  write_replication_csv(csv, records);
  write_text_file(a.out, csv.str());
  int failed = 0;
  for (const auto& r : records) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "warning: " << r.scenario << " rep " << r.rep << ": " << r.error << '\n';
    }
  }
  if (failed == static_cast<int>(records.size())) throw ConvergenceError("every replication failed");
  return failed > 0 ? kExitNotConverged : kExitOk;
}

// ---------------------------------------------------------------- compare-em-ip

struct CompareArgs {
  int reps = 20;
  std::size_t n = 1000;
  std::vector<int> em_iters{50, 100, 500};
  std::string out = "comparison.csv";
  std::string rows;
  bool no_timing = false;
  SolverFlags solver;
};

int cmd_compare(const CompareArgs& a, const Globals& g) {
  CompareConfig cfg;
  cfg.replications = a.reps;
  cfg.n = a.n;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.em_iterations = a.em_iters;
  cfg.fit = a.solver.options();
  if (a.reps < 1) throw InputError("reps must be at least 1");
  for (int k : a.em_iters) {
    if (k < 1) throw InputError("em-iters entries must be positive");
  }
  ComparisonResult result = compare_em_ip(cfg);
  if (a.no_timing) {
    for (auto& r : result.rows) r.seconds = 0.0;
    for (auto& s : result.summary) s.mean_seconds = 0.0;
  }
  std::ostringstream summary;
  write_comparison_csv(summary, result);
  write_text_file(a.out, summary.str());
  std::ostringstream rows;
  write_comparison_rows_csv(rows, result);
  write_text_file(a.rows.empty() ? sibling(a.out, ".rows.csv") : a.rows, rows.str());
  int not_converged = 0;
  for (const auto& r : result.rows) not_converged += r.converged ? 0 : 1;
  for (const auto& e : result.errors) {
    if (!e.empty()) std::cerr << "warning: " << e << '\n';
  }
  log(g, std::to_string(not_converged) + " fits did not converge");
  return not_converged > 0 ? kExitNotConverged : kExitOk;
}

// ---------------------------------------------------------------- bootstrap-se

struct BootstrapArgs {
  std::string input;
  std::string model;
  std::string margins = "empirical";
  int resamples = 200;
  std::string out = "se.csv";
  SolverFlags solver;
};

int cmd_bootstrap(const BootstrapArgs& a, const Globals& g) {
  if (!fs::exists(a.model)) throw InputError("model JSON not found: " + a.model);
  const CfgtnModel templ = model_from_json(read_text_file(a.model));
  json info;
  const PseudoSample sample = prepare_sample(a.input, a.margins, info);
  if (templ.dimension != sample.dimension()) throw InputError("model and data dimensions differ");
  BootstrapOptions opts;
  opts.resamples = a.resamples;
  opts.seed = g.seed;
  opts.threads = g.threads;
  opts.fit = a.solver.options();
  if (a.resamples < 2) throw InputError("resamples must be at least 2");
  const BootstrapResult r = bootstrap_standard_errors(sample, templ, opts);
  const auto estimates = parameter_values(templ);
  std::ostringstream csv;
  csv << "parameter,estimate,se\n";
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    csv << r.names[i] << ',' << format_double(estimates[i]) << ','
        << format_double(r.standard_errors[i]) << '\n';
  }
  write_text_file(a.out, csv.str());
  log(g, std::to_string(r.resamples) + " resamples, " + std::to_string(r.failures) + " failed, " +
             std::to_string(r.not_converged) + " not converged");
  return (r.failures > 0 || r.not_converged > 0) ? kExitNotConverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clayton/Frank/Gumbel/t/normal copula mixtures"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand too.
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--verbose", g.verbose, "Progress on stderr");

  const std::vector<std::string> margin_modes{"empirical", "t"};

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Stepwise AICc fit of a data file");
  c_fit->add_option("--input", fit.input, "CSV with a header row")->required();
  c_fit->add_option("--out", fit.out, "Model JSON")->capture_default_str();
  c_fit->add_option("--report", fit.report, "Report JSON (default <out>.report.json)");
  c_fit->add_option("--trace", fit.trace, "Selection trace CSV (default <out>.trace.csv)");
  c_fit->add_option("--margins", fit.margins, "Marginal transform")
      ->check(CLI::IsMember(margin_modes))
      ->capture_default_str();
  c_fit->add_option("--max-k", fit.max_k, "Largest number of normal components")->capture_default_str();
  add_solver_flags(c_fit, fit.solver);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a sample from a registry scenario");
  c_sim->add_option("--scenario", sim.scenario, "Scenario name")->required();
  c_sim->add_option("--tau", sim.tau, "Common Kendall tau")->capture_default_str();
  c_sim->add_option("--p", sim.p, "Dimension")->capture_default_str();
  c_sim->add_option("--n", sim.n, "Sample size")->capture_default_str();
  c_sim->add_option("--out", sim.out, "Sample CSV")->capture_default_str();
  c_sim->add_option("--truth", sim.truth, "Scenario JSON (default <out>.scenario.json)");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Grid MAE of stepwise fits against a known truth");
  c_ev->add_option("--truth", ev.truth, "Scenario JSON written by simulate");
  c_ev->add_option("--model", ev.model, "Score this model JSON against --truth instead of refitting");
  c_ev->add_option("--scenarios", ev.scenarios, "Registry scenarios")->delimiter(',');
  c_ev->add_option("--taus", ev.taus, "Kendall tau levels")->delimiter(',');
  c_ev->add_option("--sizes", ev.sizes, "Sample sizes")->delimiter(',');
  c_ev->add_option("--dims", ev.dims, "Dimensions")->delimiter(',');
  c_ev->add_flag("--full-grid", ev.full_grid, "Run the complete scenario x tau x n x p protocol");
  c_ev->add_flag("--no-timing", ev.no_timing, "Write 0 in the seconds column for byte-stable output");
  c_ev->add_option("--reps", ev.reps, "Replications per cell")->capture_default_str();
  c_ev->add_flag("--rerank", ev.rerank, "Fit pseudo-observations of the simulated sample");
  c_ev->add_option("--grid-points", ev.grid_points, "Points per axis (0 = by dimension)");
  c_ev->add_option("--max-k", ev.max_k, "Largest number of normal components")->capture_default_str();
  c_ev->add_option("--out", ev.out, "Long-format MAE CSV")->capture_default_str();
  add_solver_flags(c_ev, ev.solver);

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare-em-ip", "EM versus interior point on the reference mixture");
  c_cmp->add_option("--reps", cmp.reps, "Replications")->capture_default_str();
  c_cmp->add_option("--n", cmp.n, "Sample size")->capture_default_str();
  c_cmp->add_option("--em-iters", cmp.em_iters, "EM iteration budgets")->delimiter(',');
  c_cmp->add_option("--out", cmp.out, "Summary CSV")->capture_default_str();
  c_cmp->add_flag("--no-timing", cmp.no_timing, "Write 0 in the seconds columns");
  c_cmp->add_option("--rows", cmp.rows, "Per-replication CSV (default <out>.rows.csv)");
  add_solver_flags(c_cmp, cmp.solver);

  BootstrapArgs bs;
  auto* c_bs = app.add_subcommand("bootstrap-se", "Bootstrap standard errors for a fitted structure");
  c_bs->add_option("--input", bs.input, "Data CSV the model was fitted to")->required();
  c_bs->add_option("--model", bs.model, "Model JSON")->required();
  c_bs->add_option("--margins", bs.margins, "Marginal transform")
      ->check(CLI::IsMember(margin_modes))
      ->capture_default_str();
  c_bs->add_option("--resamples", bs.resamples, "Bootstrap resamples")->capture_default_str();
  c_bs->add_option("--out", bs.out, "Standard error CSV")->capture_default_str();
  add_solver_flags(c_bs, bs.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (c_fit->parsed()) return cmd_fit(fit, g);
    if (c_sim->parsed()) return cmd_simulate(sim, g);
    if (c_ev->parsed()) return cmd_evaluate(ev, g);
    if (c_cmp->parsed()) return cmd_compare(cmp, g);
    if (c_bs->parsed()) return cmd_bootstrap(bs, g);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
