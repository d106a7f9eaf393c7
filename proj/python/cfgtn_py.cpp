#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "cfgtn/copula.hpp"
#include "cfgtn/correlation.hpp"
#include "cfgtn/errors.hpp"
#include "cfgtn/evaluation.hpp"
#include "cfgtn/io.hpp"
#include "cfgtn/likelihood.hpp"
#include "cfgtn/marginals.hpp"
#include "cfgtn/model.hpp"
#include "cfgtn/sampling.hpp"
#include "cfgtn/selection.hpp"

namespace py = pybind11;
using namespace cfgtn;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

PseudoSample to_sample(const RowMatrix& u) { return PseudoSample(SampleMatrix(u)); }

CorrelationMatrix correlation_arg(const std::optional<Eigen::MatrixXd>& corr, std::optional<double> rho, int p) {
  if (corr) return CorrelationMatrix(*corr);
  if (rho) return CorrelationMatrix::exchangeable(p, *rho);
  throw InputError("elliptical families need corr or rho");
}

Eigen::VectorXd log_density(const std::string& family, const RowMatrix& u, std::optional<double> alpha,
                            std::optional<double> rho, std::optional<Eigen::MatrixXd> corr,
                            std::optional<double> nu) {
  const Family f = family_from_name(family);
  const int p = static_cast<int>(u.cols());
  Eigen::VectorXd out(u.rows());
  std::optional<CorrelationMatrix> R;
  if (!is_archimedean(f)) R = correlation_arg(corr, rho, p);
  if (is_archimedean(f) && !alpha) throw InputError("Archimedean families need alpha");
  if (f == Family::StudentT && !nu) throw InputError("the t family needs nu");
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const std::span<const double> row(u.data() + i * p, static_cast<std::size_t>(p));
    switch (f) {
      case Family::Clayton: out(i) = clayton_log_density(row, *alpha); break;
      case Family::Frank: out(i) = frank_log_density(row, *alpha); break;
      case Family::Gumbel: out(i) = gumbel_log_density(row, *alpha); break;
      case Family::Gaussian: out(i) = gaussian_log_density(row, *R); break;
      case Family::StudentT: out(i) = student_t_log_density(row, *R, *nu); break;
    }
  }
  return out;
}

Eigen::VectorXd model_log_density(const std::string& model_json, const RowMatrix& u) {
  const CfgtnModel m = model_from_json(model_json);
  Eigen::VectorXd out(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    out(i) = mixture_log_density(m, std::span<const double>(u.data() + i * u.cols(), static_cast<std::size_t>(u.cols())));
  }
  return out;
}

py::dict step_dict(const SelectionStep& s) {
  py::dict d;
  d["k"] = s.k;
  d["structure"] = structure_label(s.fitted);
  d["loglik"] = s.loglik;
  d["df"] = s.df;
  d["aicc"] = s.aicc;
  d["accepted"] = s.accepted;
  d["converged"] = s.converged;
  d["note"] = s.note;
  return d;
}

py::dict fit(const RowMatrix& u, int max_k) {
  const PseudoSample sample = to_sample(u);
  LikelihoodWorkspace ws(sample);
  StepwiseOptions opts;
  opts.max_k = max_k;
  SelectionResult r;
  {
    py::gil_scoped_release release;
    r = stepwise_fit(ws, opts);
  }
  py::dict d;
  d["model"] = model_to_json(r.model, r.report);
  d["structure"] = structure_label(r.model);
  d["loglik"] = r.report.loglik;
  d["df"] = r.report.df;
  d["aicc"] = r.report.aicc;
  d["converged"] = r.report.converged;
  py::list trace;
  for (const auto& s : r.trace) trace.append(step_dict(s));
  d["trace"] = trace;
  return d;
}

py::dict fit_family(const RowMatrix& u, const std::string& family) {
  const PseudoSample sample = to_sample(u);
  LikelihoodWorkspace ws(sample);
  const SingleFit f = fit_single_family(ws, family_from_name(family));
  py::dict d;
  d["model"] = model_to_json(f.model, f.report);
  d["loglik"] = f.report.loglik;
  d["aicc"] = f.report.aicc;
  d["converged"] = f.report.converged;
  return d;
}

py::tuple simulate(const std::string& scenario, double tau, int p, std::size_t n, std::uint64_t seed) {
  const ScenarioSpec spec = make_scenario(scenario, tau, p, n);
  const MixtureDraw draw = sample_mixture(spec, seed);
  return py::make_tuple(RowMatrix(draw.sample.values()), draw.labels);
}

RowMatrix sample_copula(const std::string& family, std::size_t n, int p, std::optional<double> alpha,
                        std::optional<double> rho, std::optional<Eigen::MatrixXd> corr, std::optional<double> nu,
                        std::uint64_t seed) {
  const Family f = family_from_name(family);
  if (is_archimedean(f)) {
    if (!alpha) throw InputError("Archimedean families need alpha");
    return sample_archimedean(n, p, f, *alpha, seed).values();
  }
  if (f == Family::StudentT && !nu) throw InputError("the t family needs nu");
  return sample_elliptical(n, correlation_arg(corr, rho, p), f == Family::StudentT ? nu : std::nullopt, seed).values();
}

double mae(const std::string& model_json, const std::string& scenario, double tau, int p, int grid_points) {
  const CfgtnModel m = model_from_json(model_json);
  const ScenarioSpec spec = make_scenario(scenario, tau, p, 1000);
  const EvaluationGrid grid(p, grid_points > 0 ? grid_points : default_grid_points(p));
  return mae_on_grid(model_density(m), true_density(spec), grid);
}

}  // namespace

PYBIND11_MODULE(_cfgtn, m) {
  m.doc() = "Copula mixtures of Clayton, Frank, Gumbel, t and Gaussian components";

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("log_density", &log_density, py::arg("family"), py::arg("u"), py::kw_only(), py::arg("alpha") = py::none(),
        py::arg("rho") = py::none(), py::arg("corr") = py::none(), py::arg("nu") = py::none(),
        "Row-wise log copula density of one family.");
  m.def("tau_to_param", [](const std::string& f, double tau) { return kendall_tau_to_param(family_from_name(f), tau); });
  m.def("param_to_tau", [](const std::string& f, double v) { return param_to_kendall_tau(family_from_name(f), v); });

  m.def("angles_to_correlation", [](const std::vector<double>& a) {
    return Eigen::MatrixXd(angles_to_correlation(AngleVector(a)).matrix());
  });
  m.def("correlation_to_angles", [](const Eigen::MatrixXd& R) {
    return correlation_to_angles(CorrelationMatrix(R)).values();
  });

  m.def("scenario_names", &scenario_names);
  m.def("simulate", &simulate, py::arg("scenario"), py::arg("tau"), py::arg("p") = 2, py::arg("n") = 1000,
        py::arg("seed") = kDefaultSeed, "Draw a scenario sample; returns (u, component labels).");
  m.def("sample_copula", &sample_copula, py::arg("family"), py::arg("n"), py::arg("p") = 2, py::kw_only(),
        py::arg("alpha") = py::none(), py::arg("rho") = py::none(), py::arg("corr") = py::none(),
        py::arg("nu") = py::none(), py::arg("seed") = kDefaultSeed);
  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); });

  m.def("pseudo_observations", [](const RowMatrix& x) { return RowMatrix(pseudo_observations(SampleMatrix(x)).values()); });
  m.def("fit_t_marginal", [](const std::vector<double>& x) {
    const TMarginalFit f = fit_t_marginal(x);
    py::dict d;
    d["location"] = f.location;
    d["scale"] = f.scale;
    d["dof"] = f.dof;
    d["loglik"] = f.loglik;
    return d;
  });

  m.def("fit", &fit, py::arg("u"), py::arg("max_k") = 8,
        "Stepwise AICc selection; the model is returned as JSON text.");
  m.def("fit_family", &fit_family, py::arg("u"), py::arg("family"));
  m.def("model_log_density", &model_log_density, py::arg("model_json"), py::arg("u"));
  m.def("degrees_of_freedom", [](const std::string& j) { return degrees_of_freedom(model_from_json(j)); });
  m.def("aicc", &aicc, py::arg("loglik"), py::arg("df"), py::arg("n"));
  m.def("mae", &mae, py::arg("model_json"), py::arg("scenario"), py::arg("tau"), py::arg("p") = 2,
        py::arg("grid_points") = 0, "Grid MAE of a model against a scenario's true density.");
}
