#include <cmath>

#include <doctest.h>

#include "cfgtn/errors.hpp"
#include "cfgtn/optimizer.hpp"

using namespace cfgtn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("feasible unconstrained optimum on the simplex") {
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) {
      return (b[0] - 0.3) * (b[0] - 0.3) + (b[1] - 0.7) * (b[1] - 0.7);
    };
    prob.lower = {0, 0};
    prob.upper = {kInf, kInf};
    prob.eq_matrix = Eigen::RowVector2d(1, 1);
    prob.eq_rhs = Eigen::VectorXd::Ones(1);
    const std::vector<double> x0{0.5, 0.5};
    const auto r = interior_point_minimize(prob, x0);
    CHECK(r.report.converged);
    CHECK(std::fabs(r.beta[0] - 0.3) < 1e-6);
    CHECK(std::fabs(r.beta[1] - 0.7) < 1e-6);
  }

  TEST_CASE("log-barrier-like objective has the uniform minimizer") {
    for (int p : {2, 3, 5}) {
      NlpProblem prob;
      prob.objective = [](std::span<const double> b) {
        double f = 0;
        for (double v : b) f -= std::log(v);
        return f;
      };
      prob.lower.assign(p, 0.0);
      prob.upper.assign(p, kInf);
      prob.eq_matrix = Eigen::MatrixXd::Ones(1, p);
      prob.eq_rhs = Eigen::VectorXd::Ones(1);
      std::vector<double> x0(p);
      for (int i = 0; i < p; ++i) x0[i] = (i + 1.0) / (p * (p + 1) / 2.0);
      const auto r = interior_point_minimize(prob, x0);
      CHECK(r.report.converged);
      for (double v : r.beta) CHECK(std::fabs(v - 1.0 / p) < 1e-6);
    }
  }

  TEST_CASE("equality-constrained quadratic") {
    // Stationarity with one multiplier gives (0.6, 1.8, -1.4).
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) {
      return (b[0] - 1) * (b[0] - 1) + 2 * (b[1] - 2) * (b[1] - 2) + (b[2] + 1) * (b[2] + 1);
    };
    prob.lower = {-10, -10, -10};
    prob.upper = {10, 10, 10};
    prob.eq_matrix = Eigen::RowVector3d(1, 1, 1);
    prob.eq_rhs = Eigen::VectorXd::Ones(1);
    const std::vector<double> x0{0.2, 0.3, 0.5};
    const auto r = interior_point_minimize(prob, x0);
    CHECK(r.report.converged);
    CHECK(r.beta[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(r.beta[1] == doctest::Approx(1.8).epsilon(1e-6));
    CHECK(r.beta[2] == doctest::Approx(-1.4).epsilon(1e-6));
    CHECK(r.report.objective == doctest::Approx(0.16 + 0.08 + 0.16).epsilon(1e-6));
  }

  TEST_CASE("active linear inequality") {
    // The unconstrained minimum (2, 1) violates x + 2y <= 2; the projection is (1.6, 0.2).
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) {
      return (b[0] - 2) * (b[0] - 2) + (b[1] - 1) * (b[1] - 1);
    };
    prob.lower = {0, 0};
    prob.upper = {kInf, kInf};
    prob.ineq_matrix = Eigen::RowVector2d(1, 2);
    prob.ineq_rhs = Eigen::VectorXd::Constant(1, 2.0);
    const std::vector<double> x0{0.5, 0.5};
    const auto r = interior_point_minimize(prob, x0);
    CHECK(r.report.converged);
    CHECK(std::fabs(r.beta[0] - 1.6) < 1e-6);
    CHECK(std::fabs(r.beta[1] - 0.2) < 1e-6);
    CHECK(r.state.ineq_multipliers.maxCoeff() > 0.0);
  }

  TEST_CASE("active bound on a curved valley") {
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) {
      return (1 - b[0]) * (1 - b[0]) + 100 * (b[1] - b[0] * b[0]) * (b[1] - b[0] * b[0]);
    };
    prob.lower = {-2, -2};
    prob.upper = {0.5, 2};
    const std::vector<double> x0{-1.0, 1.0};
    const auto r = interior_point_minimize(prob, x0);
    CHECK(r.report.converged);
    CHECK(std::fabs(r.beta[0] - 0.5) < 1e-6);
    CHECK(std::fabs(r.beta[1] - 0.25) < 1e-6);
  }

  TEST_CASE("infeasible starts are rejected") {
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) { return b[0] * b[0]; };
    prob.lower = {0};
    prob.upper = {1};
    const std::vector<double> on_bound{0.0};
    CHECK_THROWS_AS(interior_point_minimize(prob, on_bound), InfeasibleStartError);
    prob.eq_matrix = Eigen::MatrixXd::Ones(1, 1);
    prob.eq_rhs = Eigen::VectorXd::Constant(1, 0.5);
    const std::vector<double> off_plane{0.3};
    CHECK_THROWS_AS(interior_point_minimize(prob, off_plane), InfeasibleStartError);
  }

  TEST_CASE("budget exhaustion is reported, not thrown") {
    NlpProblem prob;
    prob.objective = [](std::span<const double> b) { return std::pow(b[0] - 0.3, 4) + b[1] * b[1]; };
    prob.lower = {-1, -1};
    prob.upper = {1, 1};
    SolverSettings s;
    s.max_outer = 1;
    s.max_inner = 2;
    const std::vector<double> x0{0.9, 0.9};
    const auto r = interior_point_minimize(prob, x0, s);
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.status == "iteration budget exhausted");
    CHECK(r.report.objective <= r.report.initial_objective);
  }

  TEST_CASE("settings validation") {
    SolverSettings s;
    s.mu_shrink = 1.5;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = {};
    s.fd_step = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
  }

  TEST_CASE("finite-difference gradient matches the analytic gradient") {
    const Objective f = [](std::span<const double> b) {
      return std::sin(b[0]) * std::exp(0.5 * b[1]) + std::log1p(b[2] * b[2]) + 1e3 * b[0] * b[2];
    };
    const std::vector<std::vector<double>> points{{0.3, -1.2, 2.0}, {1e-3, 4.0, -0.7}, {150.0, 0.1, 3.0}};
    for (const auto& b : points) {
      const double e = std::exp(0.5 * b[1]);
      const std::vector<double> exact{std::cos(b[0]) * e + 1e3 * b[2], 0.5 * std::sin(b[0]) * e,
                                      2 * b[2] / (1 + b[2] * b[2]) + 1e3 * b[0]};
      const auto g = finite_difference_gradient(f, b, SolverSettings{}.fd_step);
      for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(g[i] - exact[i]) <= 1e-6 * std::max(1.0, std::fabs(exact[i])));
      }
    }
  }

  TEST_CASE("finite-difference gradient on simple objectives") {
    const Objective sq = [](std::span<const double> b) { return b[0] * b[0] + b[1] * b[1]; };
    const std::vector<double> b{1.0, 2.0};
    const auto g = finite_difference_gradient(sq, b, SolverSettings{}.fd_step);
    CHECK(std::fabs(g[0] - 2) < 1e-8);
    CHECK(std::fabs(g[1] - 4) < 1e-8);
    const Objective lg = [](std::span<const double> x) { return std::log(x[0]) + std::log(x[1]); };
    const std::vector<double> h{0.5, 0.5};
    const auto gl = finite_difference_gradient(lg, h, SolverSettings{}.fd_step);
    CHECK(std::fabs(gl[0] - 2) < 1e-6);
    CHECK(std::fabs(gl[1] - 2) < 1e-6);
  }

  TEST_CASE("one-sided fallback at a singular edge") {
    const Objective f = [](std::span<const double> b) { return b[0] < 0 ? NAN : b[0] * b[0] + b[0]; };
    const std::vector<double> at{1e-7};
    const auto g = finite_difference_gradient(f, at, 1e-6);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-4));
    const Objective bad = [](std::span<const double>) { return NAN; };
    CHECK_THROWS_AS(finite_difference_gradient(bad, at, 1e-6), NonFiniteError);
  }
}
