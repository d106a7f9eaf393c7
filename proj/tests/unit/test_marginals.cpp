#include <cmath>

#include <doctest.h>

#include "cfgtn/errors.hpp"
#include "cfgtn/marginals.hpp"
#include "cfgtn/special.hpp"

using namespace cfgtn;

TEST_SUITE("marginals") {
  TEST_CASE("average ranks") {
    const std::vector<double> x{3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0};
    const std::vector<double> expected{4, 1.5, 5, 1.5, 6.5, 9, 3, 8, 6.5};
    CHECK(average_ranks(x) == expected);
  }

  TEST_CASE("pseudo-observations are ranks over n + 1") {
    RawSample x(12, 2);
    for (int i = 0; i < 12; ++i) {
      x(i, 0) = std::sin(i * 1.7);
      x(i, 1) = i % 4;
    }
    const auto u = pseudo_observations(x);
    std::vector<double> c0(12), c1(12);
    for (int i = 0; i < 12; ++i) {
      c0[i] = x(i, 0);
      c1[i] = x(i, 1);
    }
    const auto r0 = average_ranks(c0), r1 = average_ranks(c1);
    for (int i = 0; i < 12; ++i) {
      CHECK(u.values()(i, 0) == doctest::Approx(r0[i] / 13.0));
      CHECK(u.values()(i, 1) == doctest::Approx(r1[i] / 13.0));
    }
    // Rank transform is invariant under increasing maps of a column.
    RawSample y = x;
    y.col(0) = (3.0 * x.col(0).array()).exp();
    CHECK(pseudo_observations(y).values() == u.values());
  }

  TEST_CASE("t marginal likelihood gradient matches finite differences") {
    std::vector<double> x;
    for (int i = 0; i < 40; ++i) x.push_back(std::tan(0.07 * i - 1.3) + 0.2 * i);
    const double loc = 1.5, scale = 2.0, dof = 4.0;
    double g[3];
    t_marginal_loglik(x, loc, scale, dof, g);
    const double h = 1e-6;
    auto at = [&](double dl, double ds, double dd) {
      return t_marginal_loglik(x, loc + dl, scale * std::exp(ds), dof * std::exp(dd));
    };
    CHECK(g[0] == doctest::Approx((at(h, 0, 0) - at(-h, 0, 0)) / (2 * h)).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx((at(0, h, 0) - at(0, -h, 0)) / (2 * h)).epsilon(1e-6));
    CHECK(g[2] == doctest::Approx((at(0, 0, h) - at(0, 0, -h)) / (2 * h)).epsilon(1e-6));
  }

  TEST_CASE("t marginal fit recovers location, scale and dof") {
    RandomStream rs(12);
    std::vector<double> x(20000);
    for (double& v : x) v = 2.0 + 3.0 * special::t_quantile(rs.uniform(), 5.0);
    const auto fit = fit_t_marginal(x);
    CHECK(fit.location == doctest::Approx(2.0).epsilon(0.03));
    CHECK(fit.scale == doctest::Approx(3.0).epsilon(0.05));
    CHECK(fit.dof == doctest::Approx(5.0).epsilon(0.15));
    const auto u = transform_with_t(x, fit);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(t_marginal_quantile(u[i], fit) == doctest::Approx(x[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("normal data pushes dof to the cap") {
    RandomStream rs(4);
    std::vector<double> x(5000);
    for (double& v : x) v = rs.normal();
    const auto fit = fit_t_marginal(x);
    CHECK(fit.dof > 30.0);
    CHECK(fit.dof <= kMarginalMaxDof);
  }

  TEST_CASE("marginal input errors") {
    CHECK_THROWS_AS(fit_t_marginal(std::vector<double>(5, 1.0)), InputError);
    CHECK_THROWS_AS(fit_t_marginal(std::vector<double>(50, 2.0)), InputError);
  }
}
