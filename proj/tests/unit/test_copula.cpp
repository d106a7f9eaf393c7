#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "cfgtn/copula.hpp"
#include "cfgtn/errors.hpp"
#include "oracles.hpp"

using namespace cfgtn;

namespace {

using oracle::Point;

const std::vector<std::vector<double>> kPoints2{{0.2, 0.7}, {0.5, 0.5}, {0.9, 0.35}, {0.06, 0.1}, {0.93, 0.95}};
const std::vector<std::vector<double>> kPoints3{{0.2, 0.7, 0.4}, {0.5, 0.5, 0.5}, {0.9, 0.35, 0.8}, {0.1, 0.15, 0.08}};

Point to_ld(const std::vector<double>& u) { return Point(u.begin(), u.end()); }

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_SUITE("copula") {
  TEST_CASE("Archimedean densities are mixed partials of their CDFs") {
    struct Case {
      double alpha;
      double (*density)(std::span<const double>, double);
      long double (*cdf)(const Point&, long double);
    };
    const std::vector<Case> cases{
        {0.3, clayton_log_density, oracle::clayton_cdf}, {4.0, clayton_log_density, oracle::clayton_cdf},
        {0.5, frank_log_density, oracle::frank_cdf},     {9.0, frank_log_density, oracle::frank_cdf},
        {1.2, gumbel_log_density, oracle::gumbel_cdf},   {3.5, gumbel_log_density, oracle::gumbel_cdf},
    };
    for (const auto& c : cases) {
      for (const auto* pts : {&kPoints2, &kPoints3}) {
        for (const auto& u : *pts) {
          const auto cdf = [&](const Point& x) { return c.cdf(x, c.alpha); };
          const double ref = static_cast<double>(oracle::mixed_partial(cdf, to_ld(u)));
          const double got = std::exp(c.density(u, c.alpha));
          CAPTURE(c.alpha);
          CAPTURE(u.size());
          CHECK(rel(got, ref) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("jet and finite-difference oracles agree") {
    for (const auto* pts : {&kPoints2, &kPoints3}) {
      for (const auto& u : *pts) {
        const Point x = to_ld(u);
        CHECK(rel(oracle::clayton_density_ad(u, 2.0),
                  oracle::mixed_partial([](const Point& v) { return oracle::clayton_cdf(v, 2.0L); }, x)) < 1e-6);
        CHECK(rel(oracle::frank_density_ad(u, 5.0),
                  oracle::mixed_partial([](const Point& v) { return oracle::frank_cdf(v, 5.0L); }, x)) < 1e-6);
        CHECK(rel(oracle::gumbel_density_ad(u, 2.0),
                  oracle::mixed_partial([](const Point& v) { return oracle::gumbel_cdf(v, 2.0L); }, x)) < 1e-6);
      }
    }
    // Independence: the product CDF differentiates to exactly one.
    CHECK(oracle::gumbel_density_ad({0.3, 0.6, 0.2}, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("Archimedean densities match exact derivatives deep in the tails") {
    const std::vector<std::vector<double>> corners{{0.05, 0.95, 0.06}, {0.93, 0.07, 0.9}, {0.06, 0.94}, {0.97, 0.04}};
    for (const auto& u : corners) {
      for (double a : {0.5, 8.0, 20.0}) {
        CAPTURE(a);
        CHECK(rel(std::exp(clayton_log_density(u, a)), static_cast<double>(oracle::clayton_density_ad(u, a))) < 1e-9);
        CHECK(rel(std::exp(frank_log_density(u, a)), static_cast<double>(oracle::frank_density_ad(u, a))) < 1e-9);
        CHECK(rel(std::exp(gumbel_log_density(u, 1 + a)), static_cast<double>(oracle::gumbel_density_ad(u, 1 + a))) < 1e-9);
      }
    }
  }

  TEST_CASE("Frank density stays accurate for large alpha") {
    // Large alpha * u is where naive log(1 - e^-x) loses digits.
    // Off the diagonal the density is ~e^-20, beyond finite differences, so
    // the reference is the bivariate closed form.
    for (long double a : {25.0L, 45.0L}) {
      for (const auto& u : kPoints2) {
        const long double x = u[0], y = u[1];
        const long double d = -std::expm1(-a);
        // (1 - e^-a) - (1 - e^-ax)(1 - e^-ay), expanded to avoid cancellation.
        const long double den = std::exp(-a * x) + std::exp(-a * y) - std::exp(-a * (x + y)) - std::exp(-a);
        const long double ref = a * d * std::exp(-a * (x + y)) / (den * den);
        CAPTURE(u[0]);
        CHECK(rel(std::exp(frank_log_density(u, static_cast<double>(a))), static_cast<double>(ref)) < 1e-12);
      }
    }
  }

  TEST_CASE("Frank log density is smooth in alpha") {
    // Successive second differences stay at rounding level; the old
    // formulation jumped by ~1e-13 under ulp-sized moves.
    const std::vector<double> u{0.83, 0.91};
    const double a0 = 30.0, h = 1e-4;
    double worst = 0.0;
    for (int i = 1; i < 50; ++i) {
      const double f0 = frank_log_density(u, a0 + (i - 1) * h);
      const double f1 = frank_log_density(u, a0 + i * h);
      const double f2 = frank_log_density(u, a0 + (i + 1) * h);
      worst = std::max(worst, std::fabs(f2 - 2 * f1 + f0));
    }
    CHECK(worst < 1e-10);
  }

  TEST_CASE("Gaussian density matches the explicit-inverse formula") {
    const Eigen::Matrix3d R3 = oracle::correlation_from_angles_3(1.1, 0.7, 2.0);
    const CorrelationMatrix R(R3);
    for (const auto& u : kPoints3) {
      const double ref = static_cast<double>(oracle::gaussian_copula_density(u, R3));
      CHECK(rel(std::exp(gaussian_log_density(u, R)), ref) < 1e-12);
    }
  }

  TEST_CASE("t density matches the normal scale-mixture integral") {
    const Eigen::Matrix3d R3 = oracle::correlation_from_angles_3(0.9, 1.3, 2.2);
    for (double nu : {1.0, 5.0, 15.0, 60.0}) {
      for (const auto& u : kPoints3) {
        const double ref = static_cast<double>(oracle::t_copula_density(u, R3, nu));
        CAPTURE(nu);
        CHECK(rel(std::exp(student_t_log_density(u, CorrelationMatrix(R3), nu)), ref) < 1e-9);
      }
      for (const auto& u : kPoints2) {
        Eigen::Matrix2d R2;
        R2 << 1, -0.4, -0.4, 1;
        const double ref = static_cast<double>(oracle::t_copula_density(u, R2, nu));
        CHECK(rel(std::exp(student_t_log_density(u, CorrelationMatrix(R2), nu)), ref) < 1e-9);
      }
    }
  }

  TEST_CASE("t density at the origin of the bivariate nu = 5 copula") {
    const std::vector<double> u{0.5, 0.5};
    const double expected = std::tgamma(3.5) * std::tgamma(2.5) / (std::tgamma(3.0) * std::tgamma(3.0));
    CHECK(std::exp(student_t_log_density(u, CorrelationMatrix::identity(2), 5.0)) ==
          doctest::Approx(expected).epsilon(1e-13));
    CHECK(expected == doctest::Approx(1.104466).epsilon(1e-6));
  }

  TEST_CASE("densities integrate to one") {
    const auto rule = oracle::composite(-8.0L, 8.0L, 24, 8);
    const auto R = CorrelationMatrix::exchangeable(2, 0.6);
    const std::vector<std::pair<const char*, std::function<double(const std::vector<double>&)>>> dens{
        {"clayton", [](const std::vector<double>& u) { return std::exp(clayton_log_density(u, 2.0)); }},
        {"frank", [](const std::vector<double>& u) { return std::exp(frank_log_density(u, 5.7)); }},
        {"gumbel", [](const std::vector<double>& u) { return std::exp(gumbel_log_density(u, 1.8)); }},
        {"normal", [&](const std::vector<double>& u) { return std::exp(gaussian_log_density(u, R)); }},
        {"t", [&](const std::vector<double>& u) { return std::exp(student_t_log_density(u, R, 4.0)); }},
    };
    for (const auto& [name, f] : dens) {
      CAPTURE(name);
      CHECK(static_cast<double>(oracle::integrate_copula(f, 2, rule)) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("independence anchors") {
    for (const auto* pts : {&kPoints2, &kPoints3}) {
      for (const auto& u : *pts) {
        const int p = static_cast<int>(u.size());
        CHECK(clayton_log_density(u, 1e-9) == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(frank_log_density(u, 1e-7) == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(gumbel_log_density(u, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(gaussian_log_density(u, CorrelationMatrix::identity(p)) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(student_t_log_density(u, CorrelationMatrix::identity(p), 1e7) ==
              doctest::Approx(0.0).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("Gumbel coefficients agree with the falling-factorial expansion") {
    for (int p = 1; p <= 6; ++p) {
      for (double a : {0.05, 0.3, 0.5, 0.9, 1.0}) {
        const auto e = kernel::gumbel_coefficients(p, a);
        const auto ref = oracle::gumbel_coefficients(p, a);
        CHECK(e[0] == 0.0);
        for (int k = 1; k <= p; ++k) {
          CAPTURE(p);
          CAPTURE(k);
          CHECK(e[k] == doctest::Approx(static_cast<double>(ref[k])).epsilon(1e-10).scale(1e-300));
          CHECK(e[k] >= 0.0);
        }
      }
    }
  }

  TEST_CASE("Frank coefficients reproduce negative-order polylogarithms") {
    for (int p = 1; p <= 6; ++p) {
      const auto c = kernel::frank_coefficients(p);
      for (double y : {0.05, 0.4, 0.8}) {
        const double x = y / (1 - y);
        double poly = 0.0;
        for (int k = 0; k <= p; ++k) poly += c[k] * std::pow(x, k);
        CHECK(poly == doctest::Approx(static_cast<double>(oracle::polylog_negative(p - 1, y))).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("Kendall tau maps round-trip") {
    for (Family f : {Family::Clayton, Family::Frank, Family::Gumbel, Family::Gaussian, Family::StudentT}) {
      for (double tau : {0.01, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double param = kendall_tau_to_param(f, tau);
        CHECK(param_to_kendall_tau(f, param) == doctest::Approx(tau).epsilon(1e-10));
      }
    }
    CHECK(kendall_tau_to_param(Family::Clayton, 0.4) == doctest::Approx(4.0 / 3.0));
    CHECK(kendall_tau_to_param(Family::Gumbel, 0.6) == doctest::Approx(2.5));
    // Frank tau 0.5 is attained at alpha = 5.7363 (tabulated).
    CHECK(kendall_tau_to_param(Family::Frank, 0.5) == doctest::Approx(5.7363).epsilon(1e-4));
    CHECK_THROWS_AS(kendall_tau_to_param(Family::Clayton, 1.0), DomainError);
  }

  TEST_CASE("argument checking") {
    std::vector<double> bad{0.5, 1.5};
    CHECK_THROWS_AS(clayton_log_density(bad, 1.0), DomainError);
    std::vector<double> one{0.5};
    CHECK_THROWS_AS(frank_log_density(one, 1.0), DomainError);
    std::vector<double> ok{0.5, 0.5};
    CHECK_THROWS_AS(gumbel_log_density(ok, 0.9), DomainError);
    CHECK_THROWS_AS(clayton_log_density(ok, -1.0), DomainError);
    CHECK(family_from_name("gaussian") == Family::Gaussian);
    CHECK(family_name(Family::StudentT) == "t");
    CHECK_THROWS(family_from_name("joe"));
  }

  TEST_CASE("mixture density is the weighted sum") {
    CopulaComponent c{.family = Family::Clayton, .weight = 0.3, .alpha = 2.0};
    CopulaComponent g{.family = Family::Gaussian, .weight = 0.7, .correlation = CorrelationMatrix::exchangeable(2, 0.5)};
    MixtureDensity m({c, g});
    const std::vector<double> u{0.3, 0.6};
    const double ref = 0.3 * std::exp(clayton_log_density(u, 2.0)) +
                       0.7 * std::exp(gaussian_log_density(u, CorrelationMatrix::exchangeable(2, 0.5)));
    CHECK(m.density(u) == doctest::Approx(ref).epsilon(1e-14));
  }
}
