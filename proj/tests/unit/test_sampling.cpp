#include <cmath>
#include <map>
#include <numeric>

#include <doctest.h>

#include "cfgtn/copula.hpp"
#include "cfgtn/errors.hpp"
#include "cfgtn/sampling.hpp"
#include "oracles.hpp"

using namespace cfgtn;

namespace {

std::vector<double> column(const PseudoSample& s, int j) {
  std::vector<double> out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) out[i] = s.values()(static_cast<Eigen::Index>(i), j);
  return out;
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("random stream is reproducible and roughly calibrated") {
    RandomStream a(5), b(5), c(6);
    CHECK(a.uniform() == b.uniform());
    CHECK(a.uniform() != c.uniform());
    RandomStream s(99);
    const int n = 200000;
    double sum = 0, sq = 0, g = 0, e = 0;
    for (int i = 0; i < n; ++i) {
      const double z = s.normal();
      sum += z;
      sq += z * z;
      g += s.gamma(2.5);
      e += s.exponential();
    }
    CHECK(std::fabs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(g / n == doctest::Approx(2.5).epsilon(0.01));
    CHECK(e / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  }

  TEST_CASE("fast Kendall tau equals the quadratic count, ties included") {
    RandomStream rs(3);
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t n = 50 + rs.index(300);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::floor(rs.uniform() * 20);
        y[i] = x[i] + std::floor(rs.uniform() * 10);
      }
      CHECK(kendall_tau(x, y) == doctest::Approx(oracle::kendall_tau_naive(x, y)).epsilon(1e-12));
    }
  }

  TEST_CASE("positive stable frailty has the right Laplace transform") {
    RandomStream rs(17);
    for (double a : {0.3, 0.6, 0.9}) {
      for (double s : {0.5, 2.0}) {
        const int n = 100000;
        double acc = 0.0, acc2 = 0.0;
        for (int i = 0; i < n; ++i) {
          const double v = std::exp(-s * sample_positive_stable(a, rs));
          acc += v;
          acc2 += v * v;
        }
        const double mean = acc / n;
        const double se = std::sqrt((acc2 / n - mean * mean) / n);
        CHECK(std::fabs(mean - std::exp(-std::pow(s, a))) < 5 * se + 1e-4);
      }
    }
  }

  TEST_CASE("logarithmic series frailty matches its pmf") {
    RandomStream rs(23);
    for (double alpha : {0.5, 3.0}) {
      const double theta = -std::expm1(-alpha);
      const int n = 100000;
      std::map<long, int> counts;
      for (int i = 0; i < n; ++i) ++counts[static_cast<long>(sample_log_series(alpha, rs))];
      for (long k = 1; k <= 4; ++k) {
        const double pk = std::pow(theta, k) / (-k * std::log1p(-theta));
        const double se = std::sqrt(pk * (1 - pk) / n);
        CHECK(std::fabs(counts[k] / double(n) - pk) < 5 * se);
      }
    }
    // Near the cap the variates are huge but finite.
    const double big = sample_log_series(50.0, rs);
    CHECK(std::isfinite(big));
    CHECK(big >= 1.0);
  }

  TEST_CASE("Archimedean samplers hit Kendall tau and the Kendall distribution") {
    struct Case {
      Family f;
      std::function<double(double)> phi, dphi;
    };
    for (double tau : {0.25, 0.6}) {
      const double ac = kendall_tau_to_param(Family::Clayton, tau);
      const double af = kendall_tau_to_param(Family::Frank, tau);
      const double ag = kendall_tau_to_param(Family::Gumbel, tau);
      const std::vector<Case> cases{
          {Family::Clayton, [=](double t) { return (std::pow(t, -ac) - 1) / ac; },
           [=](double t) { return -std::pow(t, -ac - 1); }},
          {Family::Frank, [=](double t) { return -std::log(std::expm1(-af * t) / std::expm1(-af)); },
           [=](double t) { return af * std::exp(-af * t) / std::expm1(-af * t); }},
          {Family::Gumbel, [=](double t) { return std::pow(-std::log(t), ag); },
           [=](double t) { return -ag * std::pow(-std::log(t), ag - 1) / t; }},
      };
      for (const auto& c : cases) {
        const double alpha = kendall_tau_to_param(c.f, tau);
        const auto s = sample_archimedean(20000, 2, c.f, alpha, 314);
        const auto u = column(s, 0), v = column(s, 1);
        CAPTURE(family_name(c.f));
        CHECK(std::fabs(kendall_tau(u, v) - tau) < 0.02);
        std::vector<double> w(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
          const oracle::Point pt{u[i], v[i]};
          w[i] = static_cast<double>(c.f == Family::Clayton  ? oracle::clayton_cdf(pt, alpha)
                                     : c.f == Family::Frank ? oracle::frank_cdf(pt, alpha)
                                                            : oracle::gumbel_cdf(pt, alpha));
        }
        const auto K = [&](double t) { return oracle::kendall_distribution(c.phi, c.dphi, t); };
        CHECK(oracle::ks_pvalue(w, K) > 0.001);
        CHECK(oracle::ks_pvalue(u, [](double x) { return x; }) > 0.001);
      }
    }
  }

  TEST_CASE("trivariate Archimedean samples have uniform margins and the pairwise tau") {
    for (Family f : {Family::Clayton, Family::Frank, Family::Gumbel}) {
      const auto s = sample_archimedean(10000, 3, f, kendall_tau_to_param(f, 0.5), 8);
      CHECK(std::fabs(mean_pairwise_kendall_tau(s) - 0.5) < 0.02);
      for (int j = 0; j < 3; ++j) CHECK(oracle::ks_pvalue(column(s, j), [](double x) { return x; }) > 0.001);
    }
  }

  TEST_CASE("elliptical samplers") {
    const double rho = 0.7;
    const auto R = CorrelationMatrix::exchangeable(2, rho);
    const double tau = 2 / std::numbers::pi * std::asin(rho);
    const auto g = sample_elliptical(20000, R, std::nullopt, 4);
    const auto t = sample_elliptical(20000, R, 3.0, 4);
    CHECK(std::fabs(kendall_tau(column(g, 0), column(g, 1)) - tau) < 0.02);
    CHECK(std::fabs(kendall_tau(column(t, 0), column(t, 1)) - tau) < 0.02);
    CHECK(oracle::ks_pvalue(column(t, 1), [](double x) { return x; }) > 0.001);
    // Normal scores of a Gaussian copula sample are N(0, 1).
    std::vector<double> z = column(g, 0);
    for (double& v : z) v = oracle::normal_quantile(v);
    CHECK(oracle::ks_pvalue(z, [](double x) { return static_cast<double>(oracle::std_normal_cdf(x)); }) > 0.001);
  }

  TEST_CASE("scenario registry") {
    const auto& names = scenario_names();
    CHECK(names.size() == 8);
    for (const auto& name : names) {
      const auto spec = make_scenario(name, 0.4, 3, 100);
      spec.validate();
      double w = 0;
      for (const auto& c : spec.components) w += c.weight;
      CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(spec.resolve().size() == spec.components.size());
    }
    const auto cfgt = make_scenario("cfgt5n", 0.4, 2, 10);
    CHECK(cfgt.components.size() == 5);
    CHECK(cfgt.components[0].weight == doctest::Approx(0.2));
    const auto t1 = make_scenario("table1", 0.9, 2, 10).resolve();
    CHECK(t1[0].alpha == 3.0);
    CHECK(t1[1].alpha == 10.0);
    CHECK(t1[2].correlation(0, 1) == 0.5);
    CHECK_THROWS_AS(make_scenario("gumbel-only", 0.4, 2, 10), DomainError);
  }

  TEST_CASE("mixture sampling is reproducible and respects the weights") {
    const auto spec = make_scenario("clayton-t5-t15", 0.6, 2, 30000);
    const auto a = sample_mixture(spec, 77);
    const auto b = sample_mixture(spec, 77);
    CHECK(a.sample.values() == b.sample.values());
    CHECK(a.labels == b.labels);
    std::vector<int> count(3, 0);
    for (int l : a.labels) ++count[l];
    for (int c : count) CHECK(std::fabs(c / 30000.0 - 1.0 / 3.0) < 0.015);
    CHECK(std::fabs(mean_pairwise_kendall_tau(a.sample) - 0.6) < 0.03);
  }

  TEST_CASE("single-component mixture reproduces the direct sampler") {
    ScenarioSpec spec{.name = "c", .dimension = 2, .n = 500, .components = {{.family = Family::Clayton, .weight = 1.0, .tau = {}, .param = 2.0, .dof = 0}}};
    const auto m = sample_mixture(spec, 9);
    const auto d = sample_archimedean(500, 2, Family::Clayton, 2.0, 9);
    CHECK(m.sample.values() == d.values());
  }

  TEST_CASE("pseudo-sample validation") {
    SampleMatrix bad(2, 2);
    bad << 0.1, 0.2, 1.0, 0.5;
    CHECK_THROWS_AS(PseudoSample{bad}, DomainError);
    SampleMatrix narrow(3, 1);
    narrow << 0.1, 0.2, 0.3;
    CHECK_THROWS_AS(PseudoSample{narrow}, DomainError);
  }
}
