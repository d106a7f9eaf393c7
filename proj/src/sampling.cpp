#include "cfgtn/sampling.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfgtn/errors.hpp"
#include "cfgtn/special.hpp"

namespace cfgtn {

namespace {

constexpr std::uint64_t kLabelStream = 0x6c6162656c73ULL;

double open_unit(double u) { return std::clamp(u, DBL_MIN, std::nextafter(1.0, 0.0)); }

}  // namespace

PseudoSample::PseudoSample(SampleMatrix values) : values_(std::move(values)) {
  if (values_.cols() < 2) throw DomainError("pseudo-sample dimension must be at least 2");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double u = values_.data()[i];
    if (!(u > 0.0 && u < 1.0)) throw DomainError("pseudo-observation outside (0,1)");
  }
}

double sample_positive_stable(double index, RandomStream& stream) {
  if (!(index > 0.0 && index <= 1.0)) throw DomainError("stable index must lie in (0,1]");
  if (index == 1.0) return 1.0;
  const double a = index;
  const double theta = std::numbers::pi * stream.uniform();
  const double w = stream.exponential();
  // Kanter: V = (A(theta)/W)^((1-a)/a), with
  // A = (sin(a th)^a sin((1-a) th)^(1-a) / sin th)^(1/(1-a)).
  const double num = a * std::log(std::sin(a * theta)) +
                     (1.0 - a) * std::log(std::sin((1.0 - a) * theta)) - std::log(std::sin(theta));
  return std::exp(num / a - (1.0 - a) / a * std::log(w));
}

double sample_log_series(double alpha, RandomStream& stream) {
  const double p = -std::expm1(-alpha);
  const double u = stream.uniform();
  if (u > p) return 1.0;
  const double q = -std::expm1(-alpha * stream.uniform());
  if (u < q * q) return std::floor(1.0 + std::log(u) / std::log(q));
  return u > q ? 1.0 : 2.0;
}

ComponentSampler::ComponentSampler(const CopulaComponent& component, int p)
    : component_(component), p_(p) {
  if (p < 2) throw DomainError("sampling dimension must be at least 2");
  if (is_archimedean(component.family)) {
    check_archimedean_param(component.family, component.alpha);
  } else {
    if (component.correlation.dimension() != p) {
      throw DomainError("correlation dimension does not match p");
    }
    if (component.family == Family::StudentT && !(component.dof > 0.0)) {
      throw DomainError("t copula degrees of freedom must be > 0");
    }
    factor_ = correlation_to_cholesky(component.correlation);
  }
}

void ComponentSampler::draw(RandomStream& stream, std::span<double> out) const {
  const double alpha = component_.alpha;
  switch (component_.family) {
    case Family::Clayton: {
      const double v = stream.gamma(1.0 / alpha);
      for (double& u : out) u = open_unit(std::exp(-std::log1p(stream.exponential() / v) / alpha));
      return;
    }
    case Family::Gumbel: {
      const double a = 1.0 / alpha;
      const double v = sample_positive_stable(a, stream);
      for (double& u : out) u = open_unit(std::exp(-std::pow(stream.exponential() / v, a)));
      return;
    }
    case Family::Frank: {
      const double v = sample_log_series(alpha, stream);
      const double c = std::expm1(-alpha);
      for (double& u : out) {
        u = open_unit(-std::log1p(c * std::exp(-stream.exponential() / v)) / alpha);
      }
      return;
    }
    case Family::Gaussian:
    case Family::StudentT: {
      const auto& L = factor_.matrix();
      Eigen::VectorXd n(p_);
      for (int j = 0; j < p_; ++j) n(j) = stream.normal();
      Eigen::VectorXd z = L.triangularView<Eigen::Lower>() * n;
      if (component_.family == Family::Gaussian) {
        for (int j = 0; j < p_; ++j) out[j] = open_unit(special::normal_cdf(z(j)));
      } else {
        const double nu = component_.dof;
        const double scale = std::sqrt(nu / stream.chi_squared(nu));
        for (int j = 0; j < p_; ++j) out[j] = open_unit(special::t_cdf(z(j) * scale, nu));
      }
      return;
    }
  }
}

namespace {

PseudoSample draw_rows(const ComponentSampler& sampler, std::size_t n, int p, std::uint64_t seed) {
  RandomStream stream(seed);
  SampleMatrix values(static_cast<Eigen::Index>(n), p);
  for (std::size_t i = 0; i < n; ++i) {
    sampler.draw(stream, {values.data() + i * p, static_cast<std::size_t>(p)});
  }
  return PseudoSample(std::move(values));
}

}  // namespace

PseudoSample sample_archimedean(std::size_t n, int p, Family family, double alpha,
                                std::uint64_t seed) {
  if (!is_archimedean(family)) throw DomainError("sample_archimedean: not an Archimedean family");
  if (n < 1) throw DomainError("sample size must be positive");
  CopulaComponent c{.family = family, .weight = 1.0, .alpha = alpha};
  return draw_rows(ComponentSampler(c, p), n, p, seed);
}

PseudoSample sample_elliptical(std::size_t n, const CorrelationMatrix& R,
                               std::optional<double> nu, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample size must be positive");
  CopulaComponent c{.family = nu ? Family::StudentT : Family::Gaussian,
                    .weight = 1.0,
                    .dof = nu.value_or(0.0),
                    .correlation = R};
  return draw_rows(ComponentSampler(c, R.dimension()), n, R.dimension(), seed);
}

void ScenarioSpec::validate() const {
  if (components.empty()) throw DomainError("scenario has no components");
  if (dimension < 2) throw DomainError("scenario dimension must be at least 2");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw DomainError("scenario weights must be nonnegative");
    total += c.weight;
    if (c.tau && !(*c.tau > 0.0 && *c.tau < 1.0)) throw DomainError("scenario tau outside (0,1)");
    if (!c.tau && !c.param) throw DomainError("scenario component needs tau or param");
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("scenario weights must sum to 1");
}

std::vector<CopulaComponent> ScenarioSpec::resolve() const {
  validate();
  std::vector<CopulaComponent> out;
  for (const auto& sc : components) {
    const double param = sc.param ? *sc.param : kendall_tau_to_param(sc.family, *sc.tau);
    CopulaComponent c{.family = sc.family, .weight = sc.weight};
    if (is_archimedean(sc.family)) {
      c.alpha = param;
    } else {
      c.correlation = CorrelationMatrix::exchangeable(dimension, param);
      c.dof = sc.family == Family::StudentT ? sc.dof : 0.0;
    }
    out.push_back(std::move(c));
  }
  return out;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "clayton-frank", "clayton-t5",    "clayton-normal", "cfgt5n",
      "clayton-t5-t15", "t5-t15",       "t5-t15-normal",  "table1"};
  return names;
}

ScenarioSpec make_scenario(const std::string& name, double tau, int p, std::size_t n) {
  ScenarioSpec spec{.name = name, .dimension = p, .n = n, .components = {}};
  auto add = [&](Family f, double dof = 0.0) {
    spec.components.push_back({.family = f, .weight = 0.0, .tau = tau, .param = {}, .dof = dof});
  };
  if (name == "clayton-frank") {
    add(Family::Clayton);
    add(Family::Frank);
  } else if (name == "clayton-t5") {
    add(Family::Clayton);
    add(Family::StudentT, 5.0);
  } else if (name == "clayton-normal") {
    add(Family::Clayton);
    add(Family::Gaussian);
  } else if (name == "cfgt5n") {
    add(Family::Clayton);
    add(Family::Frank);
    add(Family::Gumbel);
    add(Family::StudentT, 5.0);
    add(Family::Gaussian);
  } else if (name == "clayton-t5-t15") {
    add(Family::Clayton);
    add(Family::StudentT, 5.0);
    add(Family::StudentT, 15.0);
  } else if (name == "t5-t15") {
    add(Family::StudentT, 5.0);
    add(Family::StudentT, 15.0);
  } else if (name == "t5-t15-normal") {
    add(Family::StudentT, 5.0);
    add(Family::StudentT, 15.0);
    add(Family::Gaussian);
  } else if (name == "table1") {
    spec.components = {
        {.family = Family::Clayton, .weight = 0.40, .tau = {}, .param = 3.0, .dof = 0.0},
        {.family = Family::Gumbel, .weight = 0.25, .tau = {}, .param = 10.0, .dof = 0.0},
        {.family = Family::Gaussian, .weight = 0.35, .tau = {}, .param = 0.5, .dof = 0.0},
    };
    spec.validate();
    return spec;
  } else {
    std::string valid;
    for (const auto& s : scenario_names()) valid += (valid.empty() ? "" : ", ") + s;
    throw DomainError("unknown scenario '" + name + "'; valid names: " + valid);
  }
  const double w = 1.0 / static_cast<double>(spec.components.size());
  for (auto& c : spec.components) c.weight = w;
  // Equal shares may not sum to exactly 1 in floating point; absorb into the last.
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < spec.components.size(); ++i) head += spec.components[i].weight;
  spec.components.back().weight = 1.0 - head;
  spec.validate();
  return spec;
}

MixtureDraw sample_mixture(const ScenarioSpec& spec, std::uint64_t seed) {
  const auto components = spec.resolve();
  const int p = spec.dimension;
  std::vector<ComponentSampler> samplers;
  std::vector<double> weights;
  for (const auto& c : components) {
    samplers.emplace_back(c, p);
    weights.push_back(c.weight);
  }
  RandomStream labels_stream(derive_seed(seed, kLabelStream));
  RandomStream stream(seed);
  SampleMatrix values(static_cast<Eigen::Index>(spec.n), p);
  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto k = labels_stream.categorical(weights);
    labels[i] = static_cast<int>(k);
    samplers[k].draw(stream, {values.data() + i * p, static_cast<std::size_t>(p)});
  }
  return {PseudoSample(std::move(values)), std::move(labels)};
}

namespace {

// Counts inversions of v while merge-sorting it.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw DomainError("kendall_tau needs two equal-length series");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  double n1 = 0.0, n3 = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double t = static_cast<double>(j - i);
    n1 += 0.5 * t * (t - 1.0);
    for (std::size_t k = i; k < j;) {
      std::size_t m = k + 1;
      while (m < j && y[order[m]] == y[order[k]]) ++m;
      const double u = static_cast<double>(m - k);
      n3 += 0.5 * u * (u - 1.0);
      k = m;
    }
    i = j;
  }
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const double swaps = static_cast<double>(merge_count(ys, buf, 0, n));
  double n2 = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && ys[j] == ys[i]) ++j;
    const double t = static_cast<double>(j - i);
    n2 += 0.5 * t * (t - 1.0);
    i = j;
  }
  const double denom = std::sqrt((n0 - n1) * (n0 - n2));
  if (denom == 0.0) return 0.0;
  return (n0 - n1 - n2 + n3 - 2.0 * swaps) / denom;
}

double mean_pairwise_kendall_tau(const PseudoSample& sample) {
  const int p = sample.dimension();
  const auto& v = sample.values();
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < p; ++a) {
    const Eigen::VectorXd ca = v.col(a);
    for (int b = a + 1; b < p; ++b) {
      const Eigen::VectorXd cb = v.col(b);
      total += kendall_tau({ca.data(), static_cast<std::size_t>(ca.size())},
                           {cb.data(), static_cast<std::size_t>(cb.size())});
      ++pairs;
    }
  }
  return total / pairs;
}

}  // namespace cfgtn
