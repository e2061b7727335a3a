#include "jpsnhmm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace jpsnhmm {

namespace {

// Standardised lower bounds above this use exponential-proposal rejection.
constexpr double kTailSwitch = 5.0;

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

Rng Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  std::uint64_t state[2];
  seq.generate(reinterpret_cast<std::uint32_t*>(state),
               reinterpret_cast<std::uint32_t*>(state) + 4);
  return Rng(state[0] ^ (state[1] * 0x9E3779B97F4A7C15ull));
}

double Rng::uniform() {
  // 53 random bits mapped to the centre of their cell: never 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::half_normal() { return std::abs(normal()); }

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("gamma: shape and scale must be positive");
  if (shape < 1.0) return std::exp(log_gamma(shape)) * scale;
  std::gamma_distribution<double> g(shape, 1.0);
  return g(engine_) * scale;
}

double Rng::log_gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("log_gamma: shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(engine_));
  }
  // G(a) = G(a + 1) * U^(1/a)
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  return std::log(g(engine_)) + std::log(uniform()) / shape;
}

double Rng::log_beta(double a, double b) {
  const double la = log_gamma(a);
  const double lb = log_gamma(b);
  const double m = std::max(la, lb);
  return la - (m + std::log(std::exp(la - m) + std::exp(lb - m)));
}

double Rng::beta(double a, double b) { return std::exp(log_beta(a, b)); }

std::int64_t Rng::binomial(std::int64_t n, double prob) {
  if (n <= 0) return 0;
  prob = std::clamp(prob, 0.0, 1.0);
  std::binomial_distribution<std::int64_t> bin(n, prob);
  return bin(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return i;
  }
  // Rounding can leave a sliver of mass past the end: last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
  std::vector<double> logs(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    // Zero shapes are degenerate components with no mass.
    logs[i] = alpha[i] > 0.0 ? log_gamma(alpha[i]) : -std::numeric_limits<double>::infinity();
  }
  const double norm = log_sum_exp(logs);
  if (!std::isfinite(norm)) throw std::invalid_argument("dirichlet: all shapes are zero");
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = std::exp(logs[i] - norm);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double standard_truncated_normal_lower(Rng& rng, double lower) {
  if (lower > kTailSwitch) {
    // Robert (1995) translated-exponential proposal with optimal rate.
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    for (;;) {
      const double x = lower + rng.exponential(rate);
      const double accept = std::exp(-0.5 * (x - rate) * (x - rate));
      if (rng.uniform() <= accept) return x;
    }
  }
  // Inverse survival function: S(x) uniform on (0, S(lower)).
  const double upper_tail = 0.5 * std::erfc(lower / std::sqrt(2.0));
  const double u = rng.uniform() * upper_tail;
  const double x = std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
  return std::max(x, lower);
}

double Rng::truncated_normal_lower(double mean, double sd, double lower) {
  return mean + sd * standard_truncated_normal_lower(*this, (lower - mean) / sd);
}

std::int64_t Rng::crt(std::int64_t customers, double concentration) {
  if (customers <= 0) return 0;
  // The first customer always opens a table.
  std::int64_t tables = 1;
  for (std::int64_t i = 1; i < customers; ++i) {
    if (uniform() < concentration / (concentration + static_cast<double>(i))) ++tables;
  }
  return tables;
}

}  // namespace jpsnhmm
