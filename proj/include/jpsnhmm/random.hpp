#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace jpsnhmm {

/// Random stream handle. Every sampling routine takes one explicitly so that
/// independent workers can own independent streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// A stream keyed by (seed, a, b, c). Used to give each (iteration, block)
  /// its own reproducible stream regardless of how work is scheduled.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0);

  std::mt19937_64& engine() { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  double exponential(double rate);
  double half_normal();
  double gamma(double shape, double scale = 1.0);
  /// log of a Gamma(shape, 1) draw; stays finite for shapes far below 1.
  double log_gamma(double shape);
  double beta(double a, double b);
  /// log of a Beta(a, b) draw, finite even when a or b is tiny.
  double log_beta(double a, double b);
  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }
  std::int64_t binomial(std::int64_t n, double prob);
  bool bernoulli(double prob) { return uniform() < prob; }
  std::size_t categorical(std::span<const double> weights);

  /// Dirichlet draw computed in log space and normalised, so entries whose
  /// shape is tiny come out as (possibly exact) zeros rather than NaN.
  std::vector<double> dirichlet(std::span<const double> alpha);

  /// Normal(mean, sd^2) truncated to (lower, inf).
  double truncated_normal_lower(double mean, double sd, double lower);

  /// Number of occupied tables when `customers` are seated by a Chinese
  /// restaurant process with concentration `concentration`.
  std::int64_t crt(std::int64_t customers, double concentration);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Standard normal draw from (lower, inf), lower being standardised.
double standard_truncated_normal_lower(Rng& rng, double lower);

}  // namespace jpsnhmm
