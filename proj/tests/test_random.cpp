#include <doctest.h>

#include <cmath>
#include <vector>

#include "jpsnhmm/random.hpp"
#include "support.hpp"

using namespace jpsnhmm;
using namespace testing;

TEST_CASE("uniform stays inside the open interval") {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = Rng::derive(7, 1, 2, 3), b = Rng::derive(7, 1, 2, 3), c = Rng::derive(7, 1, 2, 4);
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
}

TEST_CASE("truncated normal matches closed-form moments") {
  // E = m + s h, Var = s^2 (1 + a h - h^2), h = phi(a) / Phi-bar(a), a = (lower - m) / s.
  Rng rng(2);
  for (double lower : {-2.0, 0.0, 1.5, 4.9, 5.1, 8.0, 30.0}) {
    CAPTURE(lower);
    const double m = 0.3, s = 1.0;
    const double a = (lower - m) / s;
    const double h = norm_pdf(a) / norm_sf(a);
    const double e = m + s * h;
    const double v = s * s * (1.0 + a * h - h * h);
    std::vector<double> x(100000);
    for (auto& xi : x) {
      xi = rng.truncated_normal_lower(m, s, lower);
      REQUIRE(xi >= lower);
    }
    CHECK(std::abs(mean(x) - e) < 3 * se_mean(x));
    CHECK(std::abs(variance(x) - v) < 3 * se_variance(x));
  }
}

TEST_CASE("gamma uses shape and scale") {
  Rng rng(3);
  for (auto [k, theta] : std::vector<std::pair<double, double>>{{1.0, 0.01}, {0.2, 2.0}, {5.0, 0.5}}) {
    std::vector<double> x(100000);
    for (auto& xi : x) xi = rng.gamma(k, theta);
    CHECK(std::abs(mean(x) - k * theta) < 3 * se_mean(x));
    CHECK(std::abs(variance(x) - k * theta * theta) < 3 * se_variance(x));
  }
}

TEST_CASE("log_gamma stays finite for tiny shapes") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) CHECK(std::isfinite(rng.log_gamma(1e-6)));
  std::vector<double> x(100000);
  for (auto& xi : x) xi = std::exp(rng.log_gamma(0.5));
  CHECK(std::abs(mean(x) - 0.5) < 3 * se_mean(x));
}

TEST_CASE("beta moments") {
  Rng rng(5);
  const double a = 2.0, b = 5.0;
  std::vector<double> x(100000);
  for (auto& xi : x) xi = rng.beta(a, b);
  CHECK(std::abs(mean(x) - a / (a + b)) < 3 * se_mean(x));
  CHECK(std::abs(variance(x) - a * b / ((a + b) * (a + b) * (a + b + 1))) < 3 * se_variance(x));
}

TEST_CASE("crt mean is a sum of Bernoulli probabilities") {
  Rng rng(6);
  for (auto [n, alpha] : std::vector<std::pair<int, double>>{{1, 0.5}, {10, 2.0}, {50, 0.3}, {20, 1e-300}}) {
    double expected = 0.0;
    for (int i = 0; i < n; ++i) expected += i == 0 ? 1.0 : alpha / (alpha + i);
    std::vector<double> x(50000);
    for (auto& xi : x) {
      xi = static_cast<double>(rng.crt(n, alpha));
      REQUIRE(xi >= 1.0);
      REQUIRE(xi <= n);
    }
    const double se = std::max(se_mean(x), 1e-12);
    CHECK(std::abs(mean(x) - expected) < 3 * se + 1e-12);
  }
  CHECK(rng.crt(0, 1.0) == 0);
}

TEST_CASE("dirichlet moments and zero shapes") {
  Rng rng(7);
  const std::vector<double> alpha{0.5, 2.0, 3.5};
  const double a0 = 6.0;
  std::vector<std::vector<double>> cols(3, std::vector<double>(100000));
  for (std::size_t i = 0; i < 100000; ++i) {
    const auto d = rng.dirichlet(alpha);
    for (int k = 0; k < 3; ++k) cols[k][i] = d[k];
  }
  for (int k = 0; k < 3; ++k) {
    const double m = alpha[k] / a0;
    CHECK(std::abs(mean(cols[k]) - m) < 3 * se_mean(cols[k]));
    CHECK(std::abs(variance(cols[k]) - m * (1 - m) / (a0 + 1)) < 3 * se_variance(cols[k]));
  }
  const auto d = rng.dirichlet(std::vector<double>{0.0, 1.0, 1e-300});
  CHECK(d[0] == 0.0);
  CHECK(d[1] + d[2] == doctest::Approx(1.0));
}

TEST_CASE("categorical frequencies") {
  Rng rng(8);
  const std::vector<double> w{1.0, 0.0, 3.0};
  std::vector<double> hit(100000);
  for (auto& h : hit) {
    const auto k = rng.categorical(w);
    REQUIRE(k != 1);
    h = k == 2 ? 1.0 : 0.0;
  }
  CHECK(std::abs(mean(hit) - 0.75) < 3 * se_mean(hit));
}

TEST_CASE("binomial moments") {
  Rng rng(9);
  std::vector<double> x(50000);
  for (auto& xi : x) xi = static_cast<double>(rng.binomial(40, 0.3));
  CHECK(std::abs(mean(x) - 12.0) < 3 * se_mean(x));
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
}
