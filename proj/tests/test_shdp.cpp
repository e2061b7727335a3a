#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "jpsnhmm/errors.hpp"
#include "jpsnhmm/shdp.hpp"
#include "support.hpp"

using namespace jpsnhmm;
using namespace testing;

namespace {

// Exact path posterior by enumeration, with z_0 = 0.
std::map<std::vector<int>, double> enumerate_paths(const Mat& ll, const Mat& pi) {
  const auto T = static_cast<int>(ll.rows()), L = static_cast<int>(ll.cols());
  std::map<std::vector<int>, double> out;
  std::vector<int> z(T, 0);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    int prev = 0;
    for (int t = 0; t < T; ++t) {
      w *= pi(prev, z[t]) * std::exp(ll(t, z[t]));
      prev = z[t];
    }
    out[z] = w;
    total += w;
    int t = 0;
    while (t < T && ++z[t] == L) z[t++] = 0;
    if (t == T) break;
  }
  for (auto& [k, v] : out) v /= total;
  return out;
}

Mat random_pi(int L, Rng& rng) {
  Mat pi(L, L);
  for (int k = 0; k < L; ++k) {
    const auto row = rng.dirichlet(std::vector<double>(L, 1.0));
    for (int j = 0; j < L; ++j) pi(k, j) = row[j];
  }
  return pi;
}

}  // namespace

TEST_CASE("transition counts start from state 0") {
  const CountMatrix n = transition_counts({1, 1, 2, 0}, 3);
  CHECK(n(0, 1) == 1);
  CHECK(n(1, 1) == 1);
  CHECK(n(1, 2) == 1);
  CHECK(n(2, 0) == 1);
  CHECK(n.sum() == 4);
}

TEST_CASE("FFBS with one state") {
  Rng rng(41);
  const auto z = sample_states_blocked(Mat::Zero(6, 1), Mat::Ones(1, 1), rng);
  for (int s : z) CHECK(s == 0);
}

TEST_CASE("FFBS matches path enumeration, T = 3, L = 2") {
  Rng rng(42);
  Mat ll(3, 2);
  ll << 0.0, -1.0, -0.5, 0.3, 1.0, -2.0;
  Mat pi(2, 2);
  pi << 0.7, 0.3, 0.4, 0.6;
  const auto exact = enumerate_paths(ll, pi);
  std::map<std::vector<int>, double> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[sample_states_blocked(ll, pi, rng)] += 1.0 / n;
  for (const auto& [path, p] : exact) {
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(freq[path] - p) < 3 * se);
  }
}

TEST_CASE("FFBS with flat likelihood and uniform pi gives uniform states") {
  Rng rng(43);
  const int L = 3, n = 30000;
  const Mat pi = Mat::Constant(L, L, 1.0 / L);
  std::vector<std::vector<double>> hit(L);
  for (int i = 0; i < n; ++i) {
    const auto z = sample_states_blocked(Mat::Zero(4, L), pi, rng);
    for (int k = 0; k < L; ++k) hit[k].push_back(z[2] == k ? 1.0 : 0.0);
  }
  for (int k = 0; k < L; ++k) CHECK(std::abs(mean(hit[k]) - 1.0 / L) < 3 * se_mean(hit[k]));
}

TEST_CASE("FFBS handles very negative log-likelihoods and reports dead ends") {
  Rng rng(44);
  Mat ll(3, 2);
  ll << -1e4, -1e4 - 1.0, -2e4, -2e4, -5e3, -5e3 + 2.0;
  const Mat pi = random_pi(2, rng);
  const auto z = sample_states_blocked(ll, pi, rng);
  CHECK(z.size() == 3);
  Mat bad = Mat::Zero(2, 2);
  bad.row(1).setConstant(-std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(sample_states_blocked(bad, pi, rng), NumericalError);
}

TEST_CASE("sticky prior mean of pi without data") {
  Rng rng(45);
  const Vec beta = (Vec(3) << 0.5, 0.3, 0.2).finished();
  const CountMatrix none = CountMatrix::Zero(3, 3);
  for (double vs : {0.0, 0.5}) {
    const StickyHyper h{1.0, 2.0, vs};
    std::vector<std::vector<double>> e(3);
    for (int i = 0; i < 100000; ++i) {
      const Mat pi = update_pi(none, beta, h, rng);
      for (int j = 0; j < 3; ++j) e[j].push_back(pi(1, j));
    }
    for (int j = 0; j < 3; ++j) {
      const double expected = (1 - vs) * beta[j] + (j == 1 ? vs : 0.0);
      CHECK(std::abs(mean(e[j]) - expected) < 3 * se_mean(e[j]));
    }
  }
}

TEST_CASE("pi row concentrates on a heavily observed cell") {
  Rng rng(46);
  CountMatrix n = CountMatrix::Zero(3, 3);
  n(0, 2) = 1000000;
  const Mat pi = update_pi(n, Vec::Constant(3, 1.0 / 3), StickyHyper{1.0, 1.0, 0.5}, rng);
  CHECK(pi(0, 2) > 0.99);
  CHECK(std::abs(pi.row(1).sum() - 1.0) < 1e-12);
}

TEST_CASE("beta update: symmetric, concentrated and Dirichlet moments") {
  Rng rng(47);
  {
    std::vector<std::vector<double>> e(4);
    for (int i = 0; i < 100000; ++i) {
      const Vec b = update_beta(std::vector<std::int64_t>(4, 0), 2.0, rng);
      for (int j = 0; j < 4; ++j) e[j].push_back(b[j]);
    }
    for (int j = 0; j < 4; ++j) CHECK(std::abs(mean(e[j]) - 0.25) < 3 * se_mean(e[j]));
  }
  {
    const Vec b = update_beta(std::vector<std::int64_t>{1000000, 0, 0}, 1.0, rng);
    CHECK(b[0] > 0.999);
  }
  {
    const std::vector<std::int64_t> m{5, 3, 0};
    const double a[3] = {1.0 / 3 + 5, 1.0 / 3 + 3, 1.0 / 3};
    const double a0 = a[0] + a[1] + a[2];
    std::vector<std::vector<double>> e(3);
    for (int i = 0; i < 100000; ++i) {
      const Vec b = update_beta(m, 1.0, rng);
      for (int j = 0; j < 3; ++j) e[j].push_back(b[j]);
    }
    for (int j = 0; j < 3; ++j) {
      const double mj = a[j] / a0;
      CHECK(std::abs(mean(e[j]) - mj) < 3 * se_mean(e[j]));
      CHECK(std::abs(variance(e[j]) - mj * (1 - mj) / (a0 + 1)) < 3 * se_variance(e[j]));
    }
  }
}

TEST_CASE("tables are consistent with counts") {
  Rng rng(48);
  CountMatrix n(3, 3);
  n << 10, 2, 0, 1, 30, 4, 0, 0, 5;
  const TableCounts t = sample_tables(n, Vec::Constant(3, 1.0 / 3), StickyHyper{1.0, 3.0, 0.6}, rng);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      CHECK(t.tables(k, j) <= n(k, j));
      CHECK((n(k, j) == 0) == (t.tables(k, j) == 0));
      CHECK(t.effective(k, j) >= 0);
    }
  CHECK(t.total_tables() == t.total_effective() + t.total_overrides());
}

TEST_CASE("hyperparameters without tables follow the prior") {
  Rng rng(49);
  const HyperPrior prior{2.0, 1.5, 3.0, 0.5, 2.0, 3.0};
  const CountMatrix none = CountMatrix::Zero(3, 3);
  const TableCounts tables = sample_tables(none, Vec::Constant(3, 1.0 / 3), StickyHyper{}, rng);
  StickyHyper h;
  std::vector<double> tau, gam, vs;
  for (int i = 0; i < 50000; ++i) {
    h = update_hyperparameters(none, tables, h, prior, 3, rng);
    tau.push_back(h.tau);
    gam.push_back(h.gamma);
    vs.push_back(h.varsigma);
  }
  CHECK(std::abs(mean(tau) - 3.0) < 3 * se_batch(tau));
  CHECK(std::abs(mean(gam) - 1.5) < 3 * se_batch(gam));
  CHECK(std::abs(mean(vs) - 0.4) < 3 * se_batch(vs));
}

TEST_CASE("self transitions credited to the sticky mass push varsigma up") {
  Rng rng(50);
  TableCounts t;
  t.tables = CountMatrix::Zero(2, 2);
  t.tables(0, 0) = 1000;
  t.effective = CountMatrix::Zero(2, 2);
  t.overrides = {1000, 0};
  CountMatrix n = CountMatrix::Zero(2, 2);
  n(0, 0) = 5000;
  std::vector<double> vs;
  StickyHyper h;
  for (int i = 0; i < 2000; ++i) {
    h = update_hyperparameters(n, t, h, HyperPrior{}, 2, rng);
    vs.push_back(h.varsigma);
  }
  CHECK(mean(vs) > 0.9);
}

TEST_CASE("varsigma posterior recovers a generating value") {
  Rng rng(51);
  const double truth = 0.3;
  const std::int64_t m = 2000;
  const std::int64_t w = rng.binomial(m, truth);
  TableCounts t;
  t.tables = CountMatrix::Zero(1, 1);
  t.tables(0, 0) = m;
  t.effective = CountMatrix::Constant(1, 1, m - w);
  t.overrides = {w};
  const CountMatrix n = CountMatrix::Constant(1, 1, 5000);
  std::vector<double> vs;
  StickyHyper h;
  for (int i = 0; i < 5000; ++i) {
    h = update_hyperparameters(n, t, h, HyperPrior{}, 1, rng);
    vs.push_back(h.varsigma);
  }
  CHECK(std::abs(mean(vs) - truth) < 4 * std::sqrt(variance(vs)));
}

TEST_CASE("transition block leaves the hyperprior invariant") {
  // Alternate z ~ p(z | pi) with the transition block; the chain on
  // (pi, beta, hyper) then has the prior as its stationary law.
  Rng rng(52);
  const HyperPrior prior{2.0, 1.0, 3.0, 1.0, 2.0, 2.0};
  const int L = 3, T = 30;
  ChainState s;
  s.hyper = prior.sample(rng);
  s.beta = update_beta(std::vector<std::int64_t>(L, 0), s.hyper.tau, rng);
  s.pi = update_pi(CountMatrix::Zero(L, L), s.beta, s.hyper, rng);
  s.z.assign(T, 0);
  std::vector<double> tau, gam, vs, b0;
  std::vector<double> row(L);
  for (int it = 0; it < 40000; ++it) {
    int prev = 0;
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < L; ++j) row[j] = s.pi(prev, j);
      prev = static_cast<int>(rng.categorical(row));
      s.z[t] = prev;
    }
    update_transition_block(s, prior, rng);
    tau.push_back(s.hyper.tau);
    gam.push_back(s.hyper.gamma);
    vs.push_back(s.hyper.varsigma);
    b0.push_back(s.beta[0]);
  }
  CHECK(std::abs(mean(tau) - 2.0) < 4 * se_batch(tau));
  CHECK(std::abs(mean(gam) - 3.0) < 4 * se_batch(gam));
  CHECK(std::abs(mean(vs) - 0.5) < 4 * se_batch(vs));
  CHECK(std::abs(mean(b0) - 1.0 / L) < 4 * se_batch(b0));
}

TEST_CASE("count_states") {
  CHECK(count_states({0, 0, 0}) == 1);
  CHECK(count_states({0, 2, 2, 6}) == 3);
  CHECK(count_states({0, 1, 2, 3}) == 4);
}
