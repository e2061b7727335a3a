#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "jpsnhmm/commands.hpp"
#include "jpsnhmm/errors.hpp"
#include "jpsnhmm/io.hpp"
#include "jpsnhmm/sampler.hpp"
#include "support.hpp"

using namespace jpsnhmm;
using namespace testing;
namespace fs = std::filesystem;

namespace {

JpsnParams test_state(Rng& rng) {
  JpsnParams e{1, 2, (Vec(4) << 1.0, -0.5, 0.3, 0.8).finished(), random_spd(4, rng), (Vec(2) << 0.7, -1.2).finished()};
  return e;
}

FitConfig small_config() {
  FitConfig c;
  c.iterations = 40;
  c.burn_in = 20;
  c.thin = 2;
  c.truncation = 4;
  c.seed = 3;
  return c;
}

CylSeries simulated(const std::string& preset, std::int64_t length, std::uint64_t seed, double missing = 0.0) {
  SimulationSpec spec = preset_spec(preset);
  spec.length = length;
  spec.seed = seed;
  spec.missing_rate = missing;
  return simulate_series(spec).series;
}

}  // namespace

TEST_CASE("imputation leaves complete steps alone") {
  Rng rng(81);
  const JpsnKernel k(test_state(rng));
  const Vec x = (Vec(4) << 0.1, 0.2, 0.3, 0.4).finished();
  const Vec d = (Vec(2) << 0.5, 0.6).finished();
  const Imputed out = impute_missing(x, d, {{false}, {false, false}}, k, rng);
  CHECK(out.x == x);
  CHECK(out.d == d);
}

TEST_CASE("imputed values follow the Gaussian conditional") {
  Rng rng(82);
  const JpsnParams e = test_state(rng);
  const JpsnKernel k(e);
  const Vec x = (Vec(4) << 0.4, -1.1, 0.9, 0.0).finished();
  const Vec d = (Vec(2) << 0.5, 1.5).finished();
  // Missing: the angle block and the second linear value.
  const std::vector<int> miss{0, 1, 3}, obs{2};
  Vec m = e.mu;
  m.tail(2) += e.lambda.cwiseProduct(d);
  Mat s_mm(3, 3), s_mo(3, 1);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) s_mm(a, b) = e.sigma(miss[a], miss[b]);
    s_mo(a, 0) = e.sigma(miss[a], obs[0]);
  }
  const double s_oo = e.sigma(obs[0], obs[0]);
  const Vec cmean = Vec(m(miss)) + s_mo * ((x[2] - m[2]) / s_oo);
  const Mat ccov = s_mm - s_mo * s_mo.transpose() / s_oo;

  const int n = 200000;
  std::vector<std::vector<double>> v(3, std::vector<double>(n));
  std::vector<double> cross(n);
  for (int i = 0; i < n; ++i) {
    const Imputed out = impute_missing(x, d, {{true}, {false, true}}, k, rng);
    CHECK(out.x[2] == x[2]);
    for (int a = 0; a < 3; ++a) v[a][i] = out.x[miss[a]];
    cross[i] = (out.x[0] - cmean[0]) * (out.x[3] - cmean[2]);
  }
  for (int a = 0; a < 3; ++a) {
    CAPTURE(a);
    CHECK(std::abs(mean(v[a]) - cmean[a]) < 3 * se_mean(v[a]));
    CHECK(std::abs(variance(v[a]) - ccov(a, a)) < 3 * se_variance(v[a]));
  }
  CHECK(std::abs(mean(cross) - ccov(0, 2)) < 3 * se_mean(cross));
}

TEST_CASE("a fully missing step is redrawn from the model") {
  Rng rng(83);
  const JpsnParams e = test_state(rng);
  const JpsnKernel k(e);
  const Vec x = Vec::Zero(4), d = Vec::Zero(2);
  const int n = 200000;
  std::vector<double> y0, d1;
  for (int i = 0; i < n; ++i) {
    const Imputed out = impute_missing(x, d, {{true}, {true, true}}, k, rng);
    y0.push_back(out.x[2]);
    d1.push_back(out.d[1]);
    CHECK(out.d[1] >= 0.0);
  }
  const double mean_y0 = e.mu[2] + e.lambda[0] * std::sqrt(2.0 / std::numbers::pi);
  CHECK(std::abs(mean(y0) - mean_y0) < 3 * se_mean(y0));
  CHECK(std::abs(mean(d1) - std::sqrt(2.0 / std::numbers::pi)) < 3 * se_mean(d1));
}

TEST_CASE("config validation") {
  FitConfig c = small_config();
  c.burn_in = c.iterations;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.truncation = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.niw_kappa = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(small_config().kept_draws() == 10);
}

TEST_CASE("draws do not depend on the thread count") {
  const CylSeries data = simulated("three-state", 700, 4, 0.05);
  FitConfig c = small_config();
  c.iterations = 12;
  c.burn_in = 6;
  c.thin = 1;
  c.threads = 1;
  const auto one = run_sampler(data, c);
  c.threads = 2;
  const auto two = run_sampler(data, c);
  REQUIRE(one.draws.size() == 6);
  REQUIRE(two.draws.size() == 6);
  for (std::size_t i = 0; i < one.draws.size(); ++i) CHECK(draw_to_json(one.draws[i]) == draw_to_json(two.draws[i]));
}

TEST_CASE("retained draws are consistent with the data") {
  const CylSeries data = simulated("three-state", 300, 8, 0.1);
  std::size_t missing = 0;
  const MissingMask mask = data.mask();
  for (Eigen::Index t = 0; t < data.size(); ++t) missing += mask.theta.row(t).count() + mask.y.row(t).count();
  const auto draws = run_sampler(data, small_config());
  REQUIRE(draws.draws.size() == 10);
  for (const auto& d : draws.draws) {
    CHECK(d.z.size() == 300);
    CHECK(d.imputed.size() == missing);
    CHECK(d.pi.rows() == 4);
    CHECK(std::abs(d.beta.sum() - 1.0) < 1e-9);
    for (const auto& [label, par] : d.states) {
      CHECK(label < 4);
      // Identifiable form: unit variance for each W_i2.
      CHECK(par.sigma(1, 1) == doctest::Approx(1.0));
      CHECK(par.sigma(3, 3) == doctest::Approx(1.0));
    }
    for (int s : d.z) CHECK(d.states.count(s) == 1);
  }
}

TEST_CASE("zero kept draws give an empty archive") {
  const CylSeries data = simulated("single", 50, 2);
  FitConfig c = small_config();
  c.iterations = 5;
  c.burn_in = 3;
  c.thin = 5;
  CHECK(c.kept_draws() == 0);
  CHECK(run_sampler(data, c).draws.empty());

  const fs::path dir = fs::temp_directory_path() / "jpsnhmm_test_sampler_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_series_csv((dir / "data.csv").string(), data);
  const FitOutcome out = cmd_fit((dir / "data.csv").string(), c, (dir / "fit").string());
  CHECK(out.draws == 0);
  const Archive a = read_archive(out.archive_path);
  CHECK(a.draws.draws.empty());
  CHECK_FALSE(a.truncated_tail);
}

TEST_CASE("single-state series are fitted with one state") {
  int hits = 0;
  for (std::uint64_t seed = 11; seed < 16; ++seed) {
    const CylSeries data = simulated("single", 500, seed);
    FitConfig c = small_config();
    c.iterations = 2000;
    c.burn_in = 1000;
    c.thin = 5;
    c.truncation = 10;
    const int mode = k_posterior_mode(run_sampler(data, c));
    CAPTURE(seed);
    CHECK(mode == 1);
    if (mode == 1) ++hits;
  }
  CHECK(hits / 5.0 >= 0.9);
}
