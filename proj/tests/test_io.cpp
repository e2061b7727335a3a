#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "jpsnhmm/commands.hpp"
#include "jpsnhmm/errors.hpp"
#include "jpsnhmm/io.hpp"

using namespace jpsnhmm;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const std::string kHead = std::string(kCsvHeader) + "\n";

CylSeries parse(const std::string& text, const IngestOptions& opts = {}) {
  std::istringstream in(text);
  return read_series_csv(in, opts);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("jpsnhmm_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("ingest converts degrees and speeds") {
  const auto s = parse(kHead + "2020-01-01T00:00:00Z,90,1,180,2.5\n");
  REQUIRE(s.size() == 1);
  CHECK(s.theta(0, 0) == doctest::Approx(pi / 2));
  CHECK(s.y(0, 0) == 0.0);
  CHECK(s.theta(0, 1) == doctest::Approx(pi));
  CHECK(s.y(0, 1) == doctest::Approx(std::log(2.5)));
  CHECK(s.timestamps[0] == 1577836800);
}

TEST_CASE("ingest maps empty cells to missing") {
  const auto s = parse(kHead + "2020-01-01T00:00:00Z,,1,180,\n2020-01-01T01:00:00Z,10,1,20,2\n");
  CHECK(std::isnan(s.theta(0, 0)));
  CHECK(std::isnan(s.y(0, 1)));
  CHECK_FALSE(std::isnan(s.y(0, 0)));
  const auto m = s.mask();
  CHECK(m.theta(0, 0));
  CHECK_FALSE(m.theta(1, 0));
}

TEST_CASE("ingest rejects bad rows with their line number") {
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,90,0,180,1\n").find("line 2") == 0);
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,90,1,180,1\n2020-01-01T01:00:00Z,90,-1,180,1\n").find("line 3") == 0);
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,360,1,180,1\n").find("line 2") == 0);
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,-1,1,180,1\n").find("line 2") == 0);
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,abc,1,180,1\n").find("line 2") == 0);
  CHECK(error_of(kHead + "2020-01-01T00:00:00Z,90,1,180\n").find("line 2") == 0);
  CHECK(error_of(kHead + "yesterday,90,1,180,1\n").find("line 2") == 0);
  CHECK(error_of("a,b,c\n").find("line 1") == 0);
  CHECK_FALSE(error_of("").empty());
}

TEST_CASE("ingest enforces increasing, uniform timestamps") {
  const std::string rows = "2020-01-01T00:00:00Z,1,1,1,1\n2020-01-01T01:00:00Z,1,1,1,1\n";
  CHECK(error_of(kHead + rows + "2020-01-01T03:00:00Z,1,1,1,1\n").find("line 4") == 0);
  CHECK(error_of(kHead + rows + "2020-01-01T01:00:00Z,1,1,1,1\n").find("line 4") == 0);
  CHECK(error_of(kHead + rows + "2020-01-01T02:00:00Z,1,1,1,1\n").empty());
}

TEST_CASE("season filter keeps the matching months") {
  std::string text = kHead;
  for (int h = 0; h < 48; ++h) {
    const std::int64_t t = parse_timestamp("2020-02-28T00:00:00Z") + h * 3600;
    text += format_timestamp(t) + ",10,1,20,1\n";
  }
  const auto all = parse(text);
  CHECK(all.size() == 48);
  const auto winter = parse(text, {"DJF"});
  const auto spring = parse(text, {"MAM"});
  // 2020 is a leap year: 28 and 29 February are winter.
  CHECK(winter.size() == 48);
  CHECK(spring.size() == 0);
  CHECK(parse(text, {"JJA"}).size() == 0);
  CHECK_THROWS_AS(parse(text, {"XYZ"}), ValidationError);

  std::string across = kHead;
  for (int d = 0; d < 4; ++d) {
    const std::int64_t t = parse_timestamp("2021-02-27T00:00:00Z") + d * 86400;
    across += format_timestamp(t) + ",10,1,20,1\n";
  }
  CHECK(parse(across, {"DJF"}).size() == 2);
  CHECK(parse(across, {"MAM"}).size() == 2);
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("2020-01-01T00:00:00Z") == 1577836800);
  CHECK(parse_timestamp("2020-01-01 00:00:00") == 1577836800);
  CHECK(parse_timestamp("2020-01-01T00:00:00+00:00") == 1577836800);
  CHECK(format_timestamp(1577836800) == "2020-01-01T00:00:00Z");
  CHECK(month_of(1577836800) == 1);
  CHECK(month_of(parse_timestamp("2019-12-31T23:59:59Z")) == 12);
  CHECK_THROWS_AS(parse_timestamp("2020-02-30T00:00:00Z"), ValidationError);
  CHECK_THROWS_AS(parse_timestamp("2020-01-01T00:00:00+02:00"), ValidationError);
}

TEST_CASE("write then read round trip") {
  SimulationSpec spec = preset_spec("single");
  spec.length = 200;
  spec.missing_rate = 0.1;
  const CylSeries s = simulate_series(spec).series;
  std::stringstream buf;
  write_series_csv(buf, s);
  const CylSeries r = read_series_csv(buf);
  REQUIRE(r.size() == s.size());
  CHECK(r.timestamps == s.timestamps);
  double worst = 0.0;
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    for (int i = 0; i < 2; ++i) {
      CHECK(std::isnan(r.theta(t, i)) == std::isnan(s.theta(t, i)));
      CHECK(std::isnan(r.y(t, i)) == std::isnan(s.y(t, i)));
      if (!std::isnan(s.theta(t, i))) worst = std::max(worst, std::abs(r.theta(t, i) - s.theta(t, i)));
      if (!std::isnan(s.y(t, i))) worst = std::max(worst, std::abs(r.y(t, i) - s.y(t, i)));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("config parsing") {
  const FitConfig c = parse_config("iterations = 300 # sweeps\nburn_in=100\nthin = 2\nseed = 9\nniw_kappa = 0.5\n");
  CHECK(c.iterations == 300);
  CHECK(c.burn_in == 100);
  CHECK(c.thin == 2);
  CHECK(c.seed == 9);
  CHECK(c.niw_kappa == 0.5);
  CHECK(c.truncation == FitConfig{}.truncation);
  CHECK_THROWS_AS(parse_config("iteratons = 3\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("thin = two\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("thin\n"), ValidationError);

  const FitConfig back = parse_config(format_config(c));
  CHECK(format_config(back) == format_config(c));
}

TEST_CASE("archive round trip and interrupted tail") {
  const fs::path dir = scratch("archive");
  const std::string path = (dir / "draws.jsonl").string();
  PosteriorDraw d;
  d.iteration = 7;
  d.z = {0, 2, 2};
  d.pi = Mat::Constant(3, 3, 1.0 / 3);
  d.beta = Vec::Constant(3, 1.0 / 3);
  d.hyper = {1.5, 2.5, 0.25};
  Mat s = Mat::Identity(3, 3);
  s(0, 2) = s(2, 0) = 0.2;
  d.states.emplace(0, JpsnParams{1, 1, (Vec(3) << 0.1, 0.2, 0.3).finished(), s, Vec::Constant(1, -0.5)});
  d.states.emplace(2, JpsnParams{1, 1, (Vec(3) << 1.0, 0.0, -1.0).finished(), s, Vec::Constant(1, 0.5)});
  d.imputed.push_back({1, true, 0, 2.0});
  {
    ArchiveWriter w(path, {"aa", "bb", 3, 3, 1, 1});
    w.append(d);
    d.iteration = 8;
    w.append(d);
  }
  Archive a = read_archive(path);
  CHECK_FALSE(a.truncated_tail);
  CHECK(a.header.manifest_hash == "aa");
  CHECK(a.header.data_hash == "bb");
  REQUIRE(a.draws.draws.size() == 2);
  const auto& r = a.draws.draws[0];
  CHECK(r.iteration == 7);
  CHECK(r.z == d.z);
  CHECK(r.hyper.varsigma == d.hyper.varsigma);
  CHECK(r.states.at(2).mu == d.states.at(2).mu);
  CHECK(r.states.at(0).sigma == s);
  CHECK(r.states.at(0).lambda[0] == -0.5);
  REQUIRE(r.imputed.size() == 1);
  CHECK(r.imputed[0].circular);
  CHECK(r.imputed[0].value == 2.0);

  {
    std::ofstream out(path, std::ios::app);
    out << "{\"type\":\"draw\",\"iter";
  }
  a = read_archive(path);
  CHECK(a.truncated_tail);
  CHECK(a.draws.draws.size() == 2);

  {
    std::ofstream out(path, std::ios::app);
    out << "\n" << draw_to_json(d) << "\n";
  }
  CHECK_THROWS_AS(read_archive(path), ValidationError);
}

TEST_CASE("simulation is deterministic") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  SimulationSpec spec = preset_spec("three-state");
  spec.length = 300;
  spec.seed = 5;
  cmd_simulate(spec, a.string());
  cmd_simulate(spec, b.string());
  CHECK(read_file((a / "data.csv").string()) == read_file((b / "data.csv").string()));
  CHECK(read_file((a / "truth.json").string()) == read_file((b / "truth.json").string()));
  spec.seed = 6;
  cmd_simulate(spec, b.string());
  CHECK(read_file((a / "data.csv").string()) != read_file((b / "data.csv").string()));
}

TEST_CASE("simulating zero steps gives a header-only file") {
  const fs::path dir = scratch("sim_empty");
  SimulationSpec spec = preset_spec("single");
  spec.length = 0;
  cmd_simulate(spec, dir.string());
  CHECK(read_file((dir / "data.csv").string()) == kHead);
  CHECK(ingest_csv((dir / "data.csv").string()).size() == 0);
}

TEST_CASE("simulation spec validation") {
  SimulationSpec spec = preset_spec("three-state");
  spec.transition(0, 0) = 0.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  CHECK_THROWS_AS(preset_spec("nope"), ValidationError);
  CHECK_THROWS_AS(simulation_spec_from_json("{\"T\": -1}"), ValidationError);
}

TEST_CASE("hashes") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}
