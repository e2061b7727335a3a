// jpsnhmm: simulate, fit, summarize and verify wind regime models.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jpsnhmm/commands.hpp"
#include "jpsnhmm/errors.hpp"

using namespace jpsnhmm;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

FitConfig load_or_default(const std::string& path) { return path.empty() ? FitConfig{} : load_config(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sticky HDP-HMM with joint projected and skew normal emissions for wind data"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", season;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads");
  };

  auto* sim = app.add_subcommand("simulate", "write a synthetic data.csv and truth.json");
  add_common(sim);
  std::string spec_arg = "three-state";
  std::optional<std::int64_t> sim_length;
  std::optional<double> missing_rate;
  sim->add_option("--spec", spec_arg, "JSON spec file or preset name (single, three-state)")->capture_default_str();
  sim->add_option("--length", sim_length, "number of steps (overrides the spec)");
  sim->add_option("--missing-rate", missing_rate, "probability that a cell is blank");

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler and write draws.jsonl and manifest.json");
  add_common(fit);
  std::string data_path;
  bool baseline = false;
  fit->add_option("data", data_path, "input CSV")->required();
  fit->add_option("--season", season, "keep only DJF, MAM, JJA or SON rows");
  fit->add_flag("--baseline", baseline, "single-state (time independent) model");
  fit->add_flag("--quiet", quiet, "no progress output");

  auto* sum = app.add_subcommand("summarize", "state, dependence, transition and K tables from an archive");
  add_common(sum);
  std::string archive_path, sum_data;
  std::size_t max_draws = 0;
  std::optional<std::size_t> mc_size;
  sum->add_option("archive", archive_path, "draws.jsonl")->required();
  sum->add_option("--data", sum_data, "check the archive against this data file");
  sum->add_option("--season", season, "season filter used for the fit");
  sum->add_option("--max-draws", max_draws, "evenly thinned subset of draws (0 = all)")->capture_default_str();
  sum->add_option("--mc-size", mc_size, "Monte Carlo sample per draw (overrides the config)");

  auto* ver = app.add_subcommand("verify", "APE and MSE of the fit against the single-state baseline");
  add_common(ver);
  std::string baseline_archive;
  ver->add_option("archive", archive_path, "draws.jsonl")->required();
  ver->add_option("data", data_path, "input CSV")->required();
  ver->add_option("--season", season, "season filter used for the fit");
  ver->add_option("--baseline", baseline_archive, "existing baseline archive (fitted when omitted)");
  ver->add_option("--max-draws", max_draws, "evenly thinned subset of draws (0 = all)")->capture_default_str();
  ver->add_flag("--quiet", quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    FitConfig config = load_or_default(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    config.validate();
    const IngestOptions ingest{season};

    if (sim->parsed()) {
      SimulationSpec spec;
      if (spec_arg == "single" || spec_arg == "three-state")
        spec = preset_spec(spec_arg);
      else
        spec = simulation_spec_from_json(read_file(spec_arg));
      if (seed) spec.seed = *seed;
      if (sim_length) spec.length = *sim_length;
      if (missing_rate) spec.missing_rate = *missing_rate;
      cmd_simulate(spec, out_dir);
      std::cout << "wrote " << out_dir << "/data.csv and " << out_dir << "/truth.json\n";
    } else if (fit->parsed()) {
      FitOptions fo{ingest, baseline, quiet ? nullptr : &std::cerr};
      const FitOutcome r = cmd_fit(data_path, config, out_dir, fo);
      std::cout << "kept " << r.draws << " draws in " << r.seconds << " s; archive " << r.archive_path << "\n";
      for (const auto& [k, v] : r.k_posterior) std::cout << "  P(K=" << k << ") = " << v << "\n";
    } else if (sum->parsed()) {
      SummarizeOptions so;
      so.summary.mc_size = mc_size ? *mc_size : config.summary_mc_size;
      so.summary.max_draws = max_draws;
      so.seed = config.seed;
      so.speed_index = config.speed_index;
      so.data_path = sum_data;
      so.ingest = ingest;
      cmd_summarize(archive_path, out_dir, so);
      std::cout << "wrote states.csv, dependence.csv, transitions.csv and k_posterior.csv to " << out_dir << "\n";
    } else if (ver->parsed()) {
      VerifyOptions vo;
      vo.ingest = ingest;
      vo.baseline_archive = baseline_archive;
      vo.baseline_config = config;
      vo.seed = config.seed;
      vo.max_draws = max_draws;
      vo.log = quiet ? nullptr : &std::cerr;
      for (const auto& row : cmd_verify(archive_path, data_path, out_dir, vo)) {
        std::cout << row.model;
        for (double v : row.metrics.ape) std::cout << "  APE " << v;
        for (double v : row.metrics.mse) std::cout << "  MSE " << v;
        std::cout << "\n";
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
