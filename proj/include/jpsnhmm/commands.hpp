#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "jpsnhmm/io.hpp"
#include "jpsnhmm/summaries.hpp"

namespace jpsnhmm {

/// Generative setup for synthetic series: per-state emission parameters and a
/// transition matrix. The first state is drawn from `initial` (row 0 of the
/// transition matrix when empty).
struct SimulationSpec {
  int p = 2;
  int q = 2;
  std::int64_t length = 0;
  std::uint64_t seed = 1;
  double missing_rate = 0.0;  ///< each cell independently blank with this probability
  std::int64_t start = 1577836800;  ///< 2020-01-01T00:00:00Z
  std::int64_t step = 3600;
  std::vector<JpsnParams> states;
  Mat transition;
  Vec initial;

  void validate() const;
};

/// JSON keys: T, seed, missing_rate, start, step_seconds, transition, initial,
/// states: [{mu, sigma, lambda}].
SimulationSpec simulation_spec_from_json(const std::string& text);
/// "single" (one state) or "three-state" (three well separated states, T = 2000).
SimulationSpec preset_spec(const std::string& name);

struct Simulated {
  CylSeries series;
  std::vector<int> z;
};

Simulated simulate_series(const SimulationSpec& spec);
std::string truth_to_json(const SimulationSpec& spec, const Simulated& sim);

/// Writes out_dir/data.csv and out_dir/truth.json.
void cmd_simulate(const SimulationSpec& spec, const std::string& out_dir);

struct FitOptions {
  IngestOptions ingest;
  bool baseline = false;        ///< force a single state (truncation 1)
  std::ostream* log = nullptr;  ///< progress lines when set
};

struct FitOutcome {
  std::string archive_path;
  std::string manifest_path;
  std::string manifest_hash;
  std::int64_t draws = 0;
  std::map<int, double> k_posterior;
  double seconds = 0.0;
};

/// Hash of the data file bytes together with the season filter.
std::string data_hash(const std::string& data_path, const IngestOptions& ingest);

/// Writes out_dir/draws.jsonl (append-only) and out_dir/manifest.json.
FitOutcome cmd_fit(const std::string& data_path, FitConfig config, const std::string& out_dir,
                   const FitOptions& options = {});

struct SummarizeOptions {
  SummaryOptions summary;
  std::uint64_t seed = 1;
  int speed_index = 0;
  std::string data_path;  ///< when set, the archive must have been fitted on it
  IngestOptions ingest;
};

/// Writes states.csv, dependence.csv, transitions.csv and k_posterior.csv.
void cmd_summarize(const std::string& archive_path, const std::string& out_dir, const SummarizeOptions& options);

struct VerifyRow {
  std::string model;
  VerificationMetrics metrics;
};

struct VerifyOptions {
  IngestOptions ingest;
  std::string baseline_archive;  ///< fit a single-state model when empty
  FitConfig baseline_config;
  std::uint64_t seed = 1;
  std::size_t max_draws = 0;
  std::ostream* log = nullptr;
};

/// Writes out_dir/verification.csv: APE per angle, MSE per speed (m/s
/// squared) for the fitted model and the single-state baseline.
std::vector<VerifyRow> cmd_verify(const std::string& archive_path, const std::string& data_path,
                                  const std::string& out_dir, const VerifyOptions& options);

}  // namespace jpsnhmm
