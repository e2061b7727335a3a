#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>

#include "jpsnhmm/posterior.hpp"
#include "jpsnhmm/sampler.hpp"
#include "jpsnhmm/series.hpp"

namespace jpsnhmm {

/// Column layout of the wind CSV. Coordinate 0 is the observed (ground)
/// series, coordinate 1 the simulated one.
inline constexpr const char* kCsvHeader = "timestamp,dir_obs_deg,speed_obs_ms,dir_sim_deg,speed_sim_ms";

struct IngestOptions {
  std::string season;  ///< "", "DJF", "MAM", "JJA" or "SON"
};

/// Parses the wind CSV: degrees to radians, speed to log speed, empty cells
/// to NaN. Timestamps must be strictly increasing and uniformly spaced in the
/// file; the season filter is applied afterwards. Throws ValidationError with
/// the offending line number.
CylSeries read_series_csv(std::istream& in, const IngestOptions& options = {});
CylSeries ingest_csv(const std::string& path, const IngestOptions& options = {});

/// Inverse of ingest_csv, 17 significant digits.
void write_series_csv(std::ostream& out, const CylSeries& series);
void write_series_csv(const std::string& path, const CylSeries& series);

/// "2019-12-01T00:00:00Z" (the Z and the T are optional on input).
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_seconds);
/// 1..12
int month_of(std::int64_t epoch_seconds);

/// Flat key = value config; '#' starts a comment. Unknown keys and malformed
/// values are ValidationErrors. Missing keys keep their defaults.
FitConfig parse_config(const std::string& text, FitConfig base = {});
FitConfig load_config(const std::string& path, FitConfig base = {});
/// Every key with its value, in parse_config syntax.
std::string format_config(const FitConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);
std::string read_file(const std::string& path);

struct ArchiveHeader {
  std::string manifest_hash;
  std::string data_hash;
  std::int64_t length = 0;
  int truncation = 0;
  int p = 0;
  int q = 0;
};

/// Newline-delimited JSON archive: a header record, then one retained draw per
/// line, flushed as it is written.
class ArchiveWriter {
 public:
  ArchiveWriter(const std::string& path, const ArchiveHeader& header);
  void append(const PosteriorDraw& draw);

 private:
  std::ofstream out_;
};

struct Archive {
  ArchiveHeader header;
  PosteriorDraws draws;
  bool truncated_tail = false;  ///< an incomplete last line was ignored
};

/// Reads an archive. An unparsable final line (an interrupted write) is
/// dropped; a bad line anywhere else is a ValidationError.
Archive read_archive(const std::string& path);

std::string draw_to_json(const PosteriorDraw& draw);
PosteriorDraw draw_from_json(const std::string& line, int p, int q);

}  // namespace jpsnhmm
