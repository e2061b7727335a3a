#include "jpsnhmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {

using ojson = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

bool in_season(int month, const std::string& season) {
  if (season.empty()) return true;
  if (season == "DJF") return month == 12 || month == 1 || month == 2;
  if (season == "MAM") return month >= 3 && month <= 5;
  if (season == "JJA") return month >= 6 && month <= 8;
  if (season == "SON") return month >= 9 && month <= 11;
  throw ValidationError("unknown season '" + season + "' (expected DJF, MAM, JJA or SON)");
}

ojson vec_json(const Vec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ojson mat_json(const Mat& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

Vec json_vec(const ojson& a, Eigen::Index n, const char* what) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n)
    throw ValidationError(std::string("archive: bad length for ") + what);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Mat json_mat(const ojson& a, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows)
    throw ValidationError(std::string("archive: bad shape for ") + what);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = json_vec(a[static_cast<std::size_t>(i)], cols, what).transpose();
  return m;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const std::string t = trim(text);
  if (std::sscanf(t.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s, &consumed) != 7 ||
      (sep != 'T' && sep != ' '))
    throw ValidationError("unparsable timestamp '" + text + "'");
  const std::string rest = t.substr(static_cast<std::size_t>(consumed));
  if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
    throw ValidationError("timestamp '" + text + "' must be UTC");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw ValidationError("invalid timestamp '" + text + "'");
  return sys_days{ymd}.time_since_epoch().count() * 86400LL + h * 3600LL + mi * 60LL + s;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  std::int64_t days_count = epoch_seconds / 86400;
  std::int64_t secs = epoch_seconds % 86400;
  if (secs < 0) {
    secs += 86400;
    --days_count;
  }
  const year_month_day ymd{sys_days{days{days_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

int month_of(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  std::int64_t days_count = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --days_count;
  return static_cast<int>(static_cast<unsigned>(year_month_day{sys_days{days{days_count}}}.month()));
}

CylSeries read_series_csv(std::istream& in, const IngestOptions& options) {
  in_season(1, options.season);  // validates the name
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (trim(line) != kCsvHeader) line_error(lineno, std::string("expected header '") + kCsvHeader + "'");
    have_header = true;
    break;
  }
  if (!have_header) throw ValidationError("empty input: missing header");

  struct Row {
    std::int64_t ts;
    double v[4];
  };
  std::vector<Row> rows;
  std::int64_t step = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) line_error(lineno, "expected 5 fields, found " + std::to_string(cells.size()));
    Row row{};
    try {
      row.ts = parse_timestamp(cells[0]);
    } catch (const ValidationError& e) {
      line_error(lineno, e.what());
    }
    for (int c = 0; c < 4; ++c) {
      const std::string& cell = cells[static_cast<std::size_t>(c + 1)];
      if (cell.empty()) {
        row.v[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v)) line_error(lineno, "not a number: '" + cell + "'");
      if (c % 2 == 0) {
        if (v < 0.0 || v >= 360.0) line_error(lineno, "direction " + cell + " outside [0, 360)");
        row.v[c] = deg_to_rad(v);
      } else {
        if (v <= 0.0)
          line_error(lineno, "speed " + cell + " is not strictly positive (zero speeds are not supported)");
        row.v[c] = std::log(v);
      }
    }
    if (!rows.empty()) {
      const std::int64_t diff = row.ts - rows.back().ts;
      if (diff <= 0) line_error(lineno, "timestamps must be strictly increasing");
      if (step == 0)
        step = diff;
      else if (diff != step)
        line_error(lineno, "nonuniform spacing: " + std::to_string(diff) + " s after a " + std::to_string(step) +
                               " s step");
    }
    rows.push_back(row);
  }

  CylSeries s = CylSeries::empty(2, 2);
  std::vector<const Row*> kept;
  for (const auto& r : rows)
    if (in_season(month_of(r.ts), options.season)) kept.push_back(&r);
  const auto T = static_cast<Eigen::Index>(kept.size());
  s.theta.resize(T, 2);
  s.y.resize(T, 2);
  s.timestamps.reserve(kept.size());
  for (Eigen::Index t = 0; t < T; ++t) {
    const Row& r = *kept[static_cast<std::size_t>(t)];
    s.timestamps.push_back(r.ts);
    s.theta(t, 0) = r.v[0];
    s.y(t, 0) = r.v[1];
    s.theta(t, 1) = r.v[2];
    s.y(t, 1) = r.v[3];
  }
  return s;
}

CylSeries ingest_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_series_csv(in, options);
}

void write_series_csv(std::ostream& out, const CylSeries& s) {
  if (s.p != 2 || s.q != 2) throw ValidationError("the CSV schema holds exactly two angles and two speeds");
  out << kCsvHeader << '\n';
  auto dir = [](double th) {
    if (std::isnan(th)) return std::string();
    double deg = rad_to_deg(th);
    if (deg >= 360.0) deg -= 360.0;
    return fmt17(deg);
  };
  auto speed = [](double y) { return std::isnan(y) ? std::string() : fmt17(std::exp(y)); };
  for (Eigen::Index t = 0; t < s.size(); ++t) {
    out << format_timestamp(s.timestamps[static_cast<std::size_t>(t)]) << ',' << dir(s.theta(t, 0)) << ','
        << speed(s.y(t, 0)) << ',' << dir(s.theta(t, 1)) << ',' << speed(s.y(t, 1)) << '\n';
  }
}

void write_series_csv(const std::string& path, const CylSeries& s) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_series_csv(out, s);
}

FitConfig parse_config(const std::string& text, FitConfig c) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) line_error(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto real = [&](double& dst) {
      if (!parse_double(val, dst)) line_error(lineno, "bad number for " + key + ": '" + val + "'");
    };
    auto integer = [&](auto& dst) {
      if (!parse_int(val, dst)) line_error(lineno, "bad integer for " + key + ": '" + val + "'");
    };
    if (key == "iterations") integer(c.iterations);
    else if (key == "burn_in") integer(c.burn_in);
    else if (key == "thin") integer(c.thin);
    else if (key == "truncation") integer(c.truncation);
    else if (key == "seed") integer(c.seed);
    else if (key == "niw_mean") real(c.niw_mean);
    else if (key == "niw_kappa") real(c.niw_kappa);
    else if (key == "niw_df") real(c.niw_df);
    else if (key == "niw_scale") real(c.niw_scale);
    else if (key == "lambda_mean") real(c.lambda_mean);
    else if (key == "lambda_variance") real(c.lambda_variance);
    else if (key == "tau_shape") real(c.hyper_prior.tau_shape);
    else if (key == "tau_scale") real(c.hyper_prior.tau_scale);
    else if (key == "gamma_shape") real(c.hyper_prior.gamma_shape);
    else if (key == "gamma_scale") real(c.hyper_prior.gamma_scale);
    else if (key == "varsigma_a") real(c.hyper_prior.varsigma_a);
    else if (key == "varsigma_b") real(c.hyper_prior.varsigma_b);
    else if (key == "init_states") integer(c.init_states);
    else if (key == "threads") integer(c.threads);
    else if (key == "speed_index") integer(c.speed_index);
    else if (key == "summary_mc_size") integer(c.summary_mc_size);
    else line_error(lineno, "unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

FitConfig load_config(const std::string& path, FitConfig base) { return parse_config(read_file(path), std::move(base)); }

std::string format_config(const FitConfig& c) {
  std::ostringstream o;
  o << "iterations = " << c.iterations << "\nburn_in = " << c.burn_in << "\nthin = " << c.thin
    << "\ntruncation = " << c.truncation << "\nseed = " << c.seed << "\nniw_mean = " << fmt17(c.niw_mean)
    << "\nniw_kappa = " << fmt17(c.niw_kappa) << "\nniw_df = " << fmt17(c.niw_df)
    << "\nniw_scale = " << fmt17(c.niw_scale) << "\nlambda_mean = " << fmt17(c.lambda_mean)
    << "\nlambda_variance = " << fmt17(c.lambda_variance) << "\ntau_shape = " << fmt17(c.hyper_prior.tau_shape)
    << "\ntau_scale = " << fmt17(c.hyper_prior.tau_scale) << "\ngamma_shape = " << fmt17(c.hyper_prior.gamma_shape)
    << "\ngamma_scale = " << fmt17(c.hyper_prior.gamma_scale) << "\nvarsigma_a = " << fmt17(c.hyper_prior.varsigma_a)
    << "\nvarsigma_b = " << fmt17(c.hyper_prior.varsigma_b) << "\ninit_states = " << c.init_states
    << "\nthreads = " << c.threads << "\nspeed_index = " << c.speed_index
    << "\nsummary_mc_size = " << c.summary_mc_size << '\n';
  return o.str();
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string draw_to_json(const PosteriorDraw& d) {
  ojson j;
  j["type"] = "draw";
  j["iteration"] = d.iteration;
  j["z"] = d.z;
  j["tau"] = d.hyper.tau;
  j["gamma"] = d.hyper.gamma;
  j["varsigma"] = d.hyper.varsigma;
  j["beta"] = vec_json(d.beta);
  j["pi"] = mat_json(d.pi);
  ojson states = ojson::array();
  for (const auto& [label, e] : d.states) {
    ojson s;
    s["label"] = label;
    s["mu"] = vec_json(e.mu);
    s["sigma"] = mat_json(e.sigma);
    s["lambda"] = vec_json(e.lambda);
    states.push_back(std::move(s));
  }
  j["states"] = std::move(states);
  ojson imp = ojson::array();
  for (const auto& m : d.imputed) imp.push_back(ojson::array({m.t, m.circular ? "theta" : "y", m.index, m.value}));
  j["imputed"] = std::move(imp);
  return j.dump();
}

PosteriorDraw draw_from_json(const std::string& line, int p, int q) {
  const ojson j = ojson::parse(line);
  if (j.value("type", "") != "draw") throw ValidationError("archive: expected a draw record");
  PosteriorDraw d;
  d.iteration = j.at("iteration").get<std::int64_t>();
  d.z = j.at("z").get<std::vector<int>>();
  d.hyper = {j.at("tau").get<double>(), j.at("gamma").get<double>(), j.at("varsigma").get<double>()};
  const auto L = static_cast<Eigen::Index>(j.at("beta").size());
  d.beta = json_vec(j.at("beta"), L, "beta");
  d.pi = json_mat(j.at("pi"), L, L, "pi");
  const int dim = 2 * p + q;
  for (const auto& s : j.at("states")) {
    JpsnParams e;
    e.p = p;
    e.q = q;
    e.mu = json_vec(s.at("mu"), dim, "mu");
    e.sigma = json_mat(s.at("sigma"), dim, dim, "sigma");
    e.lambda = json_vec(s.at("lambda"), q, "lambda");
    d.states.emplace(s.at("label").get<int>(), std::move(e));
  }
  for (const auto& m : j.at("imputed"))
    d.imputed.push_back({m.at(0).get<std::int64_t>(), m.at(1).get<std::string>() == "theta", m.at(2).get<int>(),
                         m.at(3).get<double>()});
  for (int s : d.z)
    if (s < 0 || s >= L || !d.states.count(s)) throw ValidationError("archive: state label out of range");
  return d;
}

ArchiveWriter::ArchiveWriter(const std::string& path, const ArchiveHeader& h) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ValidationError("cannot write " + path);
  ojson j;
  j["type"] = "header";
  j["format"] = "jpsnhmm-draws";
  j["version"] = 1;
  j["manifest_hash"] = h.manifest_hash;
  j["data_hash"] = h.data_hash;
  j["T"] = h.length;
  j["L"] = h.truncation;
  j["p"] = h.p;
  j["q"] = h.q;
  out_ << j.dump() << '\n';
  out_.flush();
}

void ArchiveWriter::append(const PosteriorDraw& draw) {
  out_ << draw_to_json(draw) << '\n';
  out_.flush();
}

Archive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  Archive a;
  std::string line;
  if (!std::getline(in, line) || in.eof()) throw ValidationError("archive " + path + ": missing header");
  try {
    const ojson h = ojson::parse(line);
    if (h.value("type", "") != "header") throw ValidationError("archive: first record is not a header");
    a.header = {h.at("manifest_hash").get<std::string>(), h.at("data_hash").get<std::string>(),
                h.at("T").get<std::int64_t>(), h.at("L").get<int>(), h.at("p").get<int>(), h.at("q").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("archive " + path + ": bad header: " + e.what());
  }
  a.draws = {a.header.p, a.header.q, a.header.truncation, a.header.length, {}};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    // A record is complete only when its newline made it to disk.
    const bool complete = !in.eof();
    try {
      if (!complete) throw ValidationError("incomplete record");
      PosteriorDraw d = draw_from_json(line, a.header.p, a.header.q);
      if (static_cast<std::int64_t>(d.z.size()) != a.header.length)
        throw ValidationError("z length differs from the header");
      a.draws.draws.push_back(std::move(d));
    } catch (const std::exception& e) {
      if (in.peek() == std::char_traits<char>::eof()) {
        a.truncated_tail = true;
        break;
      }
      throw ValidationError("archive " + path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return a;
}

}  // namespace jpsnhmm
