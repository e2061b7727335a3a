#include "jpsnhmm/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(double v) { return std::isfinite(v) ? fmt17(v) : std::string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

Vec to_vec(const ojson& a, const char* what) {
  if (!a.is_array()) throw ValidationError(std::string("simulation spec: ") + what + " must be an array");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

Mat to_mat(const ojson& a, const char* what) {
  if (!a.is_array() || a.empty()) throw ValidationError(std::string("simulation spec: ") + what + " must be a nonempty matrix");
  const auto cols = a[0].size();
  Mat m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != cols) throw ValidationError(std::string("simulation spec: ragged ") + what);
    m.row(static_cast<Eigen::Index>(i)) = to_vec(a[i], what).transpose();
  }
  return m;
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

ojson config_json(const FitConfig& c) {
  ojson j;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["truncation"] = c.truncation;
  j["seed"] = c.seed;
  j["niw_mean"] = c.niw_mean;
  j["niw_kappa"] = c.niw_kappa;
  j["niw_df"] = c.niw_df;
  j["niw_scale"] = c.niw_scale;
  j["lambda_mean"] = c.lambda_mean;
  j["lambda_variance"] = c.lambda_variance;
  j["tau_shape"] = c.hyper_prior.tau_shape;
  j["tau_scale"] = c.hyper_prior.tau_scale;
  j["gamma_shape"] = c.hyper_prior.gamma_shape;
  j["gamma_scale"] = c.hyper_prior.gamma_scale;
  j["varsigma_a"] = c.hyper_prior.varsigma_a;
  j["varsigma_b"] = c.hyper_prior.varsigma_b;
  j["init_states"] = c.init_states;
  j["threads"] = c.threads;
  j["speed_index"] = c.speed_index;
  j["summary_mc_size"] = c.summary_mc_size;
  return j;
}

// Three states ordered by increasing mean log speed; unit variance on every
// W coordinate so the parameters are already in identifiable form.
JpsnParams preset_state(double dir_g_deg, double dir_s_deg, double log_speed) {
  JpsnParams e;
  e.p = 2;
  e.q = 2;
  e.mu = Vec(6);
  const double a = deg_to_rad(dir_g_deg), b = deg_to_rad(dir_s_deg);
  e.mu << 3.0 * std::cos(a), 3.0 * std::sin(a), 3.0 * std::cos(b), 3.0 * std::sin(b), log_speed, log_speed;
  e.sigma = Mat::Identity(6, 6);
  e.sigma(0, 2) = e.sigma(2, 0) = 0.5;
  e.sigma(1, 3) = e.sigma(3, 1) = 0.5;
  e.sigma(4, 4) = e.sigma(5, 5) = 0.09;
  e.sigma(4, 5) = e.sigma(5, 4) = 0.06;
  e.sigma(0, 4) = e.sigma(4, 0) = 0.1;
  e.sigma(3, 5) = e.sigma(5, 3) = -0.1;
  e.lambda = Vec::Constant(2, 0.3);
  return e;
}

}  // namespace

void SimulationSpec::validate() const {
  if (p < 1 || q < 0) throw ValidationError("simulation spec: need p >= 1 and q >= 0");
  if (length < 0) throw ValidationError("simulation spec: T must be nonnegative");
  if (states.empty()) throw ValidationError("simulation spec: no states");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ValidationError("simulation spec: missing_rate outside [0, 1)");
  if (step <= 0) throw ValidationError("simulation spec: step_seconds must be positive");
  const auto K = static_cast<Eigen::Index>(states.size());
  for (const auto& s : states) {
    if (s.p != p || s.q != q) throw ValidationError("simulation spec: state dimensions differ");
    s.validate();
  }
  if (transition.rows() != K || transition.cols() != K)
    throw ValidationError("simulation spec: transition matrix must be K x K");
  auto check_row = [](const Vec& r, const char* what) {
    if ((r.array() < 0.0).any() || std::abs(r.sum() - 1.0) > 1e-9)
      throw ValidationError(std::string("simulation spec: ") + what + " is not a probability vector");
  };
  for (Eigen::Index k = 0; k < K; ++k) check_row(transition.row(k).transpose(), "a transition row");
  if (initial.size() > 0) {
    if (initial.size() != K) throw ValidationError("simulation spec: initial has the wrong length");
    check_row(initial, "initial");
  }
}

SimulationSpec simulation_spec_from_json(const std::string& text) {
  SimulationSpec s;
  try {
    const ojson j = ojson::parse(text);
    s.length = j.value("T", std::int64_t{0});
    s.seed = j.value("seed", std::uint64_t{1});
    s.missing_rate = j.value("missing_rate", 0.0);
    if (j.contains("start")) s.start = parse_timestamp(j.at("start").get<std::string>());
    s.step = j.value("step_seconds", std::int64_t{3600});
    s.p = j.value("p", 2);
    s.q = j.value("q", 2);
    for (const auto& st : j.at("states")) {
      JpsnParams e;
      e.p = s.p;
      e.q = s.q;
      e.mu = to_vec(st.at("mu"), "mu");
      e.sigma = to_mat(st.at("sigma"), "sigma");
      e.lambda = st.contains("lambda") ? to_vec(st.at("lambda"), "lambda") : Vec::Zero(s.q);
      s.states.push_back(std::move(e));
    }
    s.transition = j.contains("transition") ? to_mat(j.at("transition"), "transition") : Mat::Ones(1, 1);
    if (j.contains("initial")) s.initial = to_vec(j.at("initial"), "initial");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("simulation spec: ") + e.what());
  }
  s.validate();
  return s;
}

SimulationSpec preset_spec(const std::string& name) {
  SimulationSpec s;
  if (name == "single") {
    s.length = 500;
    s.states = {preset_state(60.0, 75.0, 1.0)};
    s.transition = Mat::Ones(1, 1);
  } else if (name == "three-state") {
    s.length = 2000;
    s.states = {preset_state(45.0, 60.0, 0.3), preset_state(165.0, 180.0, 1.2), preset_state(285.0, 300.0, 2.1)};
    s.transition = Mat::Constant(3, 3, 0.025);
    s.transition.diagonal().setConstant(0.95);
  } else {
    throw ValidationError("unknown preset '" + name + "' (expected single or three-state)");
  }
  s.validate();
  return s;
}

Simulated simulate_series(const SimulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<JpsnKernel> kernels;
  for (const auto& e : spec.states) kernels.emplace_back(e);
  const Eigen::Index T = spec.length;
  Simulated out{CylSeries::empty(spec.p, spec.q), std::vector<int>(static_cast<std::size_t>(T))};
  out.series.theta.resize(T, spec.p);
  out.series.y.resize(T, spec.q);
  const auto K = static_cast<Eigen::Index>(spec.states.size());
  const Vec initial = spec.initial.size() > 0 ? spec.initial : Vec(spec.transition.row(0).transpose());
  std::vector<double> probs(static_cast<std::size_t>(K));
  int z = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vec row = t == 0 ? initial : Vec(spec.transition.row(z).transpose());
    for (Eigen::Index k = 0; k < K; ++k) probs[static_cast<std::size_t>(k)] = row[k];
    z = static_cast<int>(rng.categorical(probs));
    out.z[static_cast<std::size_t>(t)] = z;
    const AugPoint pt = sample_jpsn(kernels[static_cast<std::size_t>(z)], rng);
    out.series.timestamps.push_back(spec.start + t * spec.step);
    for (int i = 0; i < spec.p; ++i) out.series.theta(t, i) = pt.theta[i];
    for (int j = 0; j < spec.q; ++j) out.series.y(t, j) = pt.y[j];
    if (spec.missing_rate > 0.0) {
      for (int i = 0; i < spec.p; ++i)
        if (rng.uniform() < spec.missing_rate) out.series.theta(t, i) = nan;
      for (int j = 0; j < spec.q; ++j)
        if (rng.uniform() < spec.missing_rate) out.series.y(t, j) = nan;
    }
  }
  return out;
}

std::string truth_to_json(const SimulationSpec& spec, const Simulated& sim) {
  ojson j;
  j["seed"] = spec.seed;
  j["T"] = spec.length;
  j["p"] = spec.p;
  j["q"] = spec.q;
  j["missing_rate"] = spec.missing_rate;
  j["transition"] = mat_json(spec.transition);
  ojson states = ojson::array();
  for (const auto& e : spec.states) {
    const JpsnParams r = rescale_identifiable(e);
    ojson s;
    s["mu"] = vec_json(e.mu);
    s["sigma"] = mat_json(e.sigma);
    s["lambda"] = vec_json(e.lambda);
    s["identifiable"] = {{"mu", vec_json(r.mu)}, {"sigma", mat_json(r.sigma)}, {"lambda", vec_json(r.lambda)}};
    states.push_back(std::move(s));
  }
  j["states"] = std::move(states);
  j["z"] = sim.z;
  return j.dump(1) + "\n";
}

void cmd_simulate(const SimulationSpec& spec, const std::string& out_dir) {
  if (spec.p != 2 || spec.q != 2) throw ValidationError("the CSV schema needs p = q = 2");
  const Simulated sim = simulate_series(spec);
  ensure_dir(out_dir);
  {
    auto out = open_out(out_dir + "/data.csv");
    write_series_csv(out, sim.series);
  }
  auto out = open_out(out_dir + "/truth.json");
  out << truth_to_json(spec, sim);
}

std::string data_hash(const std::string& data_path, const IngestOptions& ingest) {
  return hex64(fnv1a(read_file(data_path) + "\nseason=" + ingest.season));
}

FitOutcome cmd_fit(const std::string& data_path, FitConfig config, const std::string& out_dir,
                   const FitOptions& options) {
  if (options.baseline) config.truncation = 1;
  config.validate();
  const CylSeries data = ingest_csv(data_path, options.ingest);
  const std::string dhash = data_hash(data_path, options.ingest);
  const std::string mhash = hex64(fnv1a(format_config(config) + "data_hash=" + dhash));
  ensure_dir(out_dir);

  FitOutcome outcome;
  outcome.archive_path = out_dir + "/draws.jsonl";
  outcome.manifest_path = out_dir + "/manifest.json";
  outcome.manifest_hash = mhash;

  ArchiveWriter writer(outcome.archive_path, {mhash, dhash, data.size(), config.truncation, data.p, data.q});
  std::map<int, std::int64_t> k_counts;
  SamplerHooks hooks;
  hooks.keep_draws = false;
  hooks.on_draw = [&](const PosteriorDraw& d) {
    writer.append(d);
    ++k_counts[d.num_states()];
    ++outcome.draws;
  };
  if (options.log) {
    hooks.progress_every = std::max<std::int64_t>(1, config.iterations / 20);
    hooks.on_progress = [&](const SamplerProgress& p) {
      *options.log << "iteration " << p.iteration << "/" << p.total << "  K=" << p.num_states << "  "
                   << p.elapsed_seconds << " s" << std::endl;
    };
  }
  const auto start = std::chrono::steady_clock::now();
  run_sampler(data, config, hooks);
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& [k, n] : k_counts) outcome.k_posterior[k] = static_cast<double>(n) / static_cast<double>(outcome.draws);

  ojson m;
  m["manifest_hash"] = mhash;
  m["data_hash"] = dhash;
  m["data_path"] = data_path;
  m["season"] = options.ingest.season;
  m["baseline"] = options.baseline;
  m["T"] = data.size();
  m["seed"] = config.seed;
  m["config"] = config_json(config);
  m["draws_kept"] = outcome.draws;
  m["wall_time_seconds"] = outcome.seconds;
  m["sampler"] =
      "Gibbs sampler: every block is drawn from its full conditional (slice steps for the radial latents), "
      "so there are no Metropolis acceptance rates to report";
  ojson hist = ojson::object();
  for (const auto& [k, v] : outcome.k_posterior) hist[std::to_string(k)] = v;
  m["k_posterior"] = std::move(hist);
  m["speed_units"] =
      "speed is modelled on the log scale; reported speed means and variances are posterior means of "
      "exp(log speed) in m/s, not exp of the mean log speed";
  auto out = open_out(outcome.manifest_path);
  out << m.dump(1) << '\n';
  return outcome;
}

namespace {

Archive load_checked(const std::string& archive_path, const std::string& data_path, const IngestOptions& ingest) {
  Archive a = read_archive(archive_path);
  if (a.draws.draws.empty()) throw ValidationError("archive " + archive_path + " holds no draws");
  if (!data_path.empty() && data_hash(data_path, ingest) != a.header.data_hash)
    throw ValidationError("archive " + archive_path + " was not fitted on " + data_path +
                          " (manifest data hash mismatch)");
  return a;
}

void write_hash_line(std::ostream& out, const ArchiveHeader& h) {
  out << "# manifest_hash=" << h.manifest_hash << " data_hash=" << h.data_hash << '\n';
}

}  // namespace

void cmd_summarize(const std::string& archive_path, const std::string& out_dir, const SummarizeOptions& options) {
  const Archive a = load_checked(archive_path, options.data_path, options.ingest);
  const PosteriorDraws ordered = order_states(a.draws, options.speed_index);
  ensure_dir(out_dir);
  const char* names = "gs";
  auto coord = [&](int i) { return i < 2 ? std::string(1, names[i]) : std::to_string(i); };

  Rng rng(options.seed);
  const auto states = state_summaries(ordered, options.summary, rng);
  {
    auto out = open_out(out_dir + "/states.csv");
    write_hash_line(out, a.header);
    out << "state,occupancy,variable,alpha_deg,alpha_lo,alpha_hi,zeta,zeta_lo,zeta_hi\n";
    for (const auto& s : states)
      for (int i = 0; i < ordered.p; ++i) {
        const auto& al = s.direction_deg[static_cast<std::size_t>(i)];
        const auto& ze = s.concentration[static_cast<std::size_t>(i)];
        out << s.label << ',' << fmt17(s.occupancy) << ",theta_" << coord(i) << ',' << fmt_opt(al.mean) << ','
            << fmt_opt(al.ci.lo) << ',' << fmt_opt(al.ci.hi) << ',' << fmt17(ze.mean) << ',' << fmt17(ze.ci.lo) << ','
            << fmt17(ze.ci.hi) << '\n';
      }
    out << "state,occupancy,variable,mean_ms,mean_lo,mean_hi,var_ms2,var_lo,var_hi\n";
    for (const auto& s : states)
      for (int j = 0; j < ordered.q; ++j) {
        const auto& mu = s.mean[static_cast<std::size_t>(j)];
        const auto& va = s.variance[static_cast<std::size_t>(j)];
        out << s.label << ',' << fmt17(s.occupancy) << ",speed_" << coord(j) << ',' << fmt17(mu.mean) << ','
            << fmt17(mu.ci.lo) << ',' << fmt17(mu.ci.hi) << ',' << fmt17(va.mean) << ',' << fmt17(va.ci.lo) << ','
            << fmt17(va.ci.hi) << '\n';
      }
  }
  {
    auto out = open_out(out_dir + "/dependence.csv");
    write_hash_line(out, a.header);
    out << "state,measure,first,second,mean,lo,hi,visible,undefined_draws,clamped_draws\n";
    for (const auto& s : states) {
      const DependenceTable t = dependence_table(ordered, s.label, options.summary, rng);
      for (const auto& e : t.entries) {
        const bool first_circ = e.measure != "pearson";
        const bool second_circ = e.measure == "fisher";
        out << s.label << ',' << e.measure << ',' << (first_circ ? "theta_" : "speed_") << coord(e.first) << ','
            << (second_circ ? "theta_" : "speed_") << coord(e.second) << ',' << fmt_opt(e.estimate.mean) << ','
            << fmt_opt(e.estimate.ci.lo) << ',' << fmt_opt(e.estimate.ci.hi) << ',' << (e.visible ? 1 : 0) << ','
            << e.undefined_draws << ',' << e.clamped_draws << '\n';
      }
    }
  }
  const auto kpost = k_posterior(ordered);
  {
    auto out = open_out(out_dir + "/k_posterior.csv");
    write_hash_line(out, a.header);
    out << "K,probability\n";
    for (const auto& [k, v] : kpost) out << k << ',' << fmt17(v) << '\n';
  }
  {
    const int K = k_posterior_mode(ordered);
    const Mat trans = transition_summary(ordered, K);
    auto out = open_out(out_dir + "/transitions.csv");
    write_hash_line(out, a.header);
    out << "from,to,probability\n";
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) out << i << ',' << j << ',' << fmt_opt(trans(i, j)) << '\n';
  }
}

std::vector<VerifyRow> cmd_verify(const std::string& archive_path, const std::string& data_path,
                                  const std::string& out_dir, const VerifyOptions& options) {
  const Archive a = load_checked(archive_path, data_path, options.ingest);
  const CylSeries data = ingest_csv(data_path, options.ingest);
  if (a.header.length != data.size())
    throw ValidationError("archive series length " + std::to_string(a.header.length) + " differs from data length " +
                          std::to_string(data.size()));
  ensure_dir(out_dir);

  std::string baseline_path = options.baseline_archive;
  if (baseline_path.empty()) {
    FitOptions fo;
    fo.ingest = options.ingest;
    fo.baseline = true;
    fo.log = options.log;
    baseline_path = cmd_fit(data_path, options.baseline_config, out_dir + "/baseline", fo).archive_path;
  }
  const Archive b = load_checked(baseline_path, data_path, options.ingest);
  if (b.header.length != data.size()) throw ValidationError("baseline archive length differs from the data");

  std::vector<VerifyRow> rows;
  Rng rng(options.seed);
  rows.push_back({"shdp-hmm", verification_metrics(data, posterior_predict(a.draws, rng, options.max_draws))});
  rows.push_back({"baseline", verification_metrics(data, posterior_predict(b.draws, rng, options.max_draws))});

  auto out = open_out(out_dir + "/verification.csv");
  write_hash_line(out, a.header);
  out << "model,APE_g,APE_s,MSE_g_ms2,MSE_s_ms2\n";
  for (const auto& r : rows) {
    out << r.model;
    for (double v : r.metrics.ape) out << ',' << fmt17(v);
    for (double v : r.metrics.mse) out << ',' << fmt17(v);
    out << '\n';
  }
  return rows;
}

}  // namespace jpsnhmm
