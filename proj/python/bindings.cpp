// Python bindings for the jpsnhmm library.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jpsnhmm/commands.hpp"
#include "jpsnhmm/errors.hpp"
#include "jpsnhmm/io.hpp"
#include "jpsnhmm/summaries.hpp"

namespace py = pybind11;
using namespace jpsnhmm;

namespace {

JpsnParams make_params(int p, int q, const Vec& mu, const Mat& sigma, const Vec& lambda) {
  JpsnParams e{p, q, mu, sigma, lambda};
  e.validate();
  return e;
}

FitConfig config_from(const std::string& text, std::optional<std::uint64_t> seed) {
  FitConfig c = parse_config(text);
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

py::dict outcome_dict(const FitOutcome& r) {
  py::dict d;
  d["archive"] = r.archive_path;
  d["manifest"] = r.manifest_path;
  d["manifest_hash"] = r.manifest_hash;
  d["draws"] = r.draws;
  d["k_posterior"] = r.k_posterior;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sticky HDP-HMM with joint projected and skew normal emissions";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "simulate",
      [](const std::string& spec, const std::string& out_dir, std::optional<std::uint64_t> seed,
         std::optional<std::int64_t> length, double missing_rate) {
        SimulationSpec s = (spec == "single" || spec == "three-state") ? preset_spec(spec)
                                                                        : simulation_spec_from_json(spec);
        if (seed) s.seed = *seed;
        if (length) s.length = *length;
        s.missing_rate = missing_rate;
        cmd_simulate(s, out_dir);
      },
      py::arg("spec"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("length") = py::none(),
      py::arg("missing_rate") = 0.0, "Write out_dir/data.csv and truth.json from a preset name or JSON spec text.");

  m.def(
      "fit",
      [](const std::string& data, const std::string& out_dir, const std::string& config,
         std::optional<std::uint64_t> seed, const std::string& season, bool baseline) {
        FitOptions o;
        o.ingest.season = season;
        o.baseline = baseline;
        FitOutcome r;
        {
          py::gil_scoped_release release;
          r = cmd_fit(data, config_from(config, seed), out_dir, o);
        }
        return outcome_dict(r);
      },
      py::arg("data"), py::arg("out_dir"), py::arg("config") = "", py::arg("seed") = py::none(),
      py::arg("season") = "", py::arg("baseline") = false,
      "Run the sampler; config is key = value text. Returns archive paths and the K posterior.");

  m.def(
      "summarize",
      [](const std::string& archive, const std::string& out_dir, std::size_t mc_size, std::size_t max_draws,
         std::uint64_t seed, const std::string& data) {
        SummarizeOptions o;
        o.summary.mc_size = mc_size;
        o.summary.max_draws = max_draws;
        o.seed = seed;
        o.data_path = data;
        py::gil_scoped_release release;
        cmd_summarize(archive, out_dir, o);
      },
      py::arg("archive"), py::arg("out_dir"), py::arg("mc_size") = 10000, py::arg("max_draws") = 0,
      py::arg("seed") = 1, py::arg("data") = "");

  m.def(
      "verify",
      [](const std::string& archive, const std::string& data, const std::string& out_dir, const std::string& config,
         const std::string& baseline_archive, std::size_t max_draws) {
        VerifyOptions o;
        o.baseline_config = config_from(config, std::nullopt);
        o.seed = o.baseline_config.seed;
        o.baseline_archive = baseline_archive;
        o.max_draws = max_draws;
        std::vector<VerifyRow> rows;
        {
          py::gil_scoped_release release;
          rows = cmd_verify(archive, data, out_dir, o);
        }
        py::dict d;
        for (const auto& r : rows) d[py::str(r.model)] = py::dict(py::arg("ape") = r.metrics.ape, py::arg("mse") = r.metrics.mse);
        return d;
      },
      py::arg("archive"), py::arg("data"), py::arg("out_dir"), py::arg("config") = "",
      py::arg("baseline_archive") = "", py::arg("max_draws") = 0);

  m.def(
      "ingest",
      [](const std::string& path, const std::string& season) {
        const CylSeries s = ingest_csv(path, {season});
        py::dict d;
        d["timestamps"] = s.timestamps;
        d["theta"] = s.theta;
        d["y"] = s.y;
        return d;
      },
      py::arg("path"), py::arg("season") = "", "Angles in radians, linear values as log speed, NaN when missing.");

  m.def(
      "linear_moments",
      [](int p, int q, const Vec& mu, const Mat& sigma, const Vec& lambda) {
        const LinearMoments lm = linear_moments(make_params(p, q, mu, sigma, lambda));
        return std::make_pair(lm.mean, lm.variance);
      },
      py::arg("p"), py::arg("q"), py::arg("mu"), py::arg("sigma"), py::arg("lam"));

  m.def(
      "sample_jpsn",
      [](int p, int q, const Vec& mu, const Mat& sigma, const Vec& lambda, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        const auto pts = sample_jpsn(make_params(p, q, mu, sigma, lambda), n, rng);
        Mat theta(static_cast<Eigen::Index>(n), p), y(static_cast<Eigen::Index>(n), q);
        for (std::size_t i = 0; i < n; ++i) {
          theta.row(static_cast<Eigen::Index>(i)) = pts[i].theta.transpose();
          y.row(static_cast<Eigen::Index>(i)) = pts[i].y.transpose();
        }
        return std::make_pair(theta, y);
      },
      py::arg("p"), py::arg("q"), py::arg("mu"), py::arg("sigma"), py::arg("lam"), py::arg("n"),
      py::arg("seed") = 1);

  m.def(
      "circular_mean",
      [](const std::vector<double>& angles) {
        const CircularMoments c = circular_mean_concentration(angles);
        return std::make_pair(c.alpha, c.zeta);
      },
      py::arg("angles"), "(alpha or None, zeta)");
  m.def("fisher_corr", [](const std::vector<double>& a, const std::vector<double>& b) { return fisher_corr(a, b); });
  m.def("mardia_r2",
        [](const std::vector<double>& t, const std::vector<double>& y) { return mardia_r2(t, y).value; });
  m.def("ape", [](const std::vector<double>& o, const std::vector<double>& p) { return ape(o, p); });
  m.def("mse", [](const std::vector<double>& o, const std::vector<double>& p) { return mse(o, p); });
}
