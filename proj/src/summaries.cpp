#include "jpsnhmm/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {

constexpr double kUndefinedResultant = 1e-10;

struct Moments2 {
  double mean_a = 0.0, mean_b = 0.0, var_a = 0.0, var_b = 0.0, cov = 0.0;
};

Moments2 moments2(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  Moments2 m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m.mean_a += a[i];
    m.mean_b += b[i];
  }
  m.mean_a /= n;
  m.mean_b /= n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - m.mean_a;
    const double db = b[i] - m.mean_b;
    m.var_a += da * da;
    m.var_b += db * db;
    m.cov += da * db;
  }
  m.var_a /= n;
  m.var_b /= n;
  m.cov /= n;
  return m;
}

bool degenerate(double var, double mean) {
  const double scale = std::max(std::abs(mean), 1e-150);
  return var <= (1e-12 * scale) * (1e-12 * scale) || var <= 0.0;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E exp(t Y) for Y = mu + lambda D + H, D half-normal, H ~ N(0, s2).
double skew_normal_mgf(double t, double mu, double s2, double lambda) {
  return std::exp(t * mu + 0.5 * t * t * (s2 + lambda * lambda)) * 2.0 * std_normal_cdf(t * lambda);
}

Estimate linear_estimate(std::vector<double> values, double level) {
  Estimate e;
  double s = 0.0;
  for (double v : values) s += v;
  e.mean = s / static_cast<double>(values.size());
  e.ci = equal_tailed_interval(std::move(values), level);
  return e;
}

std::vector<const PosteriorDraw*> draws_with_state(const PosteriorDraws& draws, const std::vector<std::size_t>& idx,
                                                   int label) {
  std::vector<const PosteriorDraw*> out;
  for (auto i : idx) {
    const auto& d = draws.draws[i];
    if (d.states.count(label)) out.push_back(&d);
  }
  return out;
}

}  // namespace

CircularMoments circular_mean_concentration(std::span<const double> angles) {
  if (angles.empty()) throw DomainError("circular_mean_concentration: empty sample");
  double c = 0.0, s = 0.0;
  for (double a : angles) {
    c += std::cos(a);
    s += std::sin(a);
  }
  c /= static_cast<double>(angles.size());
  s /= static_cast<double>(angles.size());
  CircularMoments out;
  out.zeta = std::min(1.0, std::hypot(c, s));
  if (out.zeta >= kUndefinedResultant) out.alpha = atan_star({c, s}).radians();
  return out;
}

std::optional<double> fisher_corr(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  const std::size_t half = n / 2;
  if (half < 1) return std::nullopt;
  double num = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    const double da = std::sin(a[i] - a[i + half]);
    const double db = std::sin(b[i] - b[i + half]);
    num += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const double den = std::sqrt(saa * sbb);
  if (!(den > 1e-300)) return std::nullopt;
  return num / den;
}

std::optional<double> pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const Moments2 m = moments2(a, b);
  if (degenerate(m.var_a, m.mean_a) || degenerate(m.var_b, m.mean_b)) return std::nullopt;
  return std::clamp(m.cov / std::sqrt(m.var_a * m.var_b), -1.0, 1.0);
}

MardiaResult mardia_r2(std::span<const double> theta, std::span<const double> y) {
  MardiaResult out;
  if (theta.size() != y.size() || theta.size() < 3) return out;
  std::vector<double> c(theta.size()), s(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    c[i] = std::cos(theta[i]);
    s[i] = std::sin(theta[i]);
  }
  const auto rcy = pearson_corr(c, y);
  const auto rsy = pearson_corr(s, y);
  const auto rcs = pearson_corr(c, s);
  if (!rcy || !rsy || !rcs) return out;
  const double den = 1.0 - *rcs * *rcs;
  if (!(den > 1e-12)) return out;
  double v = (*rcy * *rcy + *rsy * *rsy - 2.0 * *rcy * *rsy * *rcs) / den;
  if (v < 0.0 || v > 1.0) {
    out.clamped = true;
    v = std::clamp(v, 0.0, 1.0);
  }
  out.value = v;
  return out;
}

LinearMoments linear_moments(const JpsnParams& params) {
  const int q = params.q;
  const Vec mu_y = params.mu.tail(q);
  const Vec sig_y = params.sigma.diagonal().tail(q);
  const double k = std::sqrt(2.0 / std::numbers::pi);
  return {mu_y + k * params.lambda, sig_y + (1.0 - 2.0 / std::numbers::pi) * params.lambda.cwiseAbs2()};
}

LinearMoments exp_linear_moments(const JpsnParams& params) {
  const int q = params.q;
  const int off = 2 * params.p;
  LinearMoments out{Vec(q), Vec(q)};
  for (int j = 0; j < q; ++j) {
    const double mu = params.mu[off + j];
    const double s2 = params.sigma(off + j, off + j);
    const double l = params.lambda[j];
    const double m1 = skew_normal_mgf(1.0, mu, s2, l);
    const double m2 = skew_normal_mgf(2.0, mu, s2, l);
    out.mean[j] = m1;
    out.variance[j] = std::max(0.0, m2 - m1 * m1);
  }
  return out;
}

double ape(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size()) throw DomainError("ape: sequences differ in length");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (std::isnan(observed[i]) || std::isnan(predicted[i])) continue;
    sum += circular_distance(observed[i], predicted[i]);
    ++n;
  }
  if (n == 0) throw DomainError("ape: no step with both values present");
  return sum / static_cast<double>(n);
}

double mse(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size()) throw DomainError("mse: sequences differ in length");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (std::isnan(observed[i]) || std::isnan(predicted[i])) continue;
    const double e = observed[i] - predicted[i];
    sum += e * e;
    ++n;
  }
  if (n == 0) throw DomainError("mse: no step with both values present");
  return sum / static_cast<double>(n);
}

Interval equal_tailed_interval(std::vector<double> values, double level) {
  if (values.empty()) throw DomainError("equal_tailed_interval: empty sample");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double prob) {
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {quantile(0.5 * (1.0 - level)), quantile(0.5 * (1.0 + level))};
}

Estimate circular_estimate(std::span<const double> angles, double level) {
  const CircularMoments cm = circular_mean_concentration(angles);
  const double centre = cm.alpha.value_or(0.0);
  std::vector<double> dev(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    double d = wrap_angle(angles[i] - centre);
    if (d > std::numbers::pi) d -= kTwoPi;
    dev[i] = d;
  }
  const Interval iv = equal_tailed_interval(std::move(dev), level);
  return {centre, {centre + iv.lo, centre + iv.hi}};
}

std::vector<std::size_t> thin_indices(std::size_t n, std::size_t max_draws) {
  std::vector<std::size_t> idx;
  if (max_draws == 0 || max_draws >= n) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  for (std::size_t k = 0; k < max_draws; ++k) idx.push_back(k * n / max_draws);
  return idx;
}

std::vector<StateSummary> state_summaries(const PosteriorDraws& draws, const SummaryOptions& options, Rng& rng) {
  std::vector<StateSummary> out;
  const auto idx = thin_indices(draws.draws.size(), options.max_draws);
  int max_label = -1;
  for (auto i : idx)
    for (const auto& [label, params] : draws.draws[i].states) max_label = std::max(max_label, label);

  for (int label = 0; label <= max_label; ++label) {
    const auto present = draws_with_state(draws, idx, label);
    if (present.empty()) continue;
    StateSummary s;
    s.label = label;
    s.occupancy = static_cast<double>(present.size()) / static_cast<double>(idx.size());
    const int p = draws.p;
    const int q = draws.q;
    std::vector<std::vector<double>> alpha(p), zeta(p), mean(q), var(q), log_mean(q);
    std::vector<double> sample(options.mc_size);
    for (const PosteriorDraw* d : present) {
      const JpsnParams& par = d->states.at(label);
      const JpsnKernel kernel(par);
      if (p > 0) {
        std::vector<AugPoint> pts(options.mc_size);
        for (auto& pt : pts) pt = sample_jpsn(kernel, rng);
        for (int i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < pts.size(); ++k) sample[k] = pts[k].theta[i];
          const auto cm = circular_mean_concentration(sample);
          zeta[i].push_back(cm.zeta);
          if (cm.alpha) alpha[i].push_back(*cm.alpha);
        }
      }
      const LinearMoments em = exp_linear_moments(par);
      const LinearMoments lm = linear_moments(par);
      for (int j = 0; j < q; ++j) {
        mean[j].push_back(em.mean[j]);
        var[j].push_back(em.variance[j]);
        log_mean[j].push_back(lm.mean[j]);
      }
    }
    for (int i = 0; i < p; ++i) {
      Estimate a;
      if (!alpha[i].empty()) {
        a = circular_estimate(alpha[i], options.level);
        a.mean = rad_to_deg(a.mean);
        a.ci = {rad_to_deg(a.ci.lo), rad_to_deg(a.ci.hi)};
      } else {
        a.mean = a.ci.lo = a.ci.hi = std::numeric_limits<double>::quiet_NaN();
      }
      s.direction_deg.push_back(a);
      s.concentration.push_back(linear_estimate(zeta[i], options.level));
    }
    for (int j = 0; j < q; ++j) {
      s.mean.push_back(linear_estimate(mean[j], options.level));
      s.variance.push_back(linear_estimate(var[j], options.level));
      s.log_mean.push_back(linear_estimate(log_mean[j], options.level));
    }
    out.push_back(std::move(s));
  }
  return out;
}

DependenceTable dependence_table(const PosteriorDraws& draws, int label, const SummaryOptions& options, Rng& rng) {
  DependenceTable table;
  table.label = label;
  const int p = draws.p;
  const int q = draws.q;
  const auto idx = thin_indices(draws.draws.size(), options.max_draws);
  const auto present = draws_with_state(draws, idx, label);
  table.draws_used = present.size();

  struct Acc {
    DependenceEntry entry;
    std::vector<double> values;
    std::vector<double> cov1, cov2;  // Cov(W_i1, Y_j), Cov(W_i2, Y_j) for Mardia
  };
  std::vector<Acc> acc;
  for (int i = 0; i < p; ++i)
    for (int k = i + 1; k < p; ++k) acc.push_back({{"fisher", i, k, {}, false, 0, 0}, {}, {}, {}});
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) acc.push_back({{"mardia", i, j, {}, false, 0, 0}, {}, {}, {}});
  for (int j = 0; j < q; ++j)
    for (int k = j + 1; k < q; ++k) acc.push_back({{"pearson", j, k, {}, false, 0, 0}, {}, {}, {}});

  const std::size_t n = options.mc_size;
  std::vector<std::vector<double>> th(p, std::vector<double>(n)), ys(q, std::vector<double>(n));
  for (const PosteriorDraw* d : present) {
    const JpsnParams& par = d->states.at(label);
    const JpsnKernel kernel(par);
    for (std::size_t s = 0; s < n; ++s) {
      const AugPoint pt = sample_jpsn(kernel, rng);
      for (int i = 0; i < p; ++i) th[i][s] = pt.theta[i];
      for (int j = 0; j < q; ++j) ys[j][s] = pt.y[j];
    }
    for (auto& a : acc) {
      std::optional<double> v;
      if (a.entry.measure == "fisher") {
        v = fisher_corr(th[a.entry.first], th[a.entry.second]);
      } else if (a.entry.measure == "mardia") {
        const auto m = mardia_r2(th[a.entry.first], ys[a.entry.second]);
        v = m.value;
        if (m.clamped) ++a.entry.clamped_draws;
        const int yi = 2 * p + a.entry.second;
        a.cov1.push_back(par.sigma(2 * a.entry.first, yi));
        a.cov2.push_back(par.sigma(2 * a.entry.first + 1, yi));
      } else {
        v = pearson_corr(ys[a.entry.first], ys[a.entry.second]);
      }
      if (v)
        a.values.push_back(*v);
      else
        ++a.entry.undefined_draws;
    }
  }
  for (auto& a : acc) {
    if (!a.values.empty()) {
      a.entry.estimate = linear_estimate(a.values, options.level);
      if (a.entry.measure == "mardia") {
        a.entry.visible = equal_tailed_interval(a.cov1, options.level).excludes_zero() ||
                          equal_tailed_interval(a.cov2, options.level).excludes_zero();
      } else {
        a.entry.visible = a.entry.estimate.ci.excludes_zero();
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      a.entry.estimate = {nan, {nan, nan}};
    }
    table.entries.push_back(std::move(a.entry));
  }
  return table;
}

Mat transition_summary(const PosteriorDraws& draws, int num_states) {
  Mat sum = Mat::Zero(num_states, num_states);
  Mat count = Mat::Zero(num_states, num_states);
  for (const auto& d : draws.draws) {
    for (int a = 0; a < num_states; ++a) {
      if (!d.states.count(a)) continue;
      for (int b = 0; b < num_states; ++b) {
        if (!d.states.count(b)) continue;
        sum(a, b) += d.pi(a, b);
        count(a, b) += 1.0;
      }
    }
  }
  return sum.cwiseQuotient(count);
}

Prediction posterior_predict(const PosteriorDraws& draws, Rng& rng, std::size_t max_draws) {
  const Eigen::Index T = draws.length;
  const int p = draws.p;
  const int q = draws.q;
  Mat cos_sum = Mat::Zero(T, p), sin_sum = Mat::Zero(T, p), y_sum = Mat::Zero(T, q), e_sum = Mat::Zero(T, q);
  const auto idx = thin_indices(draws.draws.size(), max_draws);
  for (auto i : idx) {
    const auto& d = draws.draws[i];
    std::map<int, JpsnKernel> kernels;
    for (const auto& [label, par] : d.states) kernels.emplace(label, JpsnKernel(par));
    for (Eigen::Index t = 0; t < T; ++t) {
      const AugPoint pt = sample_jpsn(kernels.at(d.z[static_cast<std::size_t>(t)]), rng);
      for (int k = 0; k < p; ++k) {
        cos_sum(t, k) += std::cos(pt.theta[k]);
        sin_sum(t, k) += std::sin(pt.theta[k]);
      }
      for (int j = 0; j < q; ++j) {
        y_sum(t, j) += pt.y[j];
        e_sum(t, j) += std::exp(pt.y[j]);
      }
    }
  }
  const double n = static_cast<double>(idx.size());
  Prediction out{Mat(T, p), Mat(T, p), y_sum / n, e_sum / n};
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 0; k < p; ++k) {
      const double c = cos_sum(t, k) / n, s = sin_sum(t, k) / n;
      out.zeta(t, k) = std::hypot(c, s);
      out.theta(t, k) = out.zeta(t, k) >= kUndefinedResultant ? wrap_angle(std::atan2(s, c))
                                                                 : std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

VerificationMetrics verification_metrics(const CylSeries& data, const Prediction& prediction) {
  if (data.size() != prediction.theta.rows()) throw DomainError("verification: series and prediction lengths differ");
  VerificationMetrics m;
  const Eigen::Index T = data.size();
  std::vector<double> obs(static_cast<std::size_t>(T)), pred(static_cast<std::size_t>(T));
  for (int i = 0; i < data.p; ++i) {
    for (Eigen::Index t = 0; t < T; ++t) {
      obs[static_cast<std::size_t>(t)] = data.theta(t, i);
      pred[static_cast<std::size_t>(t)] = prediction.theta(t, i);
    }
    m.ape.push_back(ape(obs, pred));
  }
  for (int j = 0; j < data.q; ++j) {
    for (Eigen::Index t = 0; t < T; ++t) {
      obs[static_cast<std::size_t>(t)] = std::exp(data.y(t, j));
      pred[static_cast<std::size_t>(t)] = prediction.speed(t, j);
    }
    m.mse.push_back(mse(obs, pred));
  }
  return m;
}

}  // namespace jpsnhmm
