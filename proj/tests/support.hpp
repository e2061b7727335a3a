#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "jpsnhmm/linalg.hpp"
#include "jpsnhmm/random.hpp"

namespace testing {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Standard error of the mean for independent draws.
inline double se_mean(const std::vector<double>& v) { return std::sqrt(variance(v) / static_cast<double>(v.size())); }

/// Standard error of the sample variance: sd of (x - mean)^2 over sqrt(n).
inline double se_variance(const std::vector<double>& v) {
  const double m = mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return se_mean(sq);
}

/// Batch-means standard error for a correlated chain.
inline double se_batch(const std::vector<double>& v, std::size_t batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += v[i];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(variance(means) / static_cast<double>(batches));
}

/// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 2pi).
inline double ks_uniform_circle(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = v[i] / (2.0 * std::numbers::pi);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of sqrt(n) * D.
inline constexpr double kKsCritical1 = 1.628;

/// Two-sample Kuiper statistic V = D+ + D-.
inline double kuiper_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double dplus = 0.0, dminus = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double diff = static_cast<double>(i) / na - static_cast<double>(j) / nb;
    dplus = std::max(dplus, diff);
    dminus = std::max(dminus, -diff);
  }
  return dplus + dminus;
}

/// Asymptotic p-value of the two-sample Kuiper statistic.
inline double kuiper_p_value(double v, std::size_t na, std::size_t nb) {
  const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
  const double lam = (std::sqrt(ne) + 0.155 + 0.24 / std::sqrt(ne)) * v;
  if (lam < 0.4) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = 4.0 * k * k * lam * lam - 1.0;
    sum += t * std::exp(-2.0 * k * k * lam * lam);
  }
  return std::min(1.0, 2.0 * sum);
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline jpsnhmm::Mat random_spd(int n, jpsnhmm::Rng& rng, double lo = 0.3, double hi = 2.0) {
  jpsnhmm::Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<jpsnhmm::Mat> qr(a);
  const jpsnhmm::Mat q = qr.householderQ();
  jpsnhmm::Vec ev(n);
  for (int i = 0; i < n; ++i) ev[i] = lo + (hi - lo) * rng.uniform();
  jpsnhmm::Mat s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace testing
