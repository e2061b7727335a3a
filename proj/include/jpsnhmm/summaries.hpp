#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jpsnhmm/jpsn.hpp"
#include "jpsnhmm/posterior.hpp"
#include "jpsnhmm/series.hpp"

namespace jpsnhmm {

struct CircularMoments {
  std::optional<double> alpha;  ///< radians; empty when the resultant length vanishes
  double zeta = 0.0;            ///< mean resultant length
};

/// Circular mean and concentration of a sample of angles. Throws DomainError
/// on an empty sample.
CircularMoments circular_mean_concentration(std::span<const double> angles);

/// Fisher-Lee circular correlation. The independent copy (Theta*, Theta'*) is
/// realised by pairing the first half of the sample with the second half.
/// Empty when fewer than two pairs or the denominator vanishes.
std::optional<double> fisher_corr(std::span<const double> a, std::span<const double> b);

struct MardiaResult {
  std::optional<double> value;
  bool clamped = false;  ///< a small negative estimate was set to 0
};

/// Mardia circular-linear dependence from the sample correlations of
/// (cos theta, y), (sin theta, y) and (cos theta, sin theta).
MardiaResult mardia_r2(std::span<const double> theta, std::span<const double> y);

std::optional<double> pearson_corr(std::span<const double> a, std::span<const double> b);

struct LinearMoments {
  Vec mean;
  Vec variance;
};

/// Closed-form mean and variance of the skew-normal linear block.
LinearMoments linear_moments(const JpsnParams& params);

/// Closed-form mean and variance of exp(Y_j) (speed units when Y is log speed).
LinearMoments exp_linear_moments(const JpsnParams& params);

/// Mean circular distance over the steps where both entries are present
/// (NaN marks missing). Throws DomainError when no step survives.
double ape(std::span<const double> observed, std::span<const double> predicted);
/// Mean squared error with the same pairwise missing rule.
double mse(std::span<const double> observed, std::span<const double> predicted);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

/// Equal-tailed quantile interval (linear interpolation between order statistics).
Interval equal_tailed_interval(std::vector<double> values, double level = 0.95);

struct Estimate {
  double mean = 0.0;
  Interval ci;
};

/// Circular posterior mean of a sample of angles with an equal-tailed interval
/// of the deviations around it. All in radians; bounds may leave [0, 2pi).
Estimate circular_estimate(std::span<const double> angles, double level = 0.95);

struct SummaryOptions {
  std::size_t mc_size = 10000;  ///< Monte Carlo sample per posterior draw
  std::size_t max_draws = 0;    ///< evenly thinned subset of draws; 0 = all
  double level = 0.95;
};

struct StateSummary {
  int label = 0;
  double occupancy = 0.0;  ///< share of draws in which the state is occupied
  std::vector<Estimate> direction_deg;     ///< circular mean alpha, degrees
  std::vector<Estimate> concentration;     ///< zeta
  std::vector<Estimate> mean;              ///< E(exp Y_j)
  std::vector<Estimate> variance;          ///< Var(exp Y_j)
  std::vector<Estimate> log_mean;          ///< E(Y_j) on the modelling scale
};

/// Per-state summaries of a labelled (normally order_states'd) archive.
std::vector<StateSummary> state_summaries(const PosteriorDraws& draws, const SummaryOptions& options, Rng& rng);

struct DependenceEntry {
  std::string measure;  ///< "fisher", "mardia" or "pearson"
  int first = 0;        ///< circular index (fisher, mardia) or linear index (pearson)
  int second = 0;       ///< circular index (fisher) or linear index (mardia, pearson)
  Estimate estimate;
  bool visible = false;
  std::size_t undefined_draws = 0;
  std::size_t clamped_draws = 0;
};

struct DependenceTable {
  int label = 0;
  std::size_t draws_used = 0;
  std::vector<DependenceEntry> entries;
};

/// Posterior dependence measures for state `label`. Fisher and Pearson
/// entries are visible when their interval excludes zero; a Mardia entry when
/// the interval of either cross-covariance Cov(W_i1, Y_j), Cov(W_i2, Y_j) does.
DependenceTable dependence_table(const PosteriorDraws& draws, int label, const SummaryOptions& options, Rng& rng);

/// Posterior mean of pi(a, b) over the draws where both states are occupied.
Mat transition_summary(const PosteriorDraws& draws, int num_states);

struct Prediction {
  Mat theta;  ///< T x p, predictive circular means (NaN if undefined)
  Mat zeta;   ///< T x p, predictive mean resultant lengths
  Mat y;      ///< T x q, predictive means on the modelling scale
  Mat speed;  ///< T x q, predictive means of exp(y)
};

/// Posterior predictive point forecasts: one JPSN draw per retained draw and
/// step from the state occupied at that step.
Prediction posterior_predict(const PosteriorDraws& draws, Rng& rng, std::size_t max_draws = 0);

struct VerificationMetrics {
  std::vector<double> ape;  ///< per circular coordinate
  std::vector<double> mse;  ///< per linear coordinate, on the exp scale
};

VerificationMetrics verification_metrics(const CylSeries& data, const Prediction& prediction);

/// Evenly spaced indices selecting at most `max_draws` of `n` (all when 0).
std::vector<std::size_t> thin_indices(std::size_t n, std::size_t max_draws);

}  // namespace jpsnhmm
