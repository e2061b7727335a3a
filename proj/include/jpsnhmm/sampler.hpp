#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "jpsnhmm/emission_gibbs.hpp"
#include "jpsnhmm/posterior.hpp"
#include "jpsnhmm/series.hpp"
#include "jpsnhmm/shdp.hpp"

namespace jpsnhmm {

/// Everything run_sampler needs. Defaults reproduce the wind-model settings:
/// 400k iterations, 300k burn-in, thinning 20, truncation 20, NIW(0, 0.001, 15, I),
/// lambda ~ N(0, 100 I), tau, gamma ~ Gamma(1, scale 0.01), varsigma ~ Beta(1, 1).
struct FitConfig {
  std::int64_t iterations = 400000;
  std::int64_t burn_in = 300000;
  std::int64_t thin = 20;
  int truncation = 20;
  std::uint64_t seed = 1;

  double niw_mean = 0.0;    ///< every entry of the NIW mean vector
  double niw_kappa = 0.001;
  double niw_df = 15.0;
  double niw_scale = 1.0;   ///< NIW scale matrix is niw_scale * I
  double lambda_mean = 0.0;
  double lambda_variance = 100.0;
  HyperPrior hyper_prior;

  int init_states = 0;      ///< k-means clusters seeding z; 0 = chosen by silhouette width up to min(L, 8)
  int threads = 1;
  int speed_index = 0;      ///< linear coordinate ordering the states
  std::size_t summary_mc_size = 10000;

  /// Throws ValidationError.
  void validate() const;
  NiwPrior niw_prior(int dim) const;
  LambdaPrior lambda_prior(int q) const;
  std::int64_t kept_draws() const;
};

/// Per-step missingness as seen by imputation.
struct StepMask {
  std::vector<bool> theta;
  std::vector<bool> y;

  bool any() const;
  bool all() const;
};

struct Imputed {
  Vec x;  ///< (w, y) with missing coordinates refreshed
  Vec d;
};

/// Draw the missing coordinates of one step from their conditional given the
/// present ones under `kernel` (the step's state). A missing angle comes from
/// its W_i block projected to the circle. A fully missing step gets a fresh
/// (x, d) from the augmented distribution.
Imputed impute_missing(const Vec& x, const Vec& d, const StepMask& mask, const JpsnKernel& kernel, Rng& rng);

struct SamplerProgress {
  std::int64_t iteration = 0;
  std::int64_t total = 0;
  int num_states = 0;
  double elapsed_seconds = 0.0;
};

struct SamplerHooks {
  std::function<void(const PosteriorDraw&)> on_draw;
  std::function<void(const SamplerProgress&)> on_progress;
  std::int64_t progress_every = 0;
  bool keep_draws = true;
};

/// Blocked Gibbs sampler for the sticky HDP-HMM with augmented JPSN emissions.
///
/// One sweep: emission log-likelihoods and FFBS for z; a Metropolis-Hastings
/// pass moving single steps to another state together with fresh radii;
/// (mu, Sigma) then lambda per state; per step imputation, d and r; a scale move per state and
/// circular block; then the table auxiliaries,
/// hyperparameters, beta and pi. Per-step work runs on fixed blocks of steps,
/// each with its own stream derived from (seed, iteration, block), so output
/// does not depend on the thread count.
class GibbsSampler {
 public:
  GibbsSampler(const CylSeries& data, FitConfig config);

  void sweep();

  std::int64_t iteration() const { return iteration_; }
  const ChainState& chain() const { return chain_; }
  const std::vector<JpsnParams>& emissions() const { return emissions_; }
  const CylSeries& series() const { return data_; }
  /// Current (w, y) rows, including imputed values.
  const RowMat& coordinates() const { return x_; }
  const RowMat& skew_latents() const { return d_; }

  /// Retained-draw view: occupied states only, rescaled to identifiable form.
  PosteriorDraw snapshot() const;

  /// Replace the whole unobserved state with a draw from the prior.
  void draw_from_prior(Rng& rng);
  /// Replace data and latents (x, d) with a fresh draw given z and the
  /// emission parameters. Missing flags are cleared.
  void regenerate_data(Rng& rng);

 private:
  void initialise();
  void rebuild_kernel(int k);
  void emission_loglik(Mat& out) const;
  void update_switch(Rng& rng);
  void update_emissions(Rng& rng);
  void update_steps();
  void update_scales(Rng& rng);
  void sync_series_row(Eigen::Index t);

  CylSeries data_;
  MissingMask mask_;
  FitConfig config_;
  NiwPrior niw_;
  LambdaPrior lambda_prior_;
  int p_ = 0;
  int q_ = 0;
  int L_ = 0;
  std::int64_t iteration_ = 0;

  RowMat x_;  ///< T x (2p + q)
  RowMat d_;  ///< T x q
  ChainState chain_;
  std::vector<JpsnParams> emissions_;
  std::vector<JpsnKernel> kernels_;
  Mat loglik_;
};

/// Runs config.iterations sweeps and keeps every thin-th sweep after burn-in.
PosteriorDraws run_sampler(const CylSeries& data, const FitConfig& config, const SamplerHooks& hooks = {});

}  // namespace jpsnhmm
