#pragma once

#include <span>
#include <utility>

#include "jpsnhmm/jpsn.hpp"

namespace jpsnhmm {

/// Normal-inverse-Wishart prior on (mu, Sigma):
/// Sigma ~ IW(df0, scale0), mu | Sigma ~ N(mean0, Sigma / kappa0).
struct NiwPrior {
  Vec mean0;
  double kappa0 = 0.001;
  double df0 = 15.0;
  Mat scale0;

  /// Defaults used for the wind model: NIW(0, 0.001, 15, I).
  static NiwPrior weak(int dim);
  void validate() const;
};

/// Independent normal prior on the skewness vector lambda.
struct LambdaPrior {
  Vec mean;
  Mat covariance;

  /// N(0, 100 I).
  static LambdaPrior weak(int q);
  void validate() const;
};

/// The observations currently assigned to one component, row-wise:
/// `x` holds (w, y) with w = r (cos theta, sin theta); `d` the skewness latents.
struct ComponentData {
  Eigen::Ref<const Mat> x;
  Eigen::Ref<const Mat> d;
};

struct MuSigma {
  Vec mu;
  Mat sigma;
};

/// Conjugate NIW draw from pseudo-observations x_t - (0, diag(d_t) lambda).
/// Empty data gives a prior draw. A non-PD draw is retried once with fresh
/// randomness, then NumericalError.
MuSigma update_mu_sigma(const ComponentData& data, int p, const Vec& lambda, const NiwPrior& prior, Rng& rng);
MuSigma update_mu_sigma(std::span<const AugPoint> points, const Vec& lambda, const NiwPrior& prior, Rng& rng);

/// Bayesian-regression draw of lambda: intercept mu, design diag(d_t) on the
/// linear block, residual covariance Sigma.
Vec update_lambda(const ComponentData& data, const Vec& mu, const Mat& sigma, const LambdaPrior& prior, Rng& rng);
Vec update_lambda(std::span<const AugPoint> points, const Vec& mu, const Mat& sigma, const LambdaPrior& prior,
                  Rng& rng);

/// Gibbs sweep (coordinates 0..q-1 in order) over the nonnegative-orthant
/// truncated normal full conditional of d. `x` is the stacked (w, y).
Vec update_d(const Vec& x, const Vec& d, const JpsnKernel& kernel, Rng& rng);
Vec update_d(const AugPoint& point, const JpsnParams& params, Rng& rng);

/// Moments of r_i's full conditional r exp(-a (r - b/a)^2 / 2), r > 0.
struct RadialConditional {
  double a = 0.0;
  double b = 0.0;
};

RadialConditional radial_conditional(const Vec& x, const Vec& d, int component, const JpsnKernel& kernel);

/// One slice-sampling transition for r_i: v ~ U(0, r), then
/// r' ~ N(b/a, 1/a) truncated to (v, inf).
double slice_transition(double r_current, const RadialConditional& cond, Rng& rng);

double update_r(const Vec& x, const Vec& d, int component, const JpsnKernel& kernel, Rng& rng);
double update_r(const AugPoint& point, int component, const JpsnParams& params, Rng& rng);


/// Scale move for the unidentified length of circular block `component`.
///
/// Multiplying that block of mu, the matching rows and columns of Sigma and
/// the block of w for every observation in the state by c leaves the
/// likelihood unchanged. Returns a draw of c from its conditional under the
/// NIW prior with the left Haar reference measure, so applying it is a valid
/// Gibbs step. `precision` is Sigma^{-1}. With a zero prior mean on the block
/// and a scale matrix that has no cross terms, 1/c^2 ~ Gamma(df0, rate a/2);
/// otherwise a rejection or slice step starting from c = 1 is used.
double sample_block_scale(const Vec& mu, const Mat& precision, int component, const NiwPrior& prior, Rng& rng);

/// Applies a block scale c to (mu, Sigma).
void apply_block_scale(Vec& mu, Mat& sigma, int component, double c);

}  // namespace jpsnhmm
