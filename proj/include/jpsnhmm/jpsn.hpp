#pragma once

#include <cstddef>
#include <vector>

#include "jpsnhmm/linalg.hpp"
#include "jpsnhmm/random.hpp"

namespace jpsnhmm {

/// Parameters of one joint projected and skew normal component.
///
/// The underlying (2p + q)-dimensional vector is ordered
/// (W_11, W_12, ..., W_p1, W_p2, Y_1, ..., Y_q); circular component i is the
/// direction of the pair (W_i1, W_i2). Skewness enters only the linear block.
struct JpsnParams {
  int p = 0;
  int q = 0;
  Vec mu;
  Mat sigma;
  Vec lambda;

  int dim() const { return 2 * p + q; }
  /// Throws ValidationError on shape mismatch, NumericalError if sigma is not SPD.
  void validate() const;
};

/// One augmented observation: angles, linear values and their latents.
/// `theta` holds radians in [0, 2pi).
struct AugPoint {
  Vec theta;
  Vec y;
  Vec r;
  Vec d;
};

/// A parameter set together with its covariance factorisation. Built once per
/// parameter draw and shared by every time step that needs it.
class JpsnKernel {
 public:
  JpsnKernel() = default;
  explicit JpsnKernel(JpsnParams params);

  const JpsnParams& params() const { return params_; }
  const SpdFactor& factor() const { return factor_; }
  const Mat& precision() const { return factor_.precision(); }

  /// mu + (0_{2p}, diag(d) lambda)
  Vec shifted_mean(const Vec& d) const;

  /// log of the augmented density at x = (w, y) with latents (r, d). Inputs are
  /// assumed valid; use aug_log_density() for the checked entry point.
  double log_density(const Vec& x, const Vec& r, const Vec& d) const;
  /// Same, on raw rows: x has 2p + q entries, d has q, log_r_sum = sum log r_i.
  double log_density_raw(const double* x, const double* d, double log_r_sum) const;

 private:
  JpsnParams params_;
  SpdFactor factor_;
  double log_norm_ = 0.0;  // terms independent of the point
};

/// (W, Y) reconstructed from an augmented point.
Vec stack_coordinates(const AugPoint& point);

struct SkewNormalDraw {
  Vec w;
  Vec y;
  Vec d;
};

SkewNormalDraw sample_skew_normal(const JpsnKernel& kernel, Rng& rng);
std::vector<SkewNormalDraw> sample_skew_normal(const JpsnParams& params, std::size_t n, Rng& rng);

AugPoint sample_jpsn(const JpsnKernel& kernel, Rng& rng);
std::vector<AugPoint> sample_jpsn(const JpsnParams& params, std::size_t n, Rng& rng);

/// Natural log of the augmented JPSN density. Throws DomainError for r_i <= 0
/// or d_j < 0.
double aug_log_density(const AugPoint& point, const JpsnParams& params);

struct QuadratureGrid {
  int points_per_dim = 60;  ///< Gauss-Legendre nodes: 20, 30, ..., 100
  double envelope_sds = 10.0;
};

/// Test oracle: log of the JPSN density at (theta, y), integrating the
/// augmented density over r and d with a tensor Gauss-Legendre rule. The box
/// is m +/- envelope_sds * sqrt(v) per latent, clipped at 0, where (m, v) are
/// the moments of the Gaussian envelope in (r, d) at this point. Supports
/// 1 <= p <= 2, q <= 2.
double marginal_log_density_quadrature(const Vec& theta, const Vec& y, const JpsnParams& params,
                                       const QuadratureGrid& grid = {});

/// (C mu, C Sigma C, lambda) with C = diag(c_1, c_1, ..., c_p, c_p, 1_q) and
/// c_i = 1 / sd(W_i2), so every Var(W_i2) becomes 1.
JpsnParams rescale_identifiable(const JpsnParams& params);

}  // namespace jpsnhmm
