#pragma once

#include <Eigen/Dense>

#include "jpsnhmm/random.hpp"

namespace jpsnhmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Smallest/largest eigenvalue ratio below which a covariance is rejected.
inline constexpr double kPdRelativeTolerance = 1e-10;

/// Cholesky factorisation of a symmetric positive-definite matrix with the
/// quantities every density and conditional update needs, computed once.
class SpdFactor {
 public:
  SpdFactor() = default;
  /// Throws NumericalError if `m` is asymmetric, not PD, or its eigenvalue
  /// ratio falls below kPdRelativeTolerance.
  explicit SpdFactor(const Mat& m);

  Eigen::Index dim() const { return lower_.rows(); }
  const Mat& lower() const { return lower_; }
  const Mat& precision() const { return precision_; }
  double log_det() const { return log_det_; }

  /// x' M^{-1} x
  double quad_form(const Vec& x) const;
  Vec solve(const Vec& b) const;
  /// mean + L * N(0, I)
  Vec sample(const Vec& mean, Rng& rng) const;

 private:
  Mat lower_;
  Mat precision_;
  double log_det_ = 0.0;
};

/// Throws NumericalError unless `m` passes the SpdFactor checks.
void require_spd(const Mat& m, const char* what);

Vec standard_normal_vector(Eigen::Index n, Rng& rng);

/// Inverse-Wishart(df, scale) draw, E = scale / (df - dim - 1). Bartlett
/// decomposition of the matching Wishart draw.
Mat sample_inverse_wishart(double df, const Mat& scale, Rng& rng);

/// log N(x | mean, M) given a factor of M.
double mvn_log_density(const Vec& x, const Vec& mean, const SpdFactor& factor);

}  // namespace jpsnhmm
