#include "jpsnhmm/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

SpdFactor::SpdFactor(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw NumericalError("covariance must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericalError("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || lo < kPdRelativeTolerance * hi)
    throw NumericalError("covariance is not positive definite (eigenvalues " + std::to_string(lo) + ", " +
                         std::to_string(hi) + ")");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorisation failed");
  lower_ = llt.matrixL();
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
  precision_ = llt.solve(Mat::Identity(m.rows(), m.cols()));
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double SpdFactor::quad_form(const Vec& x) const {
  const Vec z = lower_.triangularView<Eigen::Lower>().solve(x);
  return z.squaredNorm();
}

Vec SpdFactor::solve(const Vec& b) const { return precision_ * b; }

Vec SpdFactor::sample(const Vec& mean, Rng& rng) const {
  return mean + lower_ * standard_normal_vector(dim(), rng);
}

void require_spd(const Mat& m, const char* what) {
  try {
    SpdFactor f(m);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(what) + ": " + e.what());
  }
}

Vec standard_normal_vector(Eigen::Index n, Rng& rng) {
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

Mat sample_inverse_wishart(double df, const Mat& scale, Rng& rng) {
  const Eigen::Index n = scale.rows();
  if (!(df > static_cast<double>(n) - 1.0)) throw NumericalError("inverse-Wishart needs df > dim - 1");
  // Sigma^{-1} ~ Wishart(df, scale^{-1}) = (L A)(L A)', L = chol(scale^{-1}).
  const SpdFactor scale_factor(scale);
  Eigen::LLT<Mat> inv_llt(scale_factor.precision());
  const Mat l = inv_llt.matrixL();
  Mat a = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Mat la = l * a;
  const Mat la_inv = la.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
  Mat sigma = la_inv.transpose() * la_inv;
  return 0.5 * (sigma + sigma.transpose());
}

double mvn_log_density(const Vec& x, const Vec& mean, const SpdFactor& factor) {
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + factor.log_det() + factor.quad_form(x - mean));
}

}  // namespace jpsnhmm
