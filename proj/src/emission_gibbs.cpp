#include "jpsnhmm/emission_gibbs.hpp"

#include <cmath>

#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {

struct Stacked {
  Mat x;
  Mat d;
};

Stacked stack_points(std::span<const AugPoint> points, int dim, int q) {
  Stacked s{Mat(static_cast<Eigen::Index>(points.size()), dim), Mat(static_cast<Eigen::Index>(points.size()), q)};
  for (std::size_t t = 0; t < points.size(); ++t) {
    s.x.row(static_cast<Eigen::Index>(t)) = stack_coordinates(points[t]).transpose();
    s.d.row(static_cast<Eigen::Index>(t)) = points[t].d.transpose();
  }
  return s;
}

}  // namespace

NiwPrior NiwPrior::weak(int dim) { return NiwPrior{Vec::Zero(dim), 0.001, 15.0, Mat::Identity(dim, dim)}; }

void NiwPrior::validate() const {
  if (mean0.size() != scale0.rows()) throw ValidationError("NIW prior: mean and scale dimensions differ");
  if (!(kappa0 > 0.0)) throw ValidationError("NIW prior: kappa0 must be positive");
  if (!(df0 > static_cast<double>(mean0.size()) - 1.0)) throw ValidationError("NIW prior: df0 must exceed dim - 1");
  require_spd(scale0, "NIW prior scale");
}

LambdaPrior LambdaPrior::weak(int q) { return LambdaPrior{Vec::Zero(q), 100.0 * Mat::Identity(q, q)}; }

void LambdaPrior::validate() const {
  if (mean.size() != covariance.rows()) throw ValidationError("lambda prior: dimension mismatch");
  if (mean.size() > 0) {
    Eigen::LLT<Mat> llt(covariance);
    if (llt.info() != Eigen::Success) throw ValidationError("lambda prior covariance must be SPD");
  }
}

MuSigma update_mu_sigma(const ComponentData& data, int p, const Vec& lambda, const NiwPrior& prior, Rng& rng) {
  const Eigen::Index n = data.x.rows();
  const Eigen::Index dim = data.x.cols();
  const Eigen::Index q = dim - 2 * p;

  double kappa = prior.kappa0;
  double df = prior.df0;
  Vec mean = prior.mean0;
  Mat scale = prior.scale0;
  if (n > 0) {
    Mat pseudo = data.x;
    if (q > 0) pseudo.rightCols(q) -= data.d * lambda.asDiagonal();
    const Vec xbar = pseudo.colwise().mean().transpose();
    const Mat centred = pseudo.rowwise() - xbar.transpose();
    const Mat scatter = centred.transpose() * centred;
    const double nn = static_cast<double>(n);
    kappa = prior.kappa0 + nn;
    df = prior.df0 + nn;
    mean = (prior.kappa0 * prior.mean0 + nn * xbar) / kappa;
    const Vec diff = xbar - prior.mean0;
    scale = prior.scale0 + scatter + (prior.kappa0 * nn / kappa) * diff * diff.transpose();
    scale = 0.5 * (scale + scale.transpose());
  }

  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      Mat sigma = sample_inverse_wishart(df, scale, rng);
      const SpdFactor factor(sigma);
      Vec mu = mean + factor.lower() * standard_normal_vector(dim, rng) / std::sqrt(kappa);
      return {std::move(mu), std::move(sigma)};
    } catch (const NumericalError&) {
      if (attempt == 1) throw;
    }
  }
  throw NumericalError("update_mu_sigma: unreachable");
}

MuSigma update_mu_sigma(std::span<const AugPoint> points, const Vec& lambda, const NiwPrior& prior, Rng& rng) {
  const int q = static_cast<int>(lambda.size());
  const int dim = static_cast<int>(prior.mean0.size());
  const int p = (dim - q) / 2;
  const Stacked s = stack_points(points, dim, q);
  return update_mu_sigma(ComponentData{s.x, s.d}, p, lambda, prior, rng);
}

Vec update_lambda(const ComponentData& data, const Vec& mu, const Mat& sigma, const LambdaPrior& prior, Rng& rng) {
  const Eigen::Index q = prior.mean.size();
  const Mat prior_prec = prior.covariance.inverse();
  Mat prec = prior_prec;
  Vec lin = prior_prec * prior.mean;
  if (data.x.rows() > 0 && q > 0) {
    const Mat q_all = sigma.inverse();
    const Mat q_yy = q_all.bottomRightCorner(q, q);
    const Mat q_y = q_all.bottomRows(q);  // q x dim
    for (Eigen::Index t = 0; t < data.x.rows(); ++t) {
      const Vec dt = data.d.row(t).transpose();
      const Vec e = data.x.row(t).transpose() - mu;
      prec.noalias() += dt.asDiagonal() * q_yy * dt.asDiagonal();
      lin.noalias() += dt.cwiseProduct(q_y * e);
    }
  }
  Eigen::LLT<Mat> llt(0.5 * (prec + prec.transpose()));
  if (llt.info() != Eigen::Success) throw NumericalError("update_lambda: posterior precision is singular");
  const Vec mean = llt.solve(lin);
  // z ~ N(0, I), solve U' ... : L L' = prec, so L'^{-1} z ~ N(0, prec^{-1}).
  const Vec z = standard_normal_vector(q, rng);
  const Mat upper = llt.matrixU();
  return mean + upper.triangularView<Eigen::Upper>().solve(z);
}

Vec update_lambda(std::span<const AugPoint> points, const Vec& mu, const Mat& sigma, const LambdaPrior& prior,
                  Rng& rng) {
  const Stacked s = stack_points(points, static_cast<int>(mu.size()), static_cast<int>(prior.mean.size()));
  return update_lambda(ComponentData{s.x, s.d}, mu, sigma, prior, rng);
}

Vec update_d(const Vec& x, const Vec& d, const JpsnKernel& kernel, Rng& rng) {
  const JpsnParams& par = kernel.params();
  const int q = par.q;
  if (q == 0) return d;
  const Mat& prec_all = kernel.precision();
  const Vec e0 = x - par.mu;
  const Mat q_yy = prec_all.bottomRightCorner(q, q);
  // Conditional of d: precision I + diag(l) Q_yy diag(l), linear term diag(l) (Q e0)_y.
  const Vec lin = par.lambda.cwiseProduct(prec_all.bottomRows(q) * e0);
  Mat prec = par.lambda.asDiagonal() * q_yy * par.lambda.asDiagonal();
  prec.diagonal().array() += 1.0;
  Vec out = d;
  for (int j = 0; j < q; ++j) {
    double h = lin[j];
    for (int k = 0; k < q; ++k)
      if (k != j) h -= prec(j, k) * out[k];
    const double v = 1.0 / prec(j, j);
    out[j] = rng.truncated_normal_lower(h * v, std::sqrt(v), 0.0);
  }
  return out;
}

Vec update_d(const AugPoint& point, const JpsnParams& params, Rng& rng) {
  const JpsnKernel kernel(params);
  return update_d(stack_coordinates(point), point.d, kernel, rng);
}

RadialConditional radial_conditional(const Vec& x, const Vec& d, int component, const JpsnKernel& kernel) {
  const Mat& prec = kernel.precision();
  const Vec m = kernel.shifted_mean(d);
  const Vec e = x - m;
  const int i0 = 2 * component;
  const Eigen::Matrix2d q_ii = prec.block(i0, i0, 2, 2);
  const double norm = std::hypot(x[i0], x[i0 + 1]);
  const Eigen::Vector2d u(x[i0] / norm, x[i0 + 1] / norm);
  // V^{-1} m_cond = Q_ii mu_i - Q_{i,-i} e_{-i} = Q_ii mu_i - ((Q e)_i - Q_ii e_i)
  const Eigen::Vector2d qe_i = prec.middleRows(i0, 2) * e;
  const Eigen::Vector2d e_i = e.segment(i0, 2);
  const Eigen::Vector2d mu_i = m.segment(i0, 2);
  const Eigen::Vector2d lin = q_ii * mu_i - (qe_i - q_ii * e_i);
  return {u.dot(q_ii * u), u.dot(lin)};
}

double slice_transition(double r_current, const RadialConditional& cond, Rng& rng) {
  if (!(cond.a > 0.0)) throw NumericalError("update_r: non-positive radial precision");
  const double v = rng.uniform() * r_current;
  return rng.truncated_normal_lower(cond.b / cond.a, 1.0 / std::sqrt(cond.a), v);
}

double update_r(const Vec& x, const Vec& d, int component, const JpsnKernel& kernel, Rng& rng) {
  const double r_current = std::hypot(x[2 * component], x[2 * component + 1]);
  return slice_transition(r_current, radial_conditional(x, d, component, kernel), rng);
}

double update_r(const AugPoint& point, int component, const JpsnParams& params, Rng& rng) {
  const JpsnKernel kernel(params);
  return update_r(stack_coordinates(point), point.d, component, kernel, rng);
}


double sample_block_scale(const Vec& mu, const Mat& precision, int component, const NiwPrior& prior, Rng& rng) {
  const Eigen::Index dim = mu.size();
  const Eigen::Index lo = 2 * component;
  auto in_block = [lo](Eigen::Index a) { return a == lo || a == lo + 1; };

  // Exponent in u = 1/c is (2 df0 - 1) log u - (alpha u^2 + beta u) / 2.
  Vec m_blk = Vec::Zero(dim);
  Vec m_rest = prior.mean0;
  m_blk.segment(lo, 2) = prior.mean0.segment(lo, 2);
  m_rest.segment(lo, 2).setZero();
  double alpha = prior.kappa0 * m_blk.dot(precision * m_blk);
  double beta = -2.0 * prior.kappa0 * m_blk.dot(precision * (mu - m_rest));
  for (Eigen::Index a = lo; a < lo + 2; ++a)
    for (Eigen::Index b = 0; b < dim; ++b) {
      const double v = prior.scale0(a, b) * precision(a, b);
      if (in_block(b))
        alpha += v;
      else
        beta += 2.0 * v;
    }
  if (!(alpha > 0.0)) throw NumericalError("block scale: nonpositive quadratic coefficient");
  const double shape = prior.df0;

  if (beta >= 0.0) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const double u = std::sqrt(rng.gamma(shape, 2.0 / alpha));
      if (beta == 0.0 || std::log(rng.uniform()) < -0.5 * beta * u) return 1.0 / u;
    }
    return 1.0;
  }

  // Log-concave in u; slice step from the current value u = 1.
  auto logf = [&](double u) { return (2.0 * shape - 1.0) * std::log(u) - 0.5 * (alpha * u * u + beta * u); };
  const double level = logf(1.0) + std::log(rng.uniform());
  const double width = 1.0 / std::sqrt(alpha + (2.0 * shape - 1.0));
  double left = 1.0 - width * rng.uniform();
  double right = left + width;
  while (left > 0.0 && logf(left) > level) left -= width;
  if (left < 0.0) left = 0.0;
  while (logf(right) > level) right += width;
  for (;;) {
    const double u = left + (right - left) * rng.uniform();
    if (u > 0.0 && logf(u) > level) return 1.0 / u;
    if (u < 1.0)
      left = u;
    else
      right = u;
  }
}

void apply_block_scale(Vec& mu, Mat& sigma, int component, double c) {
  const Eigen::Index lo = 2 * component;
  mu.segment(lo, 2) *= c;
  sigma.middleRows(lo, 2) *= c;
  sigma.middleCols(lo, 2) *= c;
}

}  // namespace jpsnhmm
