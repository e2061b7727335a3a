#include "jpsnhmm/jpsn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_point(const AugPoint& point, const JpsnParams& params) {
  if (point.theta.size() != params.p || point.r.size() != params.p || point.y.size() != params.q ||
      point.d.size() != params.q)
    throw DomainError("augmented point does not match parameter dimensions");
  for (Eigen::Index i = 0; i < point.r.size(); ++i)
    if (!(point.r[i] > 0.0)) throw DomainError("latent length r must be strictly positive");
  for (Eigen::Index j = 0; j < point.d.size(); ++j)
    if (!(point.d[j] >= 0.0)) throw DomainError("skewness latent d must be nonnegative");
}

}  // namespace

void JpsnParams::validate() const {
  if (p < 0 || q < 0 || dim() == 0) throw ValidationError("JPSN dimensions must be nonnegative and not both zero");
  if (mu.size() != dim() || sigma.rows() != dim() || sigma.cols() != dim() || lambda.size() != q)
    throw ValidationError("JPSN parameter shapes do not match (p, q) = (" + std::to_string(p) + ", " +
                          std::to_string(q) + ")");
  if (!mu.allFinite() || !lambda.allFinite()) throw ValidationError("JPSN parameters must be finite");
  require_spd(sigma, "JPSN covariance");
}

JpsnKernel::JpsnKernel(JpsnParams params) : params_(std::move(params)) {
  params_.validate();
  factor_ = SpdFactor(params_.sigma);
  const double n = params_.dim();
  log_norm_ = params_.q * std::log(2.0) - 0.5 * (n * kLog2Pi + factor_.log_det()) - 0.5 * params_.q * kLog2Pi;
}

Vec JpsnKernel::shifted_mean(const Vec& d) const {
  Vec m = params_.mu;
  m.tail(params_.q) += d.cwiseProduct(params_.lambda);
  return m;
}

double JpsnKernel::log_density(const Vec& x, const Vec& r, const Vec& d) const {
  const int p = params_.p;
  const int q = params_.q;
  double resid_quad = 0.0;
  // (x - m)' Q (x - m) via a triangular solve on the Cholesky factor.
  Vec e = x - params_.mu;
  e.tail(q) -= d.cwiseProduct(params_.lambda);
  factor_.lower().triangularView<Eigen::Lower>().solveInPlace(e);
  resid_quad = e.squaredNorm();
  double log_r = 0.0;
  for (int i = 0; i < p; ++i) log_r += std::log(r[i]);
  return log_norm_ - 0.5 * resid_quad - 0.5 * d.squaredNorm() + log_r;
}

double JpsnKernel::log_density_raw(const double* x, const double* d, double log_r_sum) const {
  const int n = params_.dim();
  const int off = 2 * params_.p;
  constexpr int kStack = 32;
  double stack_buf[kStack];
  std::vector<double> heap_buf;
  double* e = stack_buf;
  if (n > kStack) {
    heap_buf.resize(static_cast<std::size_t>(n));
    e = heap_buf.data();
  }
  double d_sq = 0.0;
  for (int i = 0; i < n; ++i) e[i] = x[i] - params_.mu[i];
  for (int j = 0; j < params_.q; ++j) {
    e[off + j] -= d[j] * params_.lambda[j];
    d_sq += d[j] * d[j];
  }
  // Forward substitution L z = e, accumulating |z|^2.
  const Mat& l = factor_.lower();
  double quad = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = e[i];
    for (int k = 0; k < i; ++k) v -= l(i, k) * e[k];
    v /= l(i, i);
    e[i] = v;
    quad += v * v;
  }
  return log_norm_ - 0.5 * quad - 0.5 * d_sq + log_r_sum;
}

Vec stack_coordinates(const AugPoint& point) {
  const auto p = point.theta.size();
  const auto q = point.y.size();
  Vec x(2 * p + q);
  for (Eigen::Index i = 0; i < p; ++i) {
    x[2 * i] = point.r[i] * std::cos(point.theta[i]);
    x[2 * i + 1] = point.r[i] * std::sin(point.theta[i]);
  }
  x.tail(q) = point.y;
  return x;
}

SkewNormalDraw sample_skew_normal(const JpsnKernel& kernel, Rng& rng) {
  const JpsnParams& par = kernel.params();
  SkewNormalDraw out;
  out.d.resize(par.q);
  for (int j = 0; j < par.q; ++j) out.d[j] = rng.half_normal();
  const Vec x = kernel.factor().sample(kernel.shifted_mean(out.d), rng);
  out.w = x.head(2 * par.p);
  out.y = x.tail(par.q);
  return out;
}

std::vector<SkewNormalDraw> sample_skew_normal(const JpsnParams& params, std::size_t n, Rng& rng) {
  const JpsnKernel kernel(params);
  std::vector<SkewNormalDraw> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_skew_normal(kernel, rng));
  return out;
}

AugPoint sample_jpsn(const JpsnKernel& kernel, Rng& rng) {
  const int p = kernel.params().p;
  for (;;) {
    SkewNormalDraw draw = sample_skew_normal(kernel, rng);
    AugPoint pt{Vec(p), std::move(draw.y), Vec(p), std::move(draw.d)};
    bool degenerate = false;
    for (int i = 0; i < p; ++i) {
      const PlanarVector w{draw.w[2 * i], draw.w[2 * i + 1]};
      if (std::hypot(w.w1, w.w2) < 1e-300) {
        degenerate = true;
        break;
      }
      const Polar polar = project(w);
      pt.theta[i] = polar.angle.radians();
      pt.r[i] = polar.length;
    }
    if (!degenerate) return pt;
  }
}

std::vector<AugPoint> sample_jpsn(const JpsnParams& params, std::size_t n, Rng& rng) {
  const JpsnKernel kernel(params);
  std::vector<AugPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_jpsn(kernel, rng));
  return out;
}

double aug_log_density(const AugPoint& point, const JpsnParams& params) {
  check_point(point, params);
  const JpsnKernel kernel(params);
  return kernel.log_density(stack_coordinates(point), point.r, point.d);
}

namespace {

template <int N>
void fill_rule(std::vector<double>& node, std::vector<double>& weight) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& xs = rule::abscissa();
  const auto& ws = rule::weights();
  node.clear();
  weight.clear();
  // Boost stores the nonnegative half; mirror it.
  for (std::size_t i = xs.size(); i-- > 0;) {
    if (xs[i] == 0.0) continue;
    node.push_back(-xs[i]);
    weight.push_back(ws[i]);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    node.push_back(xs[i]);
    weight.push_back(ws[i]);
  }
}

void legendre_rule(int n, std::vector<double>& node, std::vector<double>& weight) {
  switch (n) {
    case 20: fill_rule<20>(node, weight); break;
    case 30: fill_rule<30>(node, weight); break;
    case 40: fill_rule<40>(node, weight); break;
    case 50: fill_rule<50>(node, weight); break;
    case 60: fill_rule<60>(node, weight); break;
    case 70: fill_rule<70>(node, weight); break;
    case 80: fill_rule<80>(node, weight); break;
    case 90: fill_rule<90>(node, weight); break;
    case 100: fill_rule<100>(node, weight); break;
    default: throw UnsupportedError("quadrature grid: points_per_dim must be one of 20, 30, ..., 100");
  }
}

}  // namespace

double marginal_log_density_quadrature(const Vec& theta, const Vec& y, const JpsnParams& params,
                                       const QuadratureGrid& grid) {
  const int p = params.p;
  const int q = params.q;
  if (p < 1 || p > 2 || q > 2)
    throw UnsupportedError("quadrature oracle supports 1 <= p <= 2 and q <= 2 only");
  if (theta.size() != p || y.size() != q) throw DomainError("quadrature point does not match (p, q)");
  std::vector<double> node, weight;
  legendre_rule(grid.points_per_dim, node, weight);
  const JpsnKernel kernel(params);
  const int n = params.dim();
  const int m = p + q;

  // x - shifted mean = G (r, d) - e0, Gaussian in the latents.
  Mat g = Mat::Zero(n, m);
  for (int i = 0; i < p; ++i) {
    g(2 * i, i) = std::cos(theta[i]);
    g(2 * i + 1, i) = std::sin(theta[i]);
  }
  for (int j = 0; j < q; ++j) g(2 * p + j, p + j) = -params.lambda[j];
  Vec e0(n);
  e0.head(2 * p) = params.mu.head(2 * p);
  e0.tail(q) = params.mu.tail(q) - y;
  Mat prec = g.transpose() * kernel.precision() * g;
  for (int j = 0; j < q; ++j) prec(p + j, p + j) += 1.0;
  const Mat cov = prec.inverse();
  const Vec centre = cov * (g.transpose() * kernel.precision() * e0);

  std::vector<double> lo(m), width(m);
  for (int k = 0; k < m; ++k) {
    const double sd = std::sqrt(cov(k, k));
    double a = std::max(0.0, centre[k] - grid.envelope_sds * sd);
    double b = centre[k] + grid.envelope_sds * sd;
    if (b <= a) {
      a = 0.0;
      b = grid.envelope_sds * sd;
    }
    lo[k] = a;
    width[k] = b - a;
  }

  std::size_t total = 1;
  for (int k = 0; k < m; ++k) total *= static_cast<std::size_t>(grid.points_per_dim);
  std::vector<double> logs(total);
  Vec r(p), d(q), x(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double log_w = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto step = rem % static_cast<std::size_t>(grid.points_per_dim);
      rem /= static_cast<std::size_t>(grid.points_per_dim);
      const double v = lo[k] + 0.5 * (node[step] + 1.0) * width[k];
      log_w += std::log(0.5 * weight[step] * width[k]);
      if (k < p)
        r[k] = v;
      else
        d[k - p] = v;
    }
    for (int i = 0; i < p; ++i) {
      x[2 * i] = r[i] * std::cos(theta[i]);
      x[2 * i + 1] = r[i] * std::sin(theta[i]);
    }
    x.tail(q) = y;
    logs[idx] = kernel.log_density(x, r, d) + log_w;
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

JpsnParams rescale_identifiable(const JpsnParams& params) {
  JpsnParams out = params;
  Vec c = Vec::Ones(params.dim());
  for (int i = 0; i < params.p; ++i) {
    const double s = 1.0 / std::sqrt(params.sigma(2 * i + 1, 2 * i + 1));
    c[2 * i] = s;
    c[2 * i + 1] = s;
  }
  out.mu = c.cwiseProduct(params.mu);
  out.sigma = c.asDiagonal() * params.sigma * c.asDiagonal();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  // Pin the constrained diagonal exactly so the transform is idempotent.
  for (int i = 0; i < params.p; ++i) out.sigma(2 * i + 1, 2 * i + 1) = 1.0;
  return out;
}

}  // namespace jpsnhmm
