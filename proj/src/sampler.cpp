#include "jpsnhmm/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jpsnhmm {

namespace {

constexpr Eigen::Index kBlockSize = 256;

enum Phase : std::uint64_t { kStates = 1, kEmissions = 2, kSteps = 3, kTransitions = 4, kInit = 5, kScales = 6, kSwitch = 7 };

Eigen::Index num_blocks(Eigen::Index T) { return (T + kBlockSize - 1) / kBlockSize; }

// (cos, sin) per angle and standardised linear values.
Mat embed_features(const RowMat& x, int p, int q) {
  const Eigen::Index T = x.rows();
  Mat feat(T, 2 * p + q);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < p; ++i) {
      const double n = std::hypot(x(t, 2 * i), x(t, 2 * i + 1));
      feat(t, 2 * i) = x(t, 2 * i) / n;
      feat(t, 2 * i + 1) = x(t, 2 * i + 1) / n;
    }
    for (int j = 0; j < q; ++j) feat(t, 2 * p + j) = x(t, 2 * p + j);
  }
  for (int j = 0; j < q; ++j) {
    auto col = feat.col(2 * p + j);
    const double m = col.mean();
    const double sd = std::sqrt((col.array() - m).square().mean());
    col = (col.array() - m) / (sd > 0.0 ? sd : 1.0);
  }
  return feat;
}

struct Clustering {
  std::vector<int> labels;
  double sse = 0.0;
};

// k-means++ seeding followed by Lloyd iterations.
Clustering kmeans(const Mat& feat, int k, Rng& rng) {
  const Eigen::Index T = feat.rows();
  const Eigen::Index f = feat.cols();
  Clustering out{std::vector<int>(static_cast<std::size_t>(T), 0), 0.0};
  k = static_cast<int>(std::min<Eigen::Index>(k, T));
  if (T == 0 || k <= 0) return out;
  Mat centres(k, f);
  centres.row(0) = feat.row(static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(T)) % T);
  std::vector<double> dist(static_cast<std::size_t>(T));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, (feat.row(t) - centres.row(j)).squaredNorm());
      dist[static_cast<std::size_t>(t)] = best;
      total += best;
    }
    const auto pick = total > 0.0 ? rng.categorical(dist) : static_cast<std::size_t>(c);
    centres.row(c) = feat.row(static_cast<Eigen::Index>(pick));
  }
  auto& z = out.labels;
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    out.sse = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double dd = (feat.row(t) - centres.row(j)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = j;
        }
      }
      if (z[static_cast<std::size_t>(t)] != best) changed = true;
      z[static_cast<std::size_t>(t)] = best;
      out.sse += bd;
    }
    if (!changed && iter > 0) break;
    Mat sum = Mat::Zero(k, f);
    Vec cnt = Vec::Zero(k);
    for (Eigen::Index t = 0; t < T; ++t) {
      sum.row(z[static_cast<std::size_t>(t)]) += feat.row(t);
      cnt[z[static_cast<std::size_t>(t)]] += 1.0;
    }
    for (int j = 0; j < k; ++j)
      if (cnt[j] > 0.0) centres.row(j) = sum.row(j) / cnt[j];
  }
  return out;
}

// Mean silhouette width over at most 1000 evenly spaced points.
double mean_silhouette(const Mat& feat, const std::vector<int>& labels, int k) {
  const Eigen::Index T = feat.rows();
  const Eigen::Index stride = std::max<Eigen::Index>(1, T / 1000);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index t = 0; t < T; t += stride) idx.push_back(t);
  std::vector<double> sum(static_cast<std::size_t>(k));
  std::vector<int> cnt(static_cast<std::size_t>(k));
  double total = 0.0;
  for (Eigen::Index a : idx) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (Eigen::Index b : idx) {
      if (a == b) continue;
      const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(b)]);
      sum[l] += (feat.row(a) - feat.row(b)).norm();
      ++cnt[l];
    }
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(a)]);
    if (cnt[own] == 0) continue;  // singleton: silhouette 0
    const double inner = sum[own] / cnt[own];
    double outer = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < sum.size(); ++l)
      if (l != own && cnt[l] > 0) outer = std::min(outer, sum[l] / cnt[l]);
    if (std::isfinite(outer) && std::max(inner, outer) > 0.0) total += (outer - inner) / std::max(inner, outer);
  }
  return total / static_cast<double>(idx.size());
}

// Fixed k when k_fixed > 0. Otherwise the k in 2..k_max with the widest mean
// silhouette, or a single cluster when no k exceeds 0.5 (weaker widths are
// what k-means gives when it cuts a single blob).
std::vector<int> initial_labels(const RowMat& x, int p, int q, int k_fixed, int k_max, Rng& rng) {
  const Mat feat = embed_features(x, p, q);
  if (k_fixed > 0) return kmeans(feat, k_fixed, rng).labels;
  std::vector<int> best(static_cast<std::size_t>(feat.rows()), 0);
  double best_width = 0.5;
  for (int k = 2; k <= std::min<Eigen::Index>(k_max, feat.rows()); ++k) {
    Clustering c;
    c.sse = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 3; ++restart) {
      Clustering trial = kmeans(feat, k, rng);
      if (trial.sse < c.sse) c = std::move(trial);
    }
    const double width = mean_silhouette(feat, c.labels, k);
    if (width > best_width) {
      best_width = width;
      best = std::move(c.labels);
    }
  }
  return best;
}

SkewNormalDraw nondegenerate_draw(const JpsnKernel& kernel, Rng& rng) {
  for (;;) {
    SkewNormalDraw s = sample_skew_normal(kernel, rng);
    bool ok = true;
    for (int i = 0; i < kernel.params().p; ++i)
      if (std::hypot(s.w[2 * i], s.w[2 * i + 1]) < 1e-300) ok = false;
    if (ok) return s;
  }
}

}  // namespace

void FitConfig::validate() const {
  if (iterations < 0) throw ValidationError("iterations must be nonnegative");
  if (burn_in < 0 || (iterations > 0 && burn_in >= iterations) || (iterations == 0 && burn_in > 0))
    throw ValidationError("burn-in must be smaller than the total number of iterations");
  if (thin < 1) throw ValidationError("thin must be at least 1");
  if (truncation < 1) throw ValidationError("truncation level must be at least 1");
  if (!(niw_kappa > 0.0) || !(niw_scale > 0.0)) throw ValidationError("NIW kappa and scale must be positive");
  if (!(lambda_variance > 0.0)) throw ValidationError("lambda prior variance must be positive");
  if (threads < 1) throw ValidationError("threads must be at least 1");
  if (init_states < 0) throw ValidationError("init_states must be nonnegative");
  if (summary_mc_size < 2) throw ValidationError("summary_mc_size must be at least 2");
  hyper_prior.validate();
}

NiwPrior FitConfig::niw_prior(int dim) const {
  NiwPrior prior{Vec::Constant(dim, niw_mean), niw_kappa, niw_df, niw_scale * Mat::Identity(dim, dim)};
  prior.validate();
  return prior;
}

LambdaPrior FitConfig::lambda_prior(int q) const {
  return {Vec::Constant(q, lambda_mean), lambda_variance * Mat::Identity(q, q)};
}

std::int64_t FitConfig::kept_draws() const { return iterations > burn_in ? (iterations - burn_in) / thin : 0; }

bool StepMask::any() const {
  return std::any_of(theta.begin(), theta.end(), [](bool b) { return b; }) ||
         std::any_of(y.begin(), y.end(), [](bool b) { return b; });
}

bool StepMask::all() const {
  return std::all_of(theta.begin(), theta.end(), [](bool b) { return b; }) &&
         std::all_of(y.begin(), y.end(), [](bool b) { return b; });
}

Imputed impute_missing(const Vec& x, const Vec& d, const StepMask& mask, const JpsnKernel& kernel, Rng& rng) {
  const int p = kernel.params().p;
  const int q = kernel.params().q;
  if (!mask.any()) return {x, d};
  if (mask.all()) {
    SkewNormalDraw s = nondegenerate_draw(kernel, rng);
    Vec xn(2 * p + q);
    xn << s.w, s.y;
    return {std::move(xn), std::move(s.d)};
  }
  std::vector<Eigen::Index> miss, obs;
  for (int i = 0; i < p; ++i) {
    auto& target = mask.theta[static_cast<std::size_t>(i)] ? miss : obs;
    target.push_back(2 * i);
    target.push_back(2 * i + 1);
  }
  for (int j = 0; j < q; ++j) (mask.y[static_cast<std::size_t>(j)] ? miss : obs).push_back(2 * p + j);

  const Mat& prec = kernel.precision();
  const Vec m = kernel.shifted_mean(d);
  const auto nm = static_cast<Eigen::Index>(miss.size());
  const auto no = static_cast<Eigen::Index>(obs.size());
  Mat q_mm(nm, nm), q_mo(nm, no);
  Vec e_o(no);
  for (Eigen::Index a = 0; a < nm; ++a) {
    for (Eigen::Index b = 0; b < nm; ++b) q_mm(a, b) = prec(miss[a], miss[b]);
    for (Eigen::Index b = 0; b < no; ++b) q_mo(a, b) = prec(miss[a], obs[b]);
  }
  for (Eigen::Index b = 0; b < no; ++b) e_o[b] = x[obs[b]] - m[obs[b]];
  Eigen::LLT<Mat> llt(q_mm);
  Vec cond_mean = -llt.solve(q_mo * e_o);
  for (Eigen::Index a = 0; a < nm; ++a) cond_mean[a] += m[miss[a]];
  const Mat upper = llt.matrixU();

  Vec out = x;
  for (;;) {
    const Vec draw = cond_mean + upper.triangularView<Eigen::Upper>().solve(standard_normal_vector(nm, rng));
    for (Eigen::Index a = 0; a < nm; ++a) out[miss[a]] = draw[a];
    bool ok = true;
    for (int i = 0; i < p; ++i)
      if (mask.theta[static_cast<std::size_t>(i)] && std::hypot(out[2 * i], out[2 * i + 1]) < 1e-300) ok = false;
    if (ok) break;
  }
  return {std::move(out), d};
}

GibbsSampler::GibbsSampler(const CylSeries& data, FitConfig config)
    : data_(data), config_(std::move(config)), p_(data.p), q_(data.q), L_(config_.truncation) {
  config_.validate();
  data_.validate();
  mask_ = data_.mask();
  niw_ = config_.niw_prior(2 * p_ + q_);
  lambda_prior_ = config_.lambda_prior(q_);
  initialise();
}

void GibbsSampler::rebuild_kernel(int k) { kernels_[static_cast<std::size_t>(k)] = JpsnKernel(emissions_[static_cast<std::size_t>(k)]); }

void GibbsSampler::initialise() {
  const Eigen::Index T = data_.size();
  const int dim = 2 * p_ + q_;
  Rng rng = Rng::derive(config_.seed, 0, 0, kInit);
  x_.resize(T, dim);
  d_.resize(T, q_);
  for (int j = 0; j < q_; ++j) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index t = 0; t < T; ++t)
      if (!mask_.y(t, j)) {
        sum += data_.y(t, j);
        ++n;
      }
    const double fill = n > 0 ? sum / n : 0.0;
    for (Eigen::Index t = 0; t < T; ++t) x_(t, 2 * p_ + j) = mask_.y(t, j) ? fill : data_.y(t, j);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < p_; ++i) {
      const double th = mask_.theta(t, i) ? rng.uniform() * kTwoPi : data_.theta(t, i);
      x_(t, 2 * i) = std::cos(th);
      x_(t, 2 * i + 1) = std::sin(th);
    }
    for (int j = 0; j < q_; ++j) d_(t, j) = rng.half_normal();
  }

  chain_.z = initial_labels(x_, p_, q_, std::min(config_.init_states, L_), std::min(L_, 8), rng);
  chain_.beta = Vec::Constant(L_, 1.0 / L_);
  chain_.hyper = {1.0, 1.0, 0.5};

  emissions_.assign(static_cast<std::size_t>(L_), JpsnParams{});
  kernels_.assign(static_cast<std::size_t>(L_), JpsnKernel{});
  for (int k = 0; k < L_; ++k) {
    auto& e = emissions_[static_cast<std::size_t>(k)];
    e.p = p_;
    e.q = q_;
    e.lambda = Vec::Zero(q_);
  }
  update_emissions(rng);
  update_transition_block(chain_, config_.hyper_prior, rng);
  loglik_.resize(T, L_);
}

void GibbsSampler::emission_loglik(Mat& out) const {
  const Eigen::Index T = x_.rows();
  const Eigen::Index blocks = num_blocks(T);
#pragma omp parallel for num_threads(config_.threads) schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index end = std::min(T, (b + 1) * kBlockSize);
    for (Eigen::Index t = b * kBlockSize; t < end; ++t) {
      double log_r = 0.0;
      for (int i = 0; i < p_; ++i) log_r += std::log(std::hypot(x_(t, 2 * i), x_(t, 2 * i + 1)));
      for (int k = 0; k < L_; ++k)
        out(t, k) = kernels_[static_cast<std::size_t>(k)].log_density_raw(x_.row(t).data(), d_.row(t).data(), log_r);
    }
  }
}

void GibbsSampler::update_emissions(Rng& rng) {
  const Eigen::Index T = x_.rows();
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(L_));
  for (Eigen::Index t = 0; t < T; ++t) members[static_cast<std::size_t>(chain_.z[static_cast<std::size_t>(t)])].push_back(t);
  Mat xs, ds;
  for (int k = 0; k < L_; ++k) {
    const auto& idx = members[static_cast<std::size_t>(k)];
    const auto n = static_cast<Eigen::Index>(idx.size());
    xs.resize(n, x_.cols());
    ds.resize(n, q_);
    for (Eigen::Index a = 0; a < n; ++a) {
      xs.row(a) = x_.row(idx[static_cast<std::size_t>(a)]);
      ds.row(a) = d_.row(idx[static_cast<std::size_t>(a)]);
    }
    auto& e = emissions_[static_cast<std::size_t>(k)];
    const ComponentData data{xs, ds};
    MuSigma ms = update_mu_sigma(data, p_, e.lambda, niw_, rng);
    e.mu = std::move(ms.mu);
    e.sigma = std::move(ms.sigma);
    e.lambda = update_lambda(data, e.mu, e.sigma, lambda_prior_, rng);
    rebuild_kernel(k);
  }
}

void GibbsSampler::update_switch(Rng& rng) {
  const Eigen::Index T = x_.rows();
  if (L_ == 1 || T == 0 || p_ == 0) return;
  const int w_dim = 2 * p_;
  // Radial conditional of state s at step t: r ~ N(A^{-1} b, A^{-1}) times the
  // r Jacobian, with A = U' Q_ww U, b = U' (Q_ww mu_w - Q_wy e_y) and U the
  // unit direction vectors.
  struct StateTerms {
    Mat q_ww;
    Mat q_wy;
    Vec q_mu;  // Q_ww mu_w
  };
  std::vector<StateTerms> terms(static_cast<std::size_t>(L_));
  for (int s = 0; s < L_; ++s) {
    const Mat& prec = kernels_[static_cast<std::size_t>(s)].precision();
    auto& st = terms[static_cast<std::size_t>(s)];
    st.q_ww = prec.topLeftCorner(w_dim, w_dim);
    st.q_wy = prec.topRightCorner(w_dim, q_);
    st.q_mu = st.q_ww * emissions_[static_cast<std::size_t>(s)].mu.head(w_dim);
  }
  struct Radial {
    Mat a;
    Vec mean;
    Vec target;
    Vec ey;
    Eigen::LLT<Mat> llt;
    double half_log_det = 0.0;
  };
  Radial gj{Mat(p_, p_), Vec(p_), Vec(w_dim), Vec(q_), Eigen::LLT<Mat>(p_), 0.0};
  Radial gk = gj;
  Vec dir(w_dim);
  auto radial = [&](int s, Eigen::Index t, Radial& g) {
    const auto& e = emissions_[static_cast<std::size_t>(s)];
    const auto& st = terms[static_cast<std::size_t>(s)];
    for (int j = 0; j < q_; ++j) g.ey[j] = x_(t, w_dim + j) - e.mu[w_dim + j] - e.lambda[j] * d_(t, j);
    g.target.noalias() = st.q_mu - st.q_wy * g.ey;
    for (int i = 0; i < p_; ++i) {
      for (int l = 0; l < p_; ++l) {
        double v = 0.0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) v += dir[2 * i + a] * st.q_ww(2 * i + a, 2 * l + b) * dir[2 * l + b];
        g.a(i, l) = v;
      }
      g.mean[i] = dir[2 * i] * g.target[2 * i] + dir[2 * i + 1] * g.target[2 * i + 1];
    }
    g.llt.compute(g.a);
    if (g.llt.info() != Eigen::Success) return false;
    g.llt.solveInPlace(g.mean);
    g.half_log_det = g.llt.matrixLLT().diagonal().array().log().sum();
    return true;
  };
  auto log_proposal = [](const Radial& g, const Vec& r) {
    const Vec diff = r - g.mean;
    return g.half_log_det - 0.5 * diff.dot(g.a * diff);
  };

  auto& z = chain_.z;
  const Mat& pi = chain_.pi;
  Vec r_old(p_), r_new(p_), x_new(x_.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const int k = z[ts];
    int j = std::min(static_cast<int>(rng.uniform() * (L_ - 1)), L_ - 2);
    if (j >= k) ++j;
    const double log_u = std::log(rng.uniform());
    const Vec eps = standard_normal_vector(p_, rng);
    const int from = t == 0 ? 0 : z[ts - 1];
    const bool has_next = t + 1 < T;
    const double fwd = pi(from, j) * (has_next ? pi(j, z[ts + 1]) : 1.0);
    const double bwd = pi(from, k) * (has_next ? pi(k, z[ts + 1]) : 1.0);
    if (!(fwd > 0.0) || !(bwd > 0.0)) continue;

    for (int i = 0; i < p_; ++i) {
      r_old[i] = std::hypot(x_(t, 2 * i), x_(t, 2 * i + 1));
      dir[2 * i] = x_(t, 2 * i) / r_old[i];
      dir[2 * i + 1] = x_(t, 2 * i + 1) / r_old[i];
    }
    if (!radial(j, t, gj) || !radial(k, t, gk)) continue;
    r_new = gj.mean + gj.llt.matrixU().solve(eps);
    if ((r_new.array() <= 0.0).any()) continue;
    x_new = x_.row(t).transpose();
    double log_r_old = 0.0, log_r_new = 0.0;
    for (int i = 0; i < p_; ++i) {
      x_new[2 * i] = r_new[i] * dir[2 * i];
      x_new[2 * i + 1] = r_new[i] * dir[2 * i + 1];
      log_r_old += std::log(r_old[i]);
      log_r_new += std::log(r_new[i]);
    }
    const double ll_new = kernels_[static_cast<std::size_t>(j)].log_density_raw(x_new.data(), d_.row(t).data(), log_r_new);
    const double ll_old = kernels_[static_cast<std::size_t>(k)].log_density_raw(x_.row(t).data(), d_.row(t).data(), log_r_old);
    const double log_ratio = std::log(fwd) - std::log(bwd) + ll_new - ll_old + log_proposal(gk, r_old) -
                             log_proposal(gj, r_new);
    if (log_u < log_ratio) {
      z[ts] = j;
      x_.row(t) = x_new.transpose();
    }
  }
}

void GibbsSampler::update_steps() {
  const Eigen::Index T = x_.rows();
  const Eigen::Index blocks = num_blocks(T);
#pragma omp parallel for num_threads(config_.threads) schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    Rng rng = Rng::derive(config_.seed, static_cast<std::uint64_t>(iteration_), static_cast<std::uint64_t>(b + 1), kSteps);
    StepMask mask{std::vector<bool>(static_cast<std::size_t>(p_)), std::vector<bool>(static_cast<std::size_t>(q_))};
    const Eigen::Index end = std::min(T, (b + 1) * kBlockSize);
    for (Eigen::Index t = b * kBlockSize; t < end; ++t) {
      const JpsnKernel& kernel = kernels_[static_cast<std::size_t>(chain_.z[static_cast<std::size_t>(t)])];
      Vec x = x_.row(t).transpose();
      Vec d = d_.row(t).transpose();
      if (mask_.any(t)) {
        for (int i = 0; i < p_; ++i) mask.theta[static_cast<std::size_t>(i)] = mask_.theta(t, i);
        for (int j = 0; j < q_; ++j) mask.y[static_cast<std::size_t>(j)] = mask_.y(t, j);
        Imputed imp = impute_missing(x, d, mask, kernel, rng);
        x = std::move(imp.x);
        d = std::move(imp.d);
      }
      d = update_d(x, d, kernel, rng);
      for (int i = 0; i < p_; ++i) {
        const double r_old = std::hypot(x[2 * i], x[2 * i + 1]);
        const double r_new = update_r(x, d, i, kernel, rng);
        x[2 * i] *= r_new / r_old;
        x[2 * i + 1] *= r_new / r_old;
      }
      x_.row(t) = x.transpose();
      d_.row(t) = d.transpose();
    }
  }
}

void GibbsSampler::update_scales(Rng& rng) {
  std::vector<double> factor(static_cast<std::size_t>(L_ * p_), 1.0);
  for (int k = 0; k < L_; ++k) {
    auto& e = emissions_[static_cast<std::size_t>(k)];
    for (int i = 0; i < p_; ++i) {
      const double c = sample_block_scale(e.mu, kernels_[static_cast<std::size_t>(k)].precision(), i, niw_, rng);
      apply_block_scale(e.mu, e.sigma, i, c);
      factor[static_cast<std::size_t>(k * p_ + i)] = c;
      rebuild_kernel(k);
    }
  }
  for (Eigen::Index t = 0; t < x_.rows(); ++t) {
    const int k = chain_.z[static_cast<std::size_t>(t)];
    for (int i = 0; i < p_; ++i) x_.row(t).segment(2 * i, 2) *= factor[static_cast<std::size_t>(k * p_ + i)];
  }
}

void GibbsSampler::sweep() {
  const auto it = static_cast<std::uint64_t>(iteration_);
  emission_loglik(loglik_);
  for (Eigen::Index t = 0; t < loglik_.rows(); ++t)
    for (Eigen::Index k = 0; k < loglik_.cols(); ++k)
      if (std::isnan(loglik_(t, k)) || loglik_(t, k) == std::numeric_limits<double>::infinity())
        throw NumericalError("iteration " + std::to_string(iteration_) + ": non-finite emission log-density at step " +
                             std::to_string(t) + ", state " + std::to_string(k));
  {
    Rng rng = Rng::derive(config_.seed, it, 0, kStates);
    try {
      chain_.z = sample_states_blocked(loglik_, chain_.pi, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iteration_) + ": " + e.what());
    }
  }
  {
    Rng rng = Rng::derive(config_.seed, it, 0, kSwitch);
    update_switch(rng);
  }
  {
    Rng rng = Rng::derive(config_.seed, it, 0, kEmissions);
    update_emissions(rng);
  }
  update_steps();
  {
    Rng rng = Rng::derive(config_.seed, it, 0, kScales);
    update_scales(rng);
  }
  {
    Rng rng = Rng::derive(config_.seed, it, 0, kTransitions);
    update_transition_block(chain_, config_.hyper_prior, rng);
  }
  ++iteration_;
}

PosteriorDraw GibbsSampler::snapshot() const {
  PosteriorDraw draw;
  draw.iteration = iteration_ - 1;
  draw.z = chain_.z;
  draw.pi = chain_.pi;
  draw.beta = chain_.beta;
  draw.hyper = chain_.hyper;
  for (int s : chain_.z)
    if (!draw.states.count(s)) draw.states.emplace(s, rescale_identifiable(emissions_[static_cast<std::size_t>(s)]));
  for (Eigen::Index t = 0; t < x_.rows(); ++t) {
    for (int i = 0; i < p_; ++i)
      if (mask_.theta(t, i))
        draw.imputed.push_back({t, true, i, wrap_angle(std::atan2(x_(t, 2 * i + 1), x_(t, 2 * i)))});
    for (int j = 0; j < q_; ++j)
      if (mask_.y(t, j)) draw.imputed.push_back({t, false, j, x_(t, 2 * p_ + j)});
  }
  return draw;
}

void GibbsSampler::draw_from_prior(Rng& rng) {
  chain_.hyper = config_.hyper_prior.sample(rng);
  chain_.beta = update_beta(std::vector<std::int64_t>(static_cast<std::size_t>(L_), 0), chain_.hyper.tau, rng);
  chain_.pi = update_pi(CountMatrix::Zero(L_, L_), chain_.beta, chain_.hyper, rng);
  const Eigen::Index T = x_.rows();
  int prev = 0;
  std::vector<double> row(static_cast<std::size_t>(L_));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 0; k < L_; ++k) row[static_cast<std::size_t>(k)] = chain_.pi(prev, k);
    prev = static_cast<int>(rng.categorical(row));
    chain_.z[static_cast<std::size_t>(t)] = prev;
  }
  const Mat none_x(0, 2 * p_ + q_), none_d(0, q_);
  for (int k = 0; k < L_; ++k) {
    auto& e = emissions_[static_cast<std::size_t>(k)];
    MuSigma ms = update_mu_sigma(ComponentData{none_x, none_d}, p_, Vec::Zero(q_), niw_, rng);
    e.mu = std::move(ms.mu);
    e.sigma = std::move(ms.sigma);
    e.lambda = update_lambda(ComponentData{none_x, none_d}, e.mu, e.sigma, lambda_prior_, rng);
    rebuild_kernel(k);
  }
}

void GibbsSampler::regenerate_data(Rng& rng) {
  const Eigen::Index T = x_.rows();
  for (Eigen::Index t = 0; t < T; ++t) {
    const SkewNormalDraw s = nondegenerate_draw(kernels_[static_cast<std::size_t>(chain_.z[static_cast<std::size_t>(t)])], rng);
    x_.row(t).head(2 * p_) = s.w.transpose();
    x_.row(t).tail(q_) = s.y.transpose();
    d_.row(t) = s.d.transpose();
    sync_series_row(t);
  }
  mask_ = data_.mask();
}

void GibbsSampler::sync_series_row(Eigen::Index t) {
  for (int i = 0; i < p_; ++i) data_.theta(t, i) = wrap_angle(std::atan2(x_(t, 2 * i + 1), x_(t, 2 * i)));
  for (int j = 0; j < q_; ++j) data_.y(t, j) = x_(t, 2 * p_ + j);
}

PosteriorDraws run_sampler(const CylSeries& data, const FitConfig& config, const SamplerHooks& hooks) {
  GibbsSampler sampler(data, config);
  PosteriorDraws out{data.p, data.q, config.truncation, data.size(), {}};
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    sampler.sweep();
    if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
      PosteriorDraw draw = sampler.snapshot();
      if (hooks.on_draw) hooks.on_draw(draw);
      if (hooks.keep_draws) out.draws.push_back(std::move(draw));
    }
    if (hooks.on_progress && hooks.progress_every > 0 && (it + 1) % hooks.progress_every == 0) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      hooks.on_progress({it + 1, config.iterations, count_states(sampler.chain().z), secs});
    }
  }
  return out;
}

}  // namespace jpsnhmm
