#include "jpsnhmm/shdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

void StickyHyper::validate() const {
  if (!(tau > 0.0) || !(gamma > 0.0) || !(varsigma >= 0.0 && varsigma <= 1.0))
    throw ValidationError("sticky hyperparameters out of range");
}

void HyperPrior::validate() const {
  if (!(tau_shape > 0.0 && tau_scale > 0.0 && gamma_shape > 0.0 && gamma_scale > 0.0 && varsigma_a > 0.0 &&
        varsigma_b > 0.0))
    throw ValidationError("hyperprior parameters must be positive");
}

StickyHyper HyperPrior::sample(Rng& rng) const {
  return {rng.gamma(tau_shape, tau_scale), rng.gamma(gamma_shape, gamma_scale), rng.beta(varsigma_a, varsigma_b)};
}

CountMatrix transition_counts(const std::vector<int>& z, int truncation) {
  CountMatrix n = CountMatrix::Zero(truncation, truncation);
  int prev = 0;
  for (int s : z) {
    if (s < 0 || s >= truncation) throw DomainError("state label " + std::to_string(s) + " outside truncation");
    ++n(prev, s);
    prev = s;
  }
  return n;
}

std::int64_t TableCounts::total_overrides() const {
  std::int64_t s = 0;
  for (auto w : overrides) s += w;
  return s;
}

std::vector<std::int64_t> TableCounts::effective_columns() const {
  std::vector<std::int64_t> cols(static_cast<std::size_t>(effective.cols()), 0);
  for (Eigen::Index j = 0; j < effective.cols(); ++j) cols[static_cast<std::size_t>(j)] = effective.col(j).sum();
  return cols;
}

TableCounts sample_tables(const CountMatrix& counts, const Vec& beta, const StickyHyper& hyper, Rng& rng) {
  const Eigen::Index L = counts.rows();
  TableCounts out{CountMatrix::Zero(L, L), std::vector<std::int64_t>(static_cast<std::size_t>(L), 0),
                  CountMatrix::Zero(L, L)};
  for (Eigen::Index k = 0; k < L; ++k) {
    for (Eigen::Index j = 0; j < L; ++j) {
      const double base = (1.0 - hyper.varsigma) * beta[j] + (k == j ? hyper.varsigma : 0.0);
      out.tables(k, j) = rng.crt(counts(k, j), hyper.gamma * base);
    }
    const double sticky = hyper.varsigma;
    const double denom = sticky + (1.0 - hyper.varsigma) * beta[k];
    const double prob = denom > 0.0 ? sticky / denom : 0.0;
    out.overrides[static_cast<std::size_t>(k)] = rng.binomial(out.tables(k, k), prob);
  }
  out.effective = out.tables;
  for (Eigen::Index k = 0; k < L; ++k) out.effective(k, k) -= out.overrides[static_cast<std::size_t>(k)];
  return out;
}

std::vector<int> sample_states_blocked(const Mat& emission_loglik, const Mat& pi, Rng& rng) {
  const Eigen::Index T = emission_loglik.rows();
  const Eigen::Index L = emission_loglik.cols();
  std::vector<int> z(static_cast<std::size_t>(T), 0);
  if (T == 0) return z;
  if (L == 1) return z;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  // filtered(t, k) = P(z_t = k | data_1..t), each row normalised.
  RowMat filtered(T, L);
  Vec prev = pi.row(0).transpose();  // predictive for t = 1 given z_0 = 0
  Vec pred(L), e(L);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) pred.noalias() = pi.transpose() * filtered.row(t - 1).transpose();
    else pred = prev;
    const double mx = emission_loglik.row(t).maxCoeff();
    if (!(mx > neg_inf) || std::isnan(mx))
      throw NumericalError("FFBS: no state can explain step " + std::to_string(t));
    for (Eigen::Index k = 0; k < L; ++k) e[k] = pred[k] * std::exp(emission_loglik(t, k) - mx);
    double total = e.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
      // The best-fitting states are unreachable; redo this step in log space.
      Vec logs(L);
      for (Eigen::Index k = 0; k < L; ++k)
        logs[k] = pred[k] > 0.0 ? std::log(pred[k]) + emission_loglik(t, k) : neg_inf;
      const double lm = logs.maxCoeff();
      if (!(lm > neg_inf)) throw NumericalError("FFBS: no reachable state can explain step " + std::to_string(t));
      for (Eigen::Index k = 0; k < L; ++k) e[k] = std::exp(logs[k] - lm);
      total = e.sum();
    }
    filtered.row(t) = (e / total).transpose();
  }

  std::vector<double> w(static_cast<std::size_t>(L));
  for (Eigen::Index k = 0; k < L; ++k) w[static_cast<std::size_t>(k)] = filtered(T - 1, k);
  z[static_cast<std::size_t>(T - 1)] = static_cast<int>(rng.categorical(w));
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const int next = z[static_cast<std::size_t>(t + 1)];
    for (Eigen::Index k = 0; k < L; ++k) w[static_cast<std::size_t>(k)] = filtered(t, k) * pi(k, next);
    z[static_cast<std::size_t>(t)] = static_cast<int>(rng.categorical(w));
  }
  return z;
}

Mat update_pi(const CountMatrix& counts, const Vec& beta, const StickyHyper& hyper, Rng& rng) {
  const Eigen::Index L = beta.size();
  Mat pi(L, L);
  std::vector<double> shape(static_cast<std::size_t>(L));
  for (Eigen::Index k = 0; k < L; ++k) {
    for (Eigen::Index j = 0; j < L; ++j) {
      const double base = (1.0 - hyper.varsigma) * beta[j] + (k == j ? hyper.varsigma : 0.0);
      shape[static_cast<std::size_t>(j)] = hyper.gamma * base + static_cast<double>(counts(k, j));
    }
    const auto row = rng.dirichlet(shape);
    for (Eigen::Index j = 0; j < L; ++j) pi(k, j) = row[static_cast<std::size_t>(j)];
  }
  return pi;
}

Mat update_pi(const std::vector<int>& z, const Vec& beta, const StickyHyper& hyper, Rng& rng) {
  return update_pi(transition_counts(z, static_cast<int>(beta.size())), beta, hyper, rng);
}

Vec update_beta(const std::vector<std::int64_t>& effective_columns, double tau, Rng& rng) {
  const auto L = effective_columns.size();
  std::vector<double> shape(L);
  for (std::size_t j = 0; j < L; ++j)
    shape[j] = tau / static_cast<double>(L) + static_cast<double>(effective_columns[j]);
  const auto draw = rng.dirichlet(shape);
  return Eigen::Map<const Vec>(draw.data(), static_cast<Eigen::Index>(L));
}

Vec update_beta(const TableCounts& tables, double tau, Rng& rng) {
  return update_beta(tables.effective_columns(), tau, rng);
}

StickyHyper update_hyperparameters(const CountMatrix& counts, const TableCounts& tables, const StickyHyper& current,
                                   const HyperPrior& prior, int truncation, Rng& rng) {
  StickyHyper next = current;

  // gamma: Gamma(gamma)/Gamma(gamma + n_k.) = B(gamma, n_k.) / Gamma(n_k.), one Beta auxiliary per row.
  double sum_log_r = 0.0;
  for (Eigen::Index k = 0; k < counts.rows(); ++k) {
    const auto nk = counts.row(k).sum();
    if (nk > 0) sum_log_r += rng.log_beta(current.gamma, static_cast<double>(nk));
  }
  const double gamma_rate = 1.0 / prior.gamma_scale - sum_log_r;
  next.gamma = rng.gamma(prior.gamma_shape + static_cast<double>(tables.total_tables()), 1.0 / gamma_rate);

  const auto overrides = static_cast<double>(tables.total_overrides());
  const auto effective = static_cast<double>(tables.total_effective());
  next.varsigma = rng.beta(prior.varsigma_a + overrides, prior.varsigma_b + effective);

  // tau with beta integrated out: per-column CRT auxiliaries for the tau/L
  // shapes, one Beta auxiliary for Gamma(tau)/Gamma(tau + m-bar..).
  const auto cols = tables.effective_columns();
  double tau_shape = prior.tau_shape;
  double tau_rate = 1.0 / prior.tau_scale;
  if (tables.total_effective() > 0) {
    const double per_state = current.tau / static_cast<double>(truncation);
    for (auto c : cols) tau_shape += static_cast<double>(rng.crt(c, per_state));
    tau_rate -= rng.log_beta(current.tau, effective);
  }
  next.tau = rng.gamma(tau_shape, 1.0 / tau_rate);

  // Keep the concentrations strictly positive in floating point.
  constexpr double kFloor = 1e-300;
  next.gamma = std::max(next.gamma, kFloor);
  next.tau = std::max(next.tau, kFloor);
  return next;
}

void update_transition_block(ChainState& state, const HyperPrior& prior, Rng& rng) {
  const int L = state.truncation();
  const CountMatrix n = transition_counts(state.z, L);
  const TableCounts tables = sample_tables(n, state.beta, state.hyper, rng);
  state.hyper = update_hyperparameters(n, tables, state.hyper, prior, L, rng);
  state.beta = update_beta(tables, state.hyper.tau, rng);
  state.pi = update_pi(n, state.beta, state.hyper, rng);
}

int count_states(const std::vector<int>& z) {
  return static_cast<int>(std::set<int>(z.begin(), z.end()).size());
}

}  // namespace jpsnhmm
