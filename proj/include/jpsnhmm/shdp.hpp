#pragma once

#include <cstdint>
#include <vector>

#include "jpsnhmm/linalg.hpp"
#include "jpsnhmm/random.hpp"

namespace jpsnhmm {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Concentrations of the sticky HDP: tau for the global weights, gamma for
/// the transition rows, varsigma the self-transition share.
struct StickyHyper {
  double tau = 1.0;
  double gamma = 1.0;
  double varsigma = 0.5;

  void validate() const;
};

/// Gamma priors are parameterised by shape and SCALE: Gamma(1, 0.01) has mean 0.01.
struct HyperPrior {
  double tau_shape = 1.0;
  double tau_scale = 0.01;
  double gamma_shape = 1.0;
  double gamma_scale = 0.01;
  double varsigma_a = 1.0;
  double varsigma_b = 1.0;

  void validate() const;
  StickyHyper sample(Rng& rng) const;
};

/// State labels are 0-based. The chain starts from state 0 (z_0 = 0), so the
/// first observed state is drawn from row 0 of pi.
struct ChainState {
  std::vector<int> z;
  Mat pi;     ///< L x L, rows sum to one
  Vec beta;   ///< length L, sums to one (weak-limit truncation has no residual mass)
  StickyHyper hyper;

  int truncation() const { return static_cast<int>(beta.size()); }
};

/// n_kj: transitions k -> j in z, including z_0 = 0 -> z_1.
CountMatrix transition_counts(const std::vector<int>& z, int truncation);

/// Auxiliary table counts behind the beta / hyperparameter updates.
struct TableCounts {
  CountMatrix tables;                ///< m_kj
  std::vector<std::int64_t> overrides;  ///< w_k: tables at (k, k) credited to the sticky mass
  CountMatrix effective;             ///< m-bar: tables minus overrides

  std::int64_t total_tables() const { return tables.sum(); }
  std::int64_t total_overrides() const;
  std::int64_t total_effective() const { return effective.sum(); }
  /// m-bar summed over origin states.
  std::vector<std::int64_t> effective_columns() const;
};

/// m_kj ~ CRT(n_kj, gamma((1 - varsigma) beta_j + varsigma I(k, j))),
/// w_k ~ Binomial(m_kk, varsigma / (varsigma + (1 - varsigma) beta_k)).
TableCounts sample_tables(const CountMatrix& counts, const Vec& beta, const StickyHyper& hyper, Rng& rng);

/// Blocked draw of z_1..z_T by forward filtering backward sampling.
/// `emission_loglik` is T x L. Throws NumericalError when some step has no
/// state with finite likelihood reachable under pi.
std::vector<int> sample_states_blocked(const Mat& emission_loglik, const Mat& pi, Rng& rng);

/// Row k ~ Dir(gamma((1 - varsigma) beta + varsigma e_k) + n_k).
Mat update_pi(const CountMatrix& counts, const Vec& beta, const StickyHyper& hyper, Rng& rng);
Mat update_pi(const std::vector<int>& z, const Vec& beta, const StickyHyper& hyper, Rng& rng);

/// beta ~ Dir(tau / L + m-bar_{.j}).
Vec update_beta(const std::vector<std::int64_t>& effective_columns, double tau, Rng& rng);
Vec update_beta(const TableCounts& tables, double tau, Rng& rng);

/// Auxiliary-variable Gibbs update of (gamma, varsigma, tau) given the table
/// counts; exact for the weak-limit model.
StickyHyper update_hyperparameters(const CountMatrix& counts, const TableCounts& tables, const StickyHyper& current,
                                   const HyperPrior& prior, int truncation, Rng& rng);

/// Tables, hyperparameters, beta, then pi, all conditioned on the current z.
void update_transition_block(ChainState& state, const HyperPrior& prior, Rng& rng);

/// Number of distinct labels in z.
int count_states(const std::vector<int>& z);

}  // namespace jpsnhmm
