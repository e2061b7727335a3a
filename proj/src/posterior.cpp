#include "jpsnhmm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "jpsnhmm/summaries.hpp"

namespace jpsnhmm {

std::map<int, double> k_posterior(const PosteriorDraws& draws) {
  std::map<int, double> pmf;
  if (draws.draws.empty()) return pmf;
  for (const auto& d : draws.draws) pmf[d.num_states()] += 1.0;
  for (auto& [k, v] : pmf) v /= static_cast<double>(draws.draws.size());
  return pmf;
}

int k_posterior_mode(const PosteriorDraws& draws) {
  const auto pmf = k_posterior(draws);
  int best = 0;
  double mass = -1.0;
  for (const auto& [k, v] : pmf)
    if (v > mass) {
      best = k;
      mass = v;
    }
  return best;
}

PosteriorDraw relabel(const PosteriorDraw& draw, const std::vector<int>& perm) {
  PosteriorDraw out = draw;
  const auto L = static_cast<Eigen::Index>(perm.size());
  for (auto& s : out.z) s = perm[static_cast<std::size_t>(s)];
  if (draw.pi.rows() == L) {
    for (Eigen::Index a = 0; a < L; ++a)
      for (Eigen::Index b = 0; b < L; ++b) out.pi(perm[a], perm[b]) = draw.pi(a, b);
  }
  if (draw.beta.size() == L)
    for (Eigen::Index a = 0; a < L; ++a) out.beta[perm[a]] = draw.beta[a];
  out.states.clear();
  for (const auto& [label, params] : draw.states) out.states.emplace(perm[static_cast<std::size_t>(label)], params);
  return out;
}

namespace {

double ground_concentration(const JpsnParams& params) {
  if (params.p == 0) return 0.0;
  // Only consulted to break exact speed ties; fixed stream keeps it canonical.
  Rng rng(0x5eed);
  const JpsnKernel kernel(params);
  std::vector<double> angles(4000);
  for (auto& a : angles) a = sample_jpsn(kernel, rng).theta[0];
  return circular_mean_concentration(angles).zeta;
}

}  // namespace

PosteriorDraw order_states(const PosteriorDraw& draw, int speed_index) {
  const int L = static_cast<int>(draw.beta.size());
  struct Key {
    double speed;
    double conc;
    int label;
  };
  std::vector<Key> keys;
  for (const auto& [label, params] : draw.states) {
    const double speed = speed_index < params.q ? linear_moments(params).mean[speed_index] : 0.0;
    keys.push_back({speed, 0.0, label});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) { return a.speed < b.speed; });
  bool tie = false;
  for (std::size_t i = 1; i < keys.size(); ++i) tie = tie || keys[i].speed == keys[i - 1].speed;
  if (tie) {
    for (auto& k : keys) k.conc = ground_concentration(draw.states.at(k.label));
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    return std::tie(a.speed, a.conc, a.label) < std::tie(b.speed, b.conc, b.label);
  });

  std::vector<int> perm(static_cast<std::size_t>(std::max(L, 0)), -1);
  int next = 0;
  for (const auto& k : keys) perm[static_cast<std::size_t>(k.label)] = next++;
  // Unoccupied states: descending global weight, then label.
  std::vector<int> empty;
  for (int label = 0; label < L; ++label)
    if (perm[static_cast<std::size_t>(label)] < 0) empty.push_back(label);
  std::stable_sort(empty.begin(), empty.end(), [&](int a, int b) { return draw.beta[a] > draw.beta[b]; });
  for (int label : empty) perm[static_cast<std::size_t>(label)] = next++;
  return relabel(draw, perm);
}

PosteriorDraws order_states(const PosteriorDraws& draws, int speed_index) {
  PosteriorDraws out = draws;
  for (auto& d : out.draws) d = order_states(d, speed_index);
  return out;
}

}  // namespace jpsnhmm
