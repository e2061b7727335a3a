#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "jpsnhmm/jpsn.hpp"
#include "jpsnhmm/shdp.hpp"

namespace jpsnhmm {

/// One imputed missing entry: an angle (radians) or a linear value.
struct Imputation {
  std::int64_t t = 0;
  bool circular = false;
  int index = 0;
  double value = 0.0;
};

/// One retained sweep. Only occupied states carry emission parameters, stored
/// in identifiable form.
struct PosteriorDraw {
  std::int64_t iteration = 0;
  std::vector<int> z;
  Mat pi;
  Vec beta;
  StickyHyper hyper;
  std::map<int, JpsnParams> states;
  std::vector<Imputation> imputed;

  int num_states() const { return static_cast<int>(states.size()); }
};

struct PosteriorDraws {
  int p = 0;
  int q = 0;
  int truncation = 0;
  std::int64_t length = 0;  ///< T
  std::vector<PosteriorDraw> draws;
};

/// Posterior mass function of the number of occupied states.
std::map<int, double> k_posterior(const PosteriorDraws& draws);
int k_posterior_mode(const PosteriorDraws& draws);

/// Canonical labelling of one draw: occupied states sorted by ascending mean
/// of linear coordinate `speed_index` (skew-normal mean), ties by ascending
/// concentration of circular coordinate 0, then by original label. Occupied
/// states become 0..K-1; unoccupied ones follow by descending beta.
PosteriorDraw order_states(const PosteriorDraw& draw, int speed_index = 0);
PosteriorDraws order_states(const PosteriorDraws& draws, int speed_index = 0);

/// Apply a relabelling old -> perm[old] to every label-indexed field.
PosteriorDraw relabel(const PosteriorDraw& draw, const std::vector<int>& perm);

}  // namespace jpsnhmm
