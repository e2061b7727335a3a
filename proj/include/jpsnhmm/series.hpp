#pragma once

#include <cstdint>
#include <vector>

#include "jpsnhmm/linalg.hpp"

namespace jpsnhmm {

/// Per-step, per-coordinate missingness flags.
struct MissingMask {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> theta;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> y;

  bool any(Eigen::Index t) const { return theta.row(t).any() || y.row(t).any(); }
  bool all(Eigen::Index t) const { return theta.row(t).all() && y.row(t).all(); }
};

/// A circular-linear time series with p angles and q linear values per step.
/// Angles are radians in [0, 2pi); linear values are on the modelling scale
/// (log speed for wind data). Missing entries are NaN.
struct CylSeries {
  int p = 2;
  int q = 2;
  std::vector<std::int64_t> timestamps;  ///< seconds since the Unix epoch, UTC
  Mat theta;                             ///< T x p
  Mat y;                                 ///< T x q

  static CylSeries empty(int p, int q);

  Eigen::Index size() const { return theta.rows(); }
  MissingMask mask() const;
  /// Throws ValidationError on shape mismatch or out-of-range angles.
  void validate() const;
};

}  // namespace jpsnhmm
