#include "jpsnhmm/series.hpp"

#include <cmath>
#include <string>

#include "jpsnhmm/circular.hpp"
#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

CylSeries CylSeries::empty(int p, int q) { return CylSeries{p, q, {}, Mat(0, p), Mat(0, q)}; }

MissingMask CylSeries::mask() const { return {theta.array().isNaN(), y.array().isNaN()}; }

void CylSeries::validate() const {
  if (theta.cols() != p || y.cols() != q || theta.rows() != y.rows())
    throw ValidationError("series shape does not match (p, q)");
  if (!timestamps.empty() && static_cast<Eigen::Index>(timestamps.size()) != size())
    throw ValidationError("timestamp count does not match series length");
  for (Eigen::Index t = 0; t < size(); ++t) {
    for (int i = 0; i < p; ++i) {
      const double v = theta(t, i);
      if (!std::isnan(v) && !(v >= 0.0 && v < kTwoPi))
        throw ValidationError("angle outside [0, 2pi) at step " + std::to_string(t));
    }
    for (int j = 0; j < q; ++j)
      if (std::isinf(y(t, j))) throw ValidationError("infinite linear value at step " + std::to_string(t));
  }
}

}  // namespace jpsnhmm
