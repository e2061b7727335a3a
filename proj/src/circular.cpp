#include "jpsnhmm/circular.hpp"

#include <cmath>

#include "jpsnhmm/errors.hpp"

namespace jpsnhmm {

namespace {
constexpr double kZeroNorm = 1e-300;
}

double wrap_angle(double radians) {
  double v = std::fmod(radians, kTwoPi);
  if (v < 0.0) v += kTwoPi;
  // fmod of a tiny negative number can round back up to exactly 2pi.
  if (v >= kTwoPi) v = 0.0;
  return v;
}

Angle atan_star(PlanarVector w) {
  if (!(std::hypot(w.w1, w.w2) >= kZeroNorm)) throw DomainError("atan_star: direction of the zero vector is undefined");
  return Angle(std::atan2(w.w2, w.w1));
}

Polar project(PlanarVector w) { return {atan_star(w), std::hypot(w.w1, w.w2)}; }

PlanarVector reconstruct(Angle angle, double length) {
  return {length * std::cos(angle.radians()), length * std::sin(angle.radians())};
}

double circular_distance(double a, double b) { return 1.0 - std::cos(a - b); }

double circular_distance(Angle a, Angle b) { return circular_distance(a.radians(), b.radians()); }

}  // namespace jpsnhmm
