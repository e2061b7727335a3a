#pragma once

#include <numbers>

namespace jpsnhmm {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps any finite radian value into [0, 2pi).
double wrap_angle(double radians);

/// An angle in radians, always held in [0, 2pi).
class Angle {
 public:
  constexpr Angle() = default;
  explicit Angle(double radians) : value_(wrap_angle(radians)) {}

  double radians() const { return value_; }
  double degrees() const { return value_ * 180.0 / std::numbers::pi; }
  static Angle from_degrees(double deg) { return Angle(deg * std::numbers::pi / 180.0); }

  Angle operator+(Angle other) const { return Angle(value_ + other.value_); }
  Angle operator-(Angle other) const { return Angle(value_ - other.value_); }
  Angle operator-() const { return Angle(-value_); }
  bool operator==(const Angle&) const = default;

 private:
  double value_ = 0.0;
};

/// One bivariate-normal block (W_i1, W_i2).
struct PlanarVector {
  double w1 = 0.0;
  double w2 = 0.0;
};

struct Polar {
  Angle angle;
  double length = 0.0;
};

/// Quadrant-correct direction of `w` in [0, 2pi). Throws DomainError for the
/// zero vector (norm below 1e-300).
Angle atan_star(PlanarVector w);

/// (atan_star(w), |w|).
Polar project(PlanarVector w);

/// (length cos angle, length sin angle).
PlanarVector reconstruct(Angle angle, double length);

/// 1 - cos(a - b), in [0, 2].
double circular_distance(Angle a, Angle b);
double circular_distance(double a_radians, double b_radians);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace jpsnhmm
