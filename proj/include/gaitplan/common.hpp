#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gaitplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kNumFeet = 4;
inline constexpr double kPi = std::numbers::pi;

// Foot order used everywhere: left-front, right-front, left-hind, right-hind.
inline constexpr std::array<const char*, kNumFeet> kFootNames = {"LF", "RF", "LH", "RH"};

/// Raised when a query leaves the terrain footprint.
class OutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

inline Mat3 rot_z(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat2 rot2(double yaw) {
  Mat2 r;
  const double c = std::cos(yaw), s = std::sin(yaw);
  r << c, -s, s, c;
  return r;
}

/// Heading of the rotated x-axis projected on the ground plane.
inline double yaw_of(const Mat3& rotation) {
  return std::atan2(rotation(1, 0), rotation(0, 0));
}

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Axis-aligned world rectangle.
struct Rect {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  bool contains(const Rect& r) const { return contains(r.min) && contains(r.max); }
  bool valid() const { return max.x() >= min.x() && max.y() >= min.y(); }
};

}  // namespace gaitplan
