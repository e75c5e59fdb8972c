#pragma once

#include <algorithm>
#include <vector>

#include "gaitplan/common.hpp"
#include "gaitplan/terrain.hpp"

namespace gaitplan {

using ContactFlags = std::array<bool, kNumFeet>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec4 = Eigen::Vector4d;

inline int count_contacts(const ContactFlags& c) {
  return static_cast<int>(std::count(c.begin(), c.end(), true));
}

/// Per-leg bounds on the foot position relative to the base, base frame.
struct KinematicBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct RobotModel {
  double mass = 30.0;
  Vec3 gravity{0.0, 0.0, -9.81};
  double h_com = 0.45;
  std::array<Vec2, kNumFeet> nominal_footholds{Vec2(0.33, 0.22), Vec2(0.33, -0.22), Vec2(-0.33, 0.22),
                                               Vec2(-0.33, -0.22)};
  std::array<KinematicBox, kNumFeet> kinematic_box = default_boxes();
  double friction_coeff = 0.7;
  double max_normal_force = 1000.0;
  /// Reach scale of base and foot translations per phase.
  double max_step = 0.3;

  static std::array<KinematicBox, kNumFeet> default_boxes() {
    const std::array<Vec2, kNumFeet> nominal{Vec2(0.33, 0.22), Vec2(0.33, -0.22), Vec2(-0.33, 0.22),
                                             Vec2(-0.33, -0.22)};
    std::array<KinematicBox, kNumFeet> boxes;
    for (int k = 0; k < kNumFeet; ++k) {
      boxes[k].lo = Vec3(nominal[k].x() - 0.28, nominal[k].y() - 0.18, -0.60);
      boxes[k].hi = Vec3(nominal[k].x() + 0.28, nominal[k].y() + 0.18, -0.30);
    }
    return boxes;
  }

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("RobotModel: mass must be positive");
    if (!(h_com > 0.0)) throw std::invalid_argument("RobotModel: h_com must be positive");
    if (!(friction_coeff > 0.0)) throw std::invalid_argument("RobotModel: friction_coeff must be positive");
    if (!(max_normal_force > 0.0)) throw std::invalid_argument("RobotModel: max_normal_force must be positive");
    if (!(max_step > 0.0)) throw std::invalid_argument("RobotModel: max_step must be positive");
    if (!gravity.allFinite()) throw std::invalid_argument("RobotModel: gravity must be finite");
    for (const auto& b : kinematic_box)
      if (!((b.hi - b.lo).minCoeff() > 0.0)) throw std::invalid_argument("RobotModel: kinematic box extents must be positive");
  }
};

/// One support phase: base pose and velocity, feet, contact flags and the
/// elapsed / to-switch timings.
struct SupportPhase {
  Mat3 R_B = Mat3::Identity();
  Vec3 r_B = Vec3::Zero();
  Vec3 v_B = Vec3::Zero();
  std::array<Vec3, kNumFeet> r_F{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  ContactFlags c_F{true, true, true, true};
  double t_E = 1.0;
  double t_S = 1.0;

  double yaw() const { return yaw_of(R_B); }

  bool operator==(const SupportPhase& o) const {
    return R_B == o.R_B && r_B == o.r_B && v_B == o.v_B && r_F == o.r_F && c_F == o.c_F && t_E == o.t_E &&
           t_S == o.t_S;
  }
};

/// Checks the phase invariants; terrain contact is only checked when a map is given.
inline void validate_phase(const SupportPhase& phase, const HeightMap* map = nullptr) {
  if (!is_rotation(phase.R_B)) throw std::invalid_argument("SupportPhase: R_B is not a proper rotation");
  if (!(phase.t_E > 0.0) || !(phase.t_S > 0.0)) throw std::invalid_argument("SupportPhase: timings must be positive");
  const int n = count_contacts(phase.c_F);
  if (n < 3) throw std::invalid_argument("SupportPhase: needs three or four closed contacts");
  if (map)
    for (int k = 0; k < kNumFeet; ++k)
      if (phase.c_F[k] && std::abs(phase.r_F[k].z() - elevation_at(*map, phase.r_F[k].head<2>())) > 1e-6)
        throw std::invalid_argument(std::string("SupportPhase: closed foot ") + kFootNames[k] + " is not on the terrain");
}

struct PlannerAction {
  double a_R = 0.0;
  Vec2 a_B = Vec2::Zero();
  Vec2 a_v = Vec2::Zero();
  Vec8 a_F = Vec8::Zero();
  Vec3 a_c = Vec3::Zero();
  Vec2 a_t = Vec2::Zero();

  static constexpr int kDim = 18;
  using Flat = Eigen::Matrix<double, kDim, 1>;

  Flat flat() const {
    Flat f;
    f << a_R, a_B, a_v, a_F, a_c, a_t;
    return f;
  }

  static PlannerAction from_flat(const Flat& f) {
    PlannerAction a;
    a.a_R = f[0];
    a.a_B = f.segment<2>(1);
    a.a_v = f.segment<2>(3);
    a.a_F = f.segment<8>(5);
    a.a_c = f.segment<3>(13);
    a.a_t = f.segment<2>(16);
    return a;
  }

  bool in_range() const {
    const Flat f = flat();
    return f.allFinite() && f.cwiseAbs().maxCoeff() <= 1.0;
  }

  PlannerAction clipped() const { return from_flat(flat().cwiseMax(-1.0).cwiseMin(1.0)); }

  bool operator==(const PlannerAction& o) const { return flat() == o.flat(); }
};

struct PlannerObservation {
  double o_R = 0.0;
  Vec2 o_v = Vec2::Zero();
  Vec8 o_F = Vec8::Zero();
  Vec4 o_c = Vec4::Ones();
  LocalHeightMap o_M = LocalHeightMap::Zero();

  bool operator==(const PlannerObservation& o) const {
    return o_R == o.o_R && o_v == o.o_v && o_F == o.o_F && o_c == o.o_c && o_M == o.o_M;
  }
};

/// 3-bit code of a contact action, first component most significant.
inline int contact_code(const Vec3& a_c) {
  return (a_c[0] >= 0.0 ? 4 : 0) | (a_c[1] >= 0.0 ? 2 : 0) | (a_c[2] >= 0.0 ? 1 : 0);
}

/// Codes 0-3 lift exactly that foot (LF, RF, LH, RH); codes 4-7 are full stance.
inline ContactFlags decode_contacts(const Vec3& a_c) {
  const int code = contact_code(a_c);
  ContactFlags c{true, true, true, true};
  if (code < kNumFeet) c[code] = false;
  return c;
}

/// Base-frame planar offset of a foot from its nominal foothold.
inline Vec2 foot_offset_from_nominal(const SupportPhase& phase, int foot, const RobotModel& model) {
  const Vec2 rel = rot2(phase.yaw()).transpose() * (phase.r_F[foot] - phase.r_B).head<2>();
  return rel - model.nominal_footholds[foot];
}

/// Bearing of the goal seen from the base, yaw frame.
inline double goal_bearing(const SupportPhase& phase, const Vec2& goal_xy) {
  const Vec2 rel = rot2(phase.yaw()).transpose() * (goal_xy - phase.r_B.head<2>());
  return std::atan2(rel.y(), rel.x());
}

/// Candidate successor phase produced by an action. Throws OutOfBounds when a
/// moved foot leaves the terrain.
inline SupportPhase apply_action(const SupportPhase& phase, const PlannerAction& action, const HeightMap& map,
                                 const RobotModel& model) {
  if (!action.in_range()) throw std::invalid_argument("apply_action: action components must lie in [-1, 1]");
  SupportPhase next;
  next.R_B = rot_z(kPi / 8.0 * action.a_R) * phase.R_B;
  const Mat2 yaw_rot = rot2(next.yaw());

  const Vec2 base_xy = phase.r_B.head<2>() + yaw_rot * (model.max_step * action.a_B);
  next.v_B << yaw_rot * action.a_v, 0.0;
  next.c_F = decode_contacts(action.a_c);

  double lowest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kNumFeet; ++k) {
    if (phase.c_F[k] && next.c_F[k]) {
      next.r_F[k] = phase.r_F[k];
    } else {
      const Vec2 xy = base_xy + yaw_rot * (model.nominal_footholds[k] + model.max_step * action.a_F.segment<2>(2 * k));
      next.r_F[k] << xy, elevation_at(map, xy);
    }
    if (next.c_F[k]) lowest = std::min(lowest, next.r_F[k].z());
  }
  next.r_B << base_xy, lowest + model.h_com;
  next.t_E = 1.0 + 0.9 * action.a_t[0];
  next.t_S = 1.0 + 0.9 * action.a_t[1];
  return next;
}

inline PlannerObservation build_observation(const SupportPhase& phase, const Vec2& goal_xy, const HeightMap& map,
                                            const RobotModel& model) {
  PlannerObservation obs;
  const double yaw = phase.yaw();
  const Mat2 to_base = rot2(yaw).transpose();
  obs.o_R = -goal_bearing(phase, goal_xy);
  obs.o_v = to_base * phase.v_B.head<2>();
  for (int k = 0; k < kNumFeet; ++k) {
    obs.o_F.segment<2>(2 * k) = foot_offset_from_nominal(phase, k, model);
    obs.o_c[k] = phase.c_F[k] ? 1.0 : -1.0;
  }
  obs.o_M = local_heightmap(map, phase.r_B.head<2>(), yaw, phase.r_B.z());
  return obs;
}

/// Constant angular velocity interpolation from R_from to R_to over K samples.
inline std::vector<Mat3> interpolate_attitudes(const Mat3& R_from, const Mat3& R_to, int K) {
  if (K < 1) throw std::invalid_argument("interpolate_attitudes: K must be at least 1");
  std::vector<Mat3> out;
  out.reserve(K);
  if (K == 1) {
    out.push_back(R_from);
    return out;
  }
  const Eigen::AngleAxisd rel(R_from.transpose() * R_to);
  for (int k = 0; k < K; ++k) {
    if (k == 0) {
      out.push_back(R_from);
    } else if (k == K - 1) {
      out.push_back(R_to);
    } else {
      const double s = static_cast<double>(k) / (K - 1);
      out.push_back(R_from * Eigen::AngleAxisd(s * rel.angle(), rel.axis()).toRotationMatrix());
    }
  }
  return out;
}

}  // namespace gaitplan
