#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "gaitplan/planner.hpp"

namespace gaitplan::testing {

inline std::shared_ptr<const HeightMap> flat_map(double side = 20.0, double z = 0.0) {
  TerrainScenario sc;
  sc.params.side_length = side;
  sc.params.flat_elevation = z;
  sc.spawn_region = {{-1.0, -1.0}, {1.0, 1.0}};
  sc.goal_region = {{-1.0, -1.0}, {1.0, 1.0}};
  return std::make_shared<const HeightMap>(generate(sc));
}

/// Four-contact stance with every foot exactly on its nominal foothold.
inline SupportPhase nominal_stance(const RobotModel& model, const Vec2& base_xy, double yaw, double ground_z = 0.0) {
  SupportPhase p;
  p.R_B = rot_z(yaw);
  const Mat2 rot = rot2(yaw);
  for (int k = 0; k < kNumFeet; ++k) p.r_F[k] << base_xy + rot * model.nominal_footholds[k], ground_z;
  p.r_B << base_xy, ground_z + model.h_com;
  return p;
}

inline GaitPlannerEnv flat_env(EnvConfig cfg = {}, double side = 20.0, Rect spawn = {{-1, -1}, {1, 1}},
                               Rect goal = {{-6, -6}, {6, 6}}) {
  return GaitPlannerEnv(flat_map(side), RobotModel{}, {"flat", spawn, goal}, cfg);
}

/// Puts env into a hand-made state without going through reset.
inline void place(GaitPlannerEnv& env, const SupportPhase& phase, const Vec2& goal) {
  PlannerState s;
  s.phase = phase;
  s.goal_xy = goal;
  env.set_state(std::move(s));
}

// ---- convex hull oracle, kept independent of the library -------------------------

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone chain, counter-clockwise, collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

/// Positive inside, negative outside; magnitude is the distance to the boundary.
inline double signed_hull_distance(const std::vector<Vec2>& hull, const Vec2& p) {
  bool inside = true;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    if (cross2(a, b, p) < 0) inside = false;
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    d = std::min(d, (a + t * ab - p).norm());
  }
  return inside ? d : -d;
}

/// Random flat four-contact stance for the static oracle; the CoM sits at least
/// `margin` away from the hull boundary, inside or outside at random.
struct StaticCase {
  SupportPhase phase;
  bool com_inside = false;
};

inline StaticCase random_static_case(std::mt19937_64& rng, const RobotModel& model, double margin) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    StaticCase c;
    const double yaw = kPi * u(rng);
    const Vec2 origin(2.0 * u(rng), 2.0 * u(rng));
    const double ground = 0.2 * u(rng);
    const Mat2 rot = rot2(yaw);
    std::vector<Vec2> feet;
    for (int k = 0; k < kNumFeet; ++k) {
      const Vec2 local = model.nominal_footholds[k] + Vec2(0.1 * u(rng), 0.08 * u(rng));
      const Vec2 xy = origin + rot * local;
      c.phase.r_F[k] << xy, ground;
      feet.push_back(xy);
    }
    const Vec2 com = origin + rot * Vec2(0.5 * u(rng), 0.35 * u(rng));
    const double d = signed_hull_distance(convex_hull(feet), com);
    if (std::abs(d) < margin) continue;
    c.com_inside = d > 0;
    c.phase.R_B = rot_z(yaw);
    c.phase.r_B << com, ground + model.h_com;
    return c;
  }
}

/// Wide kinematic boxes so only statics decides the verdict.
inline RobotModel static_oracle_model() {
  RobotModel m;
  m.friction_coeff = 1.0;
  for (auto& b : m.kinematic_box) {
    b.lo = Vec3(-2.0, -2.0, -1.0);
    b.hi = Vec3(2.0, 2.0, 0.0);
  }
  return m;
}

inline bool pinned_static_feasible(const SupportPhase& p, const RobotModel& model) {
  TransitionProblem prob{p, p, model, 1.0, 8, p.r_B, 0.5};
  return transition_lp_feasible(assemble_transition_lp(prob));
}

/// Planar rigid motion: yaw rotation about the world origin, then translation.
struct Rigid {
  double yaw = 0.0;
  Vec2 t = Vec2::Zero();

  Vec2 apply(const Vec2& p) const { return rot2(yaw) * p + t; }
  Vec3 apply(const Vec3& p) const {
    Vec3 q;
    q << apply(Vec2(p.head<2>())), p.z();
    return q;
  }
  SupportPhase apply(const SupportPhase& s) const {
    SupportPhase o = s;
    o.R_B = rot_z(yaw) * s.R_B;
    o.r_B = apply(s.r_B);
    o.v_B = rot_z(yaw) * s.v_B;
    for (int k = 0; k < kNumFeet; ++k) o.r_F[k] = apply(s.r_F[k]);
    return o;
  }
};

}  // namespace gaitplan::testing
