#pragma once

#include <array>
#include <optional>
#include <vector>

#include "gaitplan/lp.hpp"
#include "gaitplan/phase.hpp"

namespace gaitplan {

namespace bezier {

inline constexpr int kDegree = 4;
inline constexpr int kNumPoints = kDegree + 1;
using Weights = std::array<double, kNumPoints>;

inline constexpr double binomial4(int j) {
  constexpr std::array<double, kNumPoints> c{1.0, 4.0, 6.0, 4.0, 1.0};
  return c[j];
}

/// Bernstein weights of a degree-4 curve at s in [0, 1].
inline Weights basis(double s) {
  Weights w;
  for (int j = 0; j < kNumPoints; ++j)
    w[j] = binomial4(j) * std::pow(s, j) * std::pow(1.0 - s, kDegree - j);
  return w;
}

/// Second derivative of the Bernstein weights with respect to s.
inline Weights basis_dd(double s) {
  // d2/ds2 of sum_j B_j P_j = 12 * sum_{j=0}^{2} B^2_j(s) (P_{j+2} - 2 P_{j+1} + P_j)
  const std::array<double, 3> b2{(1.0 - s) * (1.0 - s), 2.0 * s * (1.0 - s), s * s};
  Weights w{};
  for (int j = 0; j < 3; ++j) {
    w[j] += 12.0 * b2[j];
    w[j + 1] -= 24.0 * b2[j];
    w[j + 2] += 12.0 * b2[j];
  }
  return w;
}

}  // namespace bezier

struct TransitionProblem {
  SupportPhase source;
  SupportPhase candidate;
  RobotModel model;
  double duration = 1.0;
  int n_samples = 8;
  /// Fixes the free middle control point (world frame) when set.
  std::optional<Vec3> pin_midpoint;
  /// Contact switch instant as a fraction of the window; samples at or after it use the candidate support.
  double switch_fraction = 0.5;
};

enum class RowKind { ForceBalance, MomentBalance, FrictionFace, NormalCap, Kinematic };

/// Column layout of a transition LP.
struct TransitionLayout {
  static constexpr int kControlPointColumn = 0;  // columns 0..2
  int n_samples = 0;
  std::vector<double> sample_times;
  /// force_column[k][i]: first of three columns for foot i at sample k, -1 when not in support.
  std::vector<std::array<int, kNumFeet>> force_column;
  std::vector<ContactFlags> support;
};

/// Transition LP in the transition frame: origin at the source CoM, axes of the
/// source heading. Forces are expressed in that frame.
struct TransitionLp {
  LinearProgram lp;
  TransitionLayout layout;
  std::vector<RowKind> eq_kinds;
  std::vector<RowKind> in_kinds;
  bool empty_support = false;
  Vec3 frame_origin = Vec3::Zero();
  double frame_yaw = 0.0;

  int n_vars() const { return lp.n_vars; }
  int count(RowKind kind) const {
    return static_cast<int>(std::count(eq_kinds.begin(), eq_kinds.end(), kind) +
                            std::count(in_kinds.begin(), in_kinds.end(), kind));
  }
};

namespace detail {

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace detail

/// Builds the zero-cost CROC-style LP: one free control point of a degree-4
/// CoM Bezier curve plus contact forces at K samples.
inline TransitionLp assemble_transition_lp(const TransitionProblem& problem) {
  if (!(problem.duration > 0.0)) throw std::invalid_argument("TransitionProblem: duration must be positive");
  if (problem.n_samples < 2) throw std::invalid_argument("TransitionProblem: need at least two samples");
  if (!(problem.switch_fraction > 0.0 && problem.switch_fraction <= 1.0))
    throw std::invalid_argument("TransitionProblem: switch_fraction must lie in (0, 1]");
  const int K = problem.n_samples;
  const RobotModel& model = problem.model;
  const double T = problem.duration;
  const double m = model.mass;
  const double mu = model.friction_coeff;

  TransitionLp out;
  out.frame_origin = problem.source.r_B;
  out.frame_yaw = problem.source.yaw();
  const Mat3 Q = rot_z(out.frame_yaw);
  const Mat3 Qt = Q.transpose();
  auto to_local = [&](const Vec3& p) -> Vec3 { return Qt * (p - out.frame_origin); };

  // Support per sample: the source set before the switch instant, the candidate set from it on.
  TransitionLayout& layout = out.layout;
  layout.n_samples = K;
  layout.sample_times.resize(K);
  layout.support.resize(K);
  layout.force_column.resize(K);
  std::vector<std::array<Vec3, kNumFeet>> feet(K);
  int n_vars = 3;
  for (int k = 0; k < K; ++k) {
    const double s = static_cast<double>(k) / (K - 1);
    layout.sample_times[k] = s * T;
    const SupportPhase& gov = (s < problem.switch_fraction - 1e-12) ? problem.source : problem.candidate;
    layout.support[k] = gov.c_F;
    if (count_contacts(gov.c_F) == 0) out.empty_support = true;
    for (int i = 0; i < kNumFeet; ++i) {
      feet[k][i] = to_local(gov.r_F[i]);
      if (gov.c_F[i]) {
        layout.force_column[k][i] = n_vars;
        n_vars += 3;
      } else {
        layout.force_column[k][i] = -1;
      }
    }
  }
  if (out.empty_support) {
    out.lp = LinearProgram(n_vars);
    return out;
  }

  // Fixed control points.
  const Vec3 c0 = to_local(problem.source.r_B);
  const Vec3 cT = to_local(problem.candidate.r_B);
  const Vec3 v0 = Qt * problem.source.v_B;
  const Vec3 vT = Qt * problem.candidate.v_B;
  std::array<Vec3, bezier::kNumPoints> P{c0, c0 + T * v0 / 4.0, Vec3::Zero(), cT - T * vT / 4.0, cT};
  const Vec3 g = Qt * model.gravity;
  const std::vector<Mat3> attitudes =
      interpolate_attitudes(Qt * problem.source.R_B, Qt * problem.candidate.R_B, K);

  int n_support_total = 0;
  for (int k = 0; k < K; ++k) n_support_total += count_contacts(layout.support[k]);
  const int n_eq = 6 * K;
  const int n_in = 5 * n_support_total + 6 * n_support_total;

  LinearProgram lp(n_vars);
  lp.A_eq = Eigen::MatrixXd::Zero(n_eq, n_vars);
  lp.b_eq = Eigen::VectorXd::Zero(n_eq);
  lp.A_in = Eigen::MatrixXd::Zero(n_in, n_vars);
  lp.b_in = Eigen::VectorXd::Zero(n_in);
  out.eq_kinds.reserve(n_eq);
  out.in_kinds.reserve(n_in);

  int re = 0, ri = 0;
  for (int k = 0; k < K; ++k) {
    const double s = static_cast<double>(k) / (K - 1);
    const auto B = bezier::basis(s);
    const auto Bdd = bezier::basis_dd(s);
    Vec3 a = Vec3::Zero(), b = Vec3::Zero();
    for (int j = 0; j < bezier::kNumPoints; ++j) {
      if (j == 2) continue;
      a += B[j] * P[j];
      b += Bdd[j] * P[j] / (T * T);
    }
    const double alpha = B[2];
    const double beta = Bdd[2] / (T * T);
    const Vec3 bg = b - g;
    const Vec3 w = beta * a - alpha * bg;

    // Force balance: sum f - m*beta*x = m*(b - g).
    for (int d = 0; d < 3; ++d) {
      lp.A_eq(re + d, d) = -m * beta;
      lp.b_eq[re + d] = m * bg[d];
      out.eq_kinds.push_back(RowKind::ForceBalance);
    }
    // Moment balance with zero angular momentum rate.
    const Mat3 wx = detail::skew(w);
    const Vec3 mrhs = m * a.cross(bg);
    for (int d = 0; d < 3; ++d) {
      lp.A_eq.block<1, 3>(re + 3 + d, 0) = -m * wx.row(d);
      lp.b_eq[re + 3 + d] = mrhs[d];
      out.eq_kinds.push_back(RowKind::MomentBalance);
    }
    for (int i = 0; i < kNumFeet; ++i) {
      const int col = layout.force_column[k][i];
      if (col < 0) continue;
      lp.A_eq.block<3, 3>(re, col) += Mat3::Identity();
      lp.A_eq.block<3, 3>(re + 3, col) += detail::skew(feet[k][i]);
    }
    re += 6;

    const Mat3 Rt = attitudes[k].transpose();
    for (int i = 0; i < kNumFeet; ++i) {
      const int col = layout.force_column[k][i];
      if (col < 0) continue;
      // Friction pyramid and normal force cap.
      const int fx = col, fy = col + 1, fz = col + 2;
      const std::array<std::pair<int, double>, 4> faces{std::pair{fx, 1.0}, {fx, -1.0}, {fy, 1.0}, {fy, -1.0}};
      for (const auto& [c, sign] : faces) {
        lp.A_in(ri, c) = sign;
        lp.A_in(ri, fz) = -mu;
        out.in_kinds.push_back(RowKind::FrictionFace);
        ++ri;
      }
      lp.A_in(ri, fz) = 1.0;
      lp.b_in[ri] = model.max_normal_force;
      out.in_kinds.push_back(RowKind::NormalCap);
      ++ri;
      lp.lower[fz] = 0.0;

      // Kinematic box of foot relative to the CoM in the interpolated base frame.
      const Vec3 rel = Rt * (feet[k][i] - a);
      const Mat3 coef = alpha * Rt;
      const KinematicBox& box = model.kinematic_box[i];
      for (int d = 0; d < 3; ++d) {
        lp.A_in.block<1, 3>(ri, 0) = -coef.row(d);
        lp.b_in[ri] = box.hi[d] - rel[d];
        out.in_kinds.push_back(RowKind::Kinematic);
        ++ri;
        lp.A_in.block<1, 3>(ri, 0) = coef.row(d);
        lp.b_in[ri] = rel[d] - box.lo[d];
        out.in_kinds.push_back(RowKind::Kinematic);
        ++ri;
      }
    }
  }

  if (problem.pin_midpoint) {
    const Vec3 pin = to_local(*problem.pin_midpoint);
    lp.lower.head<3>() = pin;
    lp.upper.head<3>() = pin;
  }
  out.lp = std::move(lp);
  return out;
}

struct FeasibilityOptions {
  int n_samples = 8;
  double tolerance = 1e-6;
  double switch_fraction = 0.5;
};

/// Solves an assembled transition LP. Throws SolverFailure on numerical breakdown.
inline bool transition_lp_feasible(const TransitionLp& lp, double tolerance = 1e-6) {
  if (lp.empty_support) return false;
  return lp_feasible(lp.lp, tolerance);
}

/// Transition feasibility verdict over the source phase's switch window.
inline bool transition_feasible(const SupportPhase& source, const SupportPhase& candidate, const RobotModel& model,
                                const FeasibilityOptions& options = {}) {
  TransitionProblem problem{source, candidate, model, source.t_S, options.n_samples, std::nullopt,
                            options.switch_fraction};
  return transition_lp_feasible(assemble_transition_lp(problem), options.tolerance);
}

}  // namespace gaitplan
