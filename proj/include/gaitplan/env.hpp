#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>

#include "gaitplan/feasibility.hpp"
#include "gaitplan/phase.hpp"
#include "gaitplan/terrain.hpp"

namespace gaitplan {

enum class TerminationReason { None, Footholds, BaseCollision, Infeasible, OutOfBounds, SolverFailure };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::None: return "none";
    case TerminationReason::Footholds: return "footholds";
    case TerminationReason::BaseCollision: return "base_collision";
    case TerminationReason::Infeasible: return "infeasible";
    case TerminationReason::OutOfBounds: return "out_of_bounds";
    case TerminationReason::SolverFailure: return "solver_failure";
  }
  return "?";
}

inline TerminationReason termination_reason_from_string(const std::string& s) {
  for (auto r : {TerminationReason::None, TerminationReason::Footholds, TerminationReason::BaseCollision,
                 TerminationReason::Infeasible, TerminationReason::OutOfBounds, TerminationReason::SolverFailure})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown termination reason '" + s + "'");
}

/// How the foothold term of the progress reward aggregates closed-contact feet.
enum class FootholdAggregate { Mean, Sum };

struct RewardWeights {
  double w_p = 25.0;
  double w_k = 80.0;
  double w_c = 0.01;
  FootholdAggregate aggregate = FootholdAggregate::Mean;
};

struct EnvConfig {
  int max_episode_length = 50;
  double goal_tolerance = 0.5;
  double terminal_reward = -1.0;
  RewardWeights weights;

  double foothold_probe_radius = 0.05;
  double foothold_height_threshold = 0.01;
  int foothold_probe_count = 8;

  Vec2 base_footprint{0.6, 0.3};
  double base_clearance = 0.05;
  int base_probe_nx = 7;
  int base_probe_ny = 5;

  FeasibilityOptions feasibility;

  int reset_budget = 1000;
  double reset_yaw_spread = kPi / 4.0;
  double reset_foot_half_box = 0.05;
  /// Optional bounds on the start-to-goal distance enforced during reset.
  double goal_min_distance = 0.0;
  double goal_max_distance = std::numeric_limits<double>::infinity();
};

/// Where episodes may start and end on a given terrain.
struct EnvRegions {
  std::string name = "terrain";
  Rect spawn;
  Rect goal;
};

struct PlannerState {
  SupportPhase phase;
  Vec2 goal_xy = Vec2::Zero();
  int step_count = 0;
  std::array<int, kNumFeet> stance_counts{0, 0, 0, 0};
  std::mt19937_64 rng;
};

struct RewardTerms {
  double r_p = 0.0;
  double r_h = 0.0;
  double r_k = 0.0;
  double r_c = 0.0;
  double total = 0.0;
};

struct StepOutcome {
  PlannerObservation observation;
  double reward = 0.0;
  RewardTerms terms;
  bool terminated = false;
  TerminationReason reason = TerminationReason::None;
  bool success = false;
  /// Episode over: failure, success or step cap.
  bool done = false;
};

/// Raised when reset cannot find a valid start within its draw budget.
class ResetFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::array<int, kNumFeet> updated_stance_counts(const std::array<int, kNumFeet>& counts,
                                                       const ContactFlags& next_contacts) {
  std::array<int, kNumFeet> out{};
  for (int k = 0; k < kNumFeet; ++k) out[k] = next_contacts[k] ? counts[k] + 1 : 0;
  return out;
}

inline Vec2 foothold_aggregate(const SupportPhase& phase, FootholdAggregate mode) {
  Vec2 sum = Vec2::Zero();
  int n = 0;
  for (int k = 0; k < kNumFeet; ++k)
    if (phase.c_F[k]) {
      sum += phase.r_F[k].head<2>();
      ++n;
    }
  return (mode == FootholdAggregate::Mean && n > 0) ? Vec2(sum / n) : sum;
}

/// Planner reward for moving from state.phase to candidate. Stance counters are
/// advanced with the candidate contacts before r_c is evaluated.
inline RewardTerms compute_reward(const PlannerState& state, const SupportPhase& candidate, bool terminated,
                                  const RobotModel& model, const EnvConfig& config = {}) {
  const RewardWeights& w = config.weights;
  RewardTerms t;
  const Vec2& goal = state.goal_xy;
  t.r_p = w.w_p * (goal - foothold_aggregate(state.phase, w.aggregate)).norm() -
          w.w_p * (goal - foothold_aggregate(candidate, w.aggregate)).norm();
  t.r_h = 1.0 - std::abs(goal_bearing(candidate, goal)) / kPi;
  double effort = 0.0;
  for (int k = 0; k < kNumFeet; ++k) {
    const Vec2 off = foot_offset_from_nominal(candidate, k, model);
    effort += std::pow(std::abs(off.x()), 3) + std::pow(std::abs(off.y()), 3);
  }
  t.r_k = std::max(0.0, 1.0 - w.w_k * effort);
  const auto counts = updated_stance_counts(state.stance_counts, candidate.c_F);
  t.r_c = w.w_c * (counts[0] + counts[1] + counts[2] + counts[3]);
  t.total = terminated ? config.terminal_reward : t.r_p * t.r_h * t.r_h * t.r_k - t.r_c;
  return t;
}

namespace detail {

inline bool footholds_clear(const SupportPhase& phase, const HeightMap& map, const EnvConfig& cfg) {
  for (int k = 0; k < kNumFeet; ++k) {
    if (!phase.c_F[k]) continue;
    const Vec3& f = phase.r_F[k];
    for (int j = 0; j < cfg.foothold_probe_count; ++j) {
      const double ang = 2.0 * kPi * j / cfg.foothold_probe_count;
      const Vec2 probe = f.head<2>() + cfg.foothold_probe_radius * Vec2(std::cos(ang), std::sin(ang));
      if (std::abs(elevation_at(map, probe) - f.z()) > cfg.foothold_height_threshold) return false;
    }
  }
  return true;
}

inline bool base_clear(const SupportPhase& phase, const HeightMap& map, const EnvConfig& cfg) {
  const Mat2 rot = rot2(phase.yaw());
  const double limit = phase.r_B.z() - cfg.base_clearance;
  for (int ix = 0; ix < cfg.base_probe_nx; ++ix)
    for (int iy = 0; iy < cfg.base_probe_ny; ++iy) {
      const double u = cfg.base_probe_nx > 1 ? static_cast<double>(ix) / (cfg.base_probe_nx - 1) - 0.5 : 0.0;
      const double v = cfg.base_probe_ny > 1 ? static_cast<double>(iy) / (cfg.base_probe_ny - 1) - 0.5 : 0.0;
      const Vec2 p = phase.r_B.head<2>() + rot * Vec2(u * cfg.base_footprint.x(), v * cfg.base_footprint.y());
      if (elevation_at(map, p) > limit) return false;
    }
  return true;
}

/// Geometry checks shared by reset and step; feasibility excluded.
inline TerminationReason geometric_checks(const SupportPhase& phase, const HeightMap& map, const EnvConfig& cfg) {
  try {
    for (int k = 0; k < kNumFeet; ++k)
      if (!map.contains(phase.r_F[k].head<2>())) return TerminationReason::OutOfBounds;
    if (!local_window_inside(map, phase.r_B.head<2>(), phase.yaw())) return TerminationReason::OutOfBounds;
    if (!footholds_clear(phase, map, cfg)) return TerminationReason::Footholds;
    if (!base_clear(phase, map, cfg)) return TerminationReason::BaseCollision;
  } catch (const OutOfBounds&) {
    return TerminationReason::OutOfBounds;
  }
  return TerminationReason::None;
}

}  // namespace detail

/// Termination predicates in order: bounds, footholds, base, feasibility.
inline TerminationReason check_terminations(const PlannerState& state, const SupportPhase& candidate,
                                            const HeightMap& map, const RobotModel& model,
                                            const EnvConfig& config = {}) {
  const TerminationReason geo = detail::geometric_checks(candidate, map, config);
  if (geo != TerminationReason::None) return geo;
  try {
    if (!transition_feasible(state.phase, candidate, model, config.feasibility)) return TerminationReason::Infeasible;
  } catch (const SolverFailure&) {
    return TerminationReason::SolverFailure;
  }
  return TerminationReason::None;
}

/// The gait-planner MDP over a fixed terrain. Copies are independent episodes
/// sharing the read-only map.
class GaitPlannerEnv {
 public:
  GaitPlannerEnv(std::shared_ptr<const HeightMap> map, RobotModel model, EnvRegions regions, EnvConfig config = {})
      : map_(std::move(map)), model_(std::move(model)), regions_(std::move(regions)), config_(std::move(config)) {
    if (!map_) throw std::invalid_argument("GaitPlannerEnv: null terrain");
    model_.validate();
    if (!map_->footprint().contains(regions_.spawn) || !map_->footprint().contains(regions_.goal))
      throw std::invalid_argument("GaitPlannerEnv: spawn/goal regions must lie inside the terrain footprint");
  }

  PlannerObservation reset(std::uint64_t seed) {
    PlannerState s;
    s.rng.seed(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform_in = [&](const Rect& r) {
      const double ux = unit(s.rng), uy = unit(s.rng);
      return Vec2(r.min.x() + ux * (r.max.x() - r.min.x()), r.min.y() + uy * (r.max.y() - r.min.y()));
    };
    for (int draw = 0; draw < config_.reset_budget; ++draw) {
      const Vec2 base_xy = uniform_in(regions_.spawn);
      const Vec2 goal = uniform_in(regions_.goal);
      const double spread = (2.0 * unit(s.rng) - 1.0) * config_.reset_yaw_spread;
      std::array<Vec2, kNumFeet> jitter;
      for (auto& j : jitter)
        for (int d = 0; d < 2; ++d) j[d] = (2.0 * unit(s.rng) - 1.0) * config_.reset_foot_half_box;

      const double dist = (goal - base_xy).norm();
      if (dist <= 0.0 || dist < config_.goal_min_distance || dist > config_.goal_max_distance) continue;
      const Vec2 dir = goal - base_xy;
      const double yaw = wrap_angle(std::atan2(dir.y(), dir.x()) + spread);

      SupportPhase phase;
      phase.R_B = rot_z(yaw);
      const Mat2 rot = rot2(yaw);
      bool inside = true;
      double lowest = std::numeric_limits<double>::infinity();
      for (int k = 0; k < kNumFeet; ++k) {
        const Vec2 xy = base_xy + rot * (model_.nominal_footholds[k] + jitter[k]);
        if (!map_->contains(xy)) {
          inside = false;
          break;
        }
        phase.r_F[k] << xy, elevation_at(*map_, xy);
        lowest = std::min(lowest, phase.r_F[k].z());
      }
      if (!inside || !map_->contains(base_xy)) continue;
      phase.r_B << base_xy, lowest + model_.h_com;
      phase.v_B.setZero();
      phase.c_F = {true, true, true, true};
      phase.t_E = phase.t_S = 1.0;

      if (detail::geometric_checks(phase, *map_, config_) != TerminationReason::None) continue;
      try {
        if (!transition_feasible(phase, phase, model_, config_.feasibility)) continue;
      } catch (const SolverFailure&) {
        continue;
      }
      s.phase = phase;
      s.goal_xy = goal;
      state_ = std::move(s);
      done_ = false;
      return observe();
    }
    throw ResetFailure("reset: no valid start/goal for scenario '" + regions_.name + "' within " +
                       std::to_string(config_.reset_budget) + " draws");
  }

  StepOutcome step(const PlannerAction& action) {
    if (!state_) throw std::logic_error("step: environment has not been reset");
    if (done_) throw std::logic_error("step: episode already finished; call reset");
    if (!action.in_range()) throw std::invalid_argument("step: action components must lie in [-1, 1]");
    PlannerState& s = *state_;

    StepOutcome out;
    std::optional<SupportPhase> candidate;
    try {
      candidate = apply_action(s.phase, action, *map_, model_);
      out.reason = check_terminations(s, *candidate, *map_, model_, config_);
    } catch (const OutOfBounds&) {
      out.reason = TerminationReason::OutOfBounds;
    }
    last_candidate_ = candidate;

    if (out.reason != TerminationReason::None) {
      out.terminated = true;
      out.done = true;
      if (candidate) out.terms = compute_reward(s, *candidate, true, model_, config_);
      out.terms.total = config_.terminal_reward;
      out.reward = config_.terminal_reward;
      out.observation = observe();
      done_ = true;
      return out;
    }

    out.terms = compute_reward(s, *candidate, false, model_, config_);
    out.reward = out.terms.total;
    s.stance_counts = updated_stance_counts(s.stance_counts, candidate->c_F);
    s.phase = *candidate;
    ++s.step_count;
    out.success = (s.phase.r_B.head<2>() - s.goal_xy).norm() <= config_.goal_tolerance;
    out.done = out.success || s.step_count >= config_.max_episode_length;
    out.observation = observe();
    done_ = out.done;
    return out;
  }

  PlannerObservation observe() const {
    if (!state_) throw std::logic_error("observe: environment has not been reset");
    return build_observation(state_->phase, state_->goal_xy, *map_, model_);
  }

  bool has_state() const { return state_.has_value(); }
  bool done() const { return done_; }
  const PlannerState& state() const {
    if (!state_) throw std::logic_error("environment has not been reset");
    return *state_;
  }
  void set_state(PlannerState s, bool done = false) {
    state_ = std::move(s);
    done_ = done;
  }
  const std::optional<SupportPhase>& last_candidate() const { return last_candidate_; }

  const HeightMap& map() const { return *map_; }
  std::shared_ptr<const HeightMap> map_ptr() const { return map_; }
  const RobotModel& model() const { return model_; }
  const EnvRegions& regions() const { return regions_; }
  const EnvConfig& config() const { return config_; }

 private:
  std::shared_ptr<const HeightMap> map_;
  RobotModel model_;
  EnvRegions regions_;
  EnvConfig config_;
  std::optional<PlannerState> state_;
  std::optional<SupportPhase> last_candidate_;
  bool done_ = true;
};

}  // namespace gaitplan
