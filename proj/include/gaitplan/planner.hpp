#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gaitplan/env.hpp"

namespace gaitplan {

/// Half-widths of the uniform proposal box per action group; 1 spans the clipped range.
struct ProposalBox {
  double rotation = 1.0;
  double base = 1.0;
  double velocity = 1.0;
  double feet = 1.0;
  double timing = 1.0;

  bool valid() const {
    for (double v : {rotation, base, velocity, feet, timing})
      if (!(v > 0.0 && v <= 1.0)) return false;
    return true;
  }
};

/// Receding-horizon random shooting over planner actions.
struct ShootingConfig {
  int n_candidates = 256;
  int horizon = 2;
  /// Uniform continuations averaged per candidate beyond its first step.
  int n_rollouts = 1;
  double discount = 0.99;
  std::uint64_t seed = 0;
  double stance_bias = 0.25;  // probability of proposing a full-stance contact code
  ProposalBox proposal;
  int n_threads = 1;

  void validate() const {
    if (n_candidates < 1) throw std::invalid_argument("ShootingConfig: n_candidates must be >= 1");
    if (horizon < 1) throw std::invalid_argument("ShootingConfig: horizon must be >= 1");
    if (n_rollouts < 1) throw std::invalid_argument("ShootingConfig: n_rollouts must be >= 1");
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("ShootingConfig: discount must lie in [0, 1)");
    if (!(stance_bias >= 0.0 && stance_bias <= 1.0)) throw std::invalid_argument("ShootingConfig: stance_bias must lie in [0, 1]");
    if (!proposal.valid()) throw std::invalid_argument("ShootingConfig: proposal half-widths must lie in (0, 1]");
  }
};

/// Narrowed proposals and averaged continuations used for the ESR runs. Uniform
/// proposals over the whole clipped box rarely survive two transitions.
inline ShootingConfig tuned_shooting_config() {
  ShootingConfig c;
  c.n_candidates = 64;
  c.horizon = 3;
  c.n_rollouts = 2;
  c.proposal = {0.3, 0.5, 0.1, 0.5, 0.2};
  return c;
}

struct PhasePlan {
  std::vector<SupportPhase> phases;  // initial phase followed by each committed phase
  std::string terrain_id;
  Vec2 goal = Vec2::Zero();
  std::uint64_t seed = 0;
  std::vector<double> rewards;       // one per committed transition
};

struct EpisodeRecord {
  int step = 0;
  PlannerAction action;
  SupportPhase phase;  // committed phase, or the frozen one on failure
  double reward = 0.0;
  RewardTerms terms;
  TerminationReason reason = TerminationReason::None;
  bool success = false;
};

struct EpisodeLog {
  std::string terrain_id;
  std::uint64_t seed = 0;
  Vec2 goal = Vec2::Zero();
  SupportPhase initial;
  std::vector<EpisodeRecord> records;

  bool success() const { return !records.empty() && records.back().success; }
};

/// Uniform action over the clipped box; the contact code is drawn full-stance
/// with probability stance_bias, otherwise one of the four single-swing codes.
inline PlannerAction sample_action(std::mt19937_64& rng, double stance_bias, const ProposalBox& box = {}) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PlannerAction::Flat f;
  for (int i = 0; i < PlannerAction::kDim; ++i) f[i] = sym(rng);
  PlannerAction a = PlannerAction::from_flat(f);
  a.a_R *= box.rotation;
  a.a_B *= box.base;
  a.a_v *= box.velocity;
  a.a_F *= box.feet;
  a.a_t *= box.timing;
  const bool stance = unit(rng) < stance_bias;
  const int code = (stance ? 4 : 0) + static_cast<int>(std::uniform_int_distribution<int>(0, 3)(rng));
  for (int bit = 0; bit < 3; ++bit) {
    const double mag = 0.5 + 0.5 * unit(rng);
    a.a_c[bit] = ((code >> (2 - bit)) & 1) ? mag : -mag;
  }
  return a;
}

struct Proposal {
  PlannerAction action;
  int index = 0;
  double score = 0.0;
};

namespace detail {

/// depth: most steps committed by any rollout of the candidate, first step included.
struct RolloutScore {
  int depth = 0;
  double value = 0.0;
};

inline RolloutScore rollout_score(const GaitPlannerEnv& env, const PlannerAction& first, std::uint64_t seed,
                                  const ShootingConfig& cfg) {
  std::mt19937_64 rng(seed);
  GaitPlannerEnv head = env;
  const StepOutcome o1 = head.step(first);
  if (o1.terminated) return {0, o1.reward};
  if (o1.done || cfg.horizon == 1) return {cfg.horizon, o1.reward};
  double tail = 0.0;
  int depth = 1;
  for (int r = 0; r < cfg.n_rollouts; ++r) {
    GaitPlannerEnv sim = head;
    double disc = 1.0, ret = 0.0;
    int h = 1;
    bool alive = true;
    for (; h < cfg.horizon && !sim.done(); ++h) {
      disc *= cfg.discount;
      const StepOutcome o = sim.step(sample_action(rng, cfg.stance_bias, cfg.proposal));
      ret += disc * o.reward;
      if (o.terminated) {
        alive = false;
        break;
      }
    }
    depth = std::max(depth, alive ? cfg.horizon : h);
    tail += ret;
  }
  return {depth, o1.reward + tail / cfg.n_rollouts};
}

/// Deeper survival wins; the discounted return only ranks candidates of equal depth.
inline bool better(const RolloutScore& a, const RolloutScore& b) {
  if (a.depth != b.depth) return a.depth > b.depth;
  return a.value > b.value;
}

}  // namespace detail

/// Picks the first action of the best candidate: deepest survival over its
/// rollouts first, then the mean discounted return. Candidates whose first
/// step terminates score the terminal reward and are only chosen when every
/// candidate terminates. Ties go to the lowest candidate index; evaluation
/// order never changes the result.
inline Proposal propose_action(const GaitPlannerEnv& env, const ShootingConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (env.done()) throw std::logic_error("propose_action: environment episode is finished");
  const int n = cfg.n_candidates;
  std::vector<PlannerAction> actions(n);
  std::vector<std::uint64_t> seeds(n);
  for (int i = 0; i < n; ++i) {
    actions[i] = sample_action(rng, cfg.stance_bias, cfg.proposal);
    seeds[i] = rng();
  }
  std::vector<detail::RolloutScore> scores(n);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) scores[i] = detail::rollout_score(env, actions[i], seeds[i], cfg);
  };
  const int threads = std::max(1, std::min(cfg.n_threads, n));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, n * t / threads, n * (t + 1) / threads);
  }
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (detail::better(scores[i], scores[best])) best = i;
  return {actions[best], best, scores[best].value};
}

struct PlanResult {
  PhasePlan plan;
  EpisodeLog log;
};

/// Rolls the shooting planner out from a freshly reset environment.
inline PlanResult plan_to_goal(GaitPlannerEnv& env, const ShootingConfig& cfg, int max_steps = 50,
                               std::uint64_t episode_seed = 0) {
  if (!env.has_state() || env.done()) throw std::logic_error("plan_to_goal: environment must be freshly reset");
  std::mt19937_64 rng(cfg.seed);
  PlanResult out;
  const PlannerState& s0 = env.state();
  out.plan.terrain_id = out.log.terrain_id = env.regions().name;
  out.plan.goal = out.log.goal = s0.goal_xy;
  out.plan.seed = out.log.seed = episode_seed;
  out.plan.phases.push_back(s0.phase);
  out.log.initial = s0.phase;

  for (int step = 0; step < max_steps && !env.done(); ++step) {
    const Proposal p = propose_action(env, cfg, rng);
    const StepOutcome o = env.step(p.action);
    EpisodeRecord rec;
    rec.step = step;
    rec.action = p.action;
    rec.phase = env.state().phase;
    rec.reward = o.reward;
    rec.terms = o.terms;
    rec.reason = o.reason;
    rec.success = o.success;
    out.log.records.push_back(rec);
    if (!o.terminated) {
      out.plan.phases.push_back(env.state().phase);
      out.plan.rewards.push_back(o.reward);
    }
  }
  return out;
}

/// Re-checks every consecutive pair of a plan; one reason per transition.
inline std::vector<TerminationReason> revalidate_plan(const PhasePlan& plan, const HeightMap& map,
                                                      const RobotModel& model, const EnvConfig& cfg = {}) {
  std::vector<TerminationReason> out;
  for (std::size_t i = 1; i < plan.phases.size(); ++i) {
    PlannerState s;
    s.phase = plan.phases[i - 1];
    s.goal_xy = plan.goal;
    out.push_back(check_terminations(s, plan.phases[i], map, model, cfg));
  }
  return out;
}

struct EsrReport {
  int n_episodes = 0;
  int successes = 0;
  double esr = 0.0;
  double mean_steps = 0.0;
  /// Episode endings keyed by "success", "max_length" or a termination reason.
  std::map<std::string, int> histogram;
  std::vector<int> steps;
  std::vector<bool> succeeded;
};

/// Seed of episode i under a master seed (SplitMix64 finalizer).
inline std::uint64_t episode_seed(std::uint64_t master, std::uint64_t i) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using EnvFactory = std::function<GaitPlannerEnv()>;

/// Runs n_episodes independently seeded planner episodes. Episodes may run on
/// several threads; the report only depends on master_seed.
inline EsrReport evaluate_esr(const EnvFactory& make_env, const ShootingConfig& cfg, int n_episodes,
                              std::uint64_t master_seed = 0, int n_threads = 1,
                              const std::function<void(int, const PlanResult&)>& on_episode = {}) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate_esr: n_episodes must be >= 1");
  std::vector<PlanResult> results(n_episodes);
  auto run = [&](int i) {
    GaitPlannerEnv env = make_env();
    const std::uint64_t seed = episode_seed(master_seed, static_cast<std::uint64_t>(i));
    env.reset(seed);
    ShootingConfig c = cfg;
    c.seed = episode_seed(cfg.seed ^ 0x5DEECE66DULL, seed);
    results[i] = plan_to_goal(env, c, env.config().max_episode_length, seed);
  };
  const int threads = std::max(1, std::min(n_threads, n_episodes));
  if (threads == 1) {
    for (int i = 0; i < n_episodes; ++i) {
      run(i);
      if (on_episode) on_episode(i, results[i]);
    }
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int i = t; i < n_episodes; i += threads) run(i);
      });
    pool.clear();
    if (on_episode)
      for (int i = 0; i < n_episodes; ++i) on_episode(i, results[i]);
  }

  EsrReport rep;
  rep.n_episodes = n_episodes;
  double total_steps = 0.0;
  for (const auto& r : results) {
    const auto& recs = r.log.records;
    const int committed = static_cast<int>(r.plan.phases.size()) - 1;
    total_steps += committed;
    rep.steps.push_back(committed);
    const bool ok = r.log.success();
    rep.succeeded.push_back(ok);
    if (ok) {
      ++rep.successes;
      ++rep.histogram["success"];
    } else if (!recs.empty() && recs.back().reason != TerminationReason::None) {
      ++rep.histogram[to_string(recs.back().reason)];
    } else {
      ++rep.histogram["max_length"];
    }
  }
  rep.esr = static_cast<double>(rep.successes) / n_episodes;
  rep.mean_steps = total_steps / n_episodes;
  return rep;
}

}  // namespace gaitplan
