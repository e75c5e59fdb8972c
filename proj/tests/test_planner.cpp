#include <gtest/gtest.h>

#include "gaitplan/io.hpp"
#include "support.hpp"

using namespace gaitplan;
using namespace gaitplan::testing;

namespace {

ShootingConfig small_config() {
  ShootingConfig c = tuned_shooting_config();
  c.n_candidates = 16;
  c.horizon = 2;
  c.n_rollouts = 1;
  return c;
}

}  // namespace

TEST(Sampling, RespectsBoxAndStanceBias) {
  std::mt19937_64 rng(1);
  const ProposalBox box{0.3, 0.5, 0.1, 0.5, 0.2};
  int stance = 0;
  for (int i = 0; i < 4000; ++i) {
    const PlannerAction a = sample_action(rng, 0.25, box);
    ASSERT_TRUE(a.in_range());
    ASSERT_LE(std::abs(a.a_R), 0.3);
    ASSERT_LE(a.a_B.cwiseAbs().maxCoeff(), 0.5);
    ASSERT_LE(a.a_v.cwiseAbs().maxCoeff(), 0.1);
    ASSERT_LE(a.a_F.cwiseAbs().maxCoeff(), 0.5);
    ASSERT_LE(a.a_t.cwiseAbs().maxCoeff(), 0.2);
    ASSERT_GE(a.a_c.cwiseAbs().minCoeff(), 0.5);
    stance += count_contacts(decode_contacts(a.a_c)) == 4;
  }
  EXPECT_NEAR(stance / 4000.0, 0.25, 0.03);
}

TEST(Shooting, SingleCandidateIsTheSample) {
  GaitPlannerEnv env = flat_env();
  env.reset(4);
  ShootingConfig cfg = small_config();
  cfg.n_candidates = 1;
  std::mt19937_64 rng(99), twin(99);
  const Proposal p = propose_action(env, cfg, rng);
  EXPECT_EQ(p.index, 0);
  EXPECT_EQ(p.action, sample_action(twin, cfg.stance_bias, cfg.proposal));
}

TEST(Shooting, RankingAndTies) {
  using detail::RolloutScore;
  EXPECT_TRUE(detail::better({2, -5.0}, {1, 3.0}));
  EXPECT_TRUE(detail::better({1, 0.5}, {1, 0.4}));
  EXPECT_FALSE(detail::better({1, 0.5}, {1, 0.5}));  // equal: the earlier index stays
}

TEST(Shooting, ThreadCountDoesNotChangeChoice) {
  GaitPlannerEnv env = flat_env();
  env.reset(7);
  ShootingConfig cfg = small_config();
  std::mt19937_64 r1(5), r2(5);
  const Proposal a = propose_action(env, cfg, r1);
  cfg.n_threads = 3;
  const Proposal b = propose_action(env, cfg, r2);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.action, b.action);
  EXPECT_EQ(a.score, b.score);
}

TEST(Shooting, ConfigValidation) {
  ShootingConfig c;
  c.horizon = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.proposal.feet = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.discount = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Shooting, TurnsTowardGoalBehind) {
  const RobotModel model;
  GaitPlannerEnv env = flat_env();
  ShootingConfig cfg = small_config();
  cfg.n_candidates = 64;
  int toward = 0;
  for (int seed = 0; seed < 100; ++seed) {
    // goal behind and to the left
    place(env, nominal_stance(model, {0, 0}, 0), Vec2(-3.0, 1.0));
    std::mt19937_64 rng(seed);
    toward += propose_action(env, cfg, rng).action.a_R > 0.0;
  }
  EXPECT_GT(toward, 50);
}

TEST(Plan, RevalidatesAndRoundTrips) {
  GaitPlannerEnv env = flat_env();
  env.reset(11);
  const PlanResult r = plan_to_goal(env, small_config(), 12, 11);
  ASSERT_GE(r.plan.phases.size(), 2u);
  for (TerminationReason t : revalidate_plan(r.plan, env.map(), env.model())) EXPECT_EQ(t, TerminationReason::None);
  const PhasePlan back = io::load_plan(io::save_plan(r.plan));
  EXPECT_EQ(io::save_plan(back), io::save_plan(r.plan));
  for (TerminationReason t : revalidate_plan(back, env.map(), env.model())) EXPECT_EQ(t, TerminationReason::None);
  EXPECT_EQ(r.plan.rewards.size() + 1, r.plan.phases.size());
}

TEST(Plan, DeterministicLogs) {
  auto run = [] {
    GaitPlannerEnv env = flat_env();
    env.reset(21);
    ShootingConfig cfg = small_config();
    cfg.seed = 21;
    return io::save_episode_log(plan_to_goal(env, cfg, 10, 21).log);
  };
  EXPECT_EQ(run(), run());
}

TEST(Plan, UsesStanceAndSwingCodes) {
  GaitPlannerEnv env = flat_env();
  int stance = 0, swing = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    env.reset(seed);
    ShootingConfig cfg = small_config();
    cfg.seed = seed;
    for (const auto& rec : plan_to_goal(env, cfg, 10, seed).log.records)
      (count_contacts(decode_contacts(rec.action.a_c)) == 4 ? stance : swing)++;
  }
  EXPECT_GT(stance, 0);
  EXPECT_GT(swing, 0);
}

TEST(Esr, ReportIsConsistentAndSeedStable) {
  const EnvFactory make = [] {
    EnvConfig cfg;
    cfg.max_episode_length = 5;
    return flat_env(cfg);
  };
  ShootingConfig cfg = small_config();
  cfg.n_candidates = 8;
  const EsrReport a = evaluate_esr(make, cfg, 4, 3);
  const EsrReport b = evaluate_esr(make, cfg, 4, 3, 2);
  EXPECT_EQ(io::to_json(a).dump(), io::to_json(b).dump());
  EXPECT_GE(a.esr, 0.0);
  EXPECT_LE(a.esr, 1.0);
  EXPECT_LE(a.mean_steps, 5.0);
  int total = 0;
  for (const auto& [k, v] : a.histogram) total += v;
  EXPECT_EQ(total, 4);
  EXPECT_DOUBLE_EQ(a.esr, static_cast<double>(a.successes) / 4);
  EXPECT_THROW(evaluate_esr(make, cfg, 0), std::invalid_argument);
}

TEST(Esr, NearGoalEpisodesAllSucceed) {
  // goals inside the 0.5 m vicinity of the spawn square: one feasible step suffices
  const EnvFactory make = [] {
    return GaitPlannerEnv(flat_map(), RobotModel{}, {"near", {{-0.1, -0.1}, {0.1, 0.1}}, {{-0.1, -0.1}, {0.1, 0.1}}});
  };
  const EsrReport r = evaluate_esr(make, small_config(), 5, 1);
  EXPECT_EQ(r.esr, 1.0);
  EXPECT_EQ(r.histogram.at("success"), 5);
}
