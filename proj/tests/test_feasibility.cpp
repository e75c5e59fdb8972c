#include <gtest/gtest.h>

#include "support.hpp"

using namespace gaitplan;
using namespace gaitplan::testing;

TEST(Bezier, BasisMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, 5> P;
  for (auto& p : P) p = u(rng);
  auto curve = [&](double s) {
    const auto w = bezier::basis(s);
    double v = 0.0;
    for (int j = 0; j < 5; ++j) v += w[j] * P[j];
    return v;
  };
  const double h = 1e-4;
  for (double s = 0.05; s < 0.96; s += 0.05) {
    const auto w = bezier::basis(s);
    double sum = 0.0;
    for (double x : w) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-14);
    const auto dd = bezier::basis_dd(s);
    double v = 0.0;
    for (int j = 0; j < 5; ++j) v += dd[j] * P[j];
    const double fd = (curve(s + h) - 2.0 * curve(s) + curve(s - h)) / (h * h);
    EXPECT_NEAR(v, fd, 1e-5) << "s=" << s;
  }
  // the curve interpolates its end control points
  const auto w0 = bezier::basis(0.0), w1 = bezier::basis(1.0);
  EXPECT_EQ(w0[0], 1.0);
  EXPECT_EQ(w1[4], 1.0);
}

TEST(TransitionLp, LayoutForTwoSamples) {
  const RobotModel model;
  const SupportPhase p = nominal_stance(model, {0, 0}, 0);
  const TransitionLp lp = assemble_transition_lp({p, p, model, 1.0, 2});
  EXPECT_EQ(lp.lp.n_vars, 3 + 2 * 4 * 3);
  EXPECT_EQ(lp.lp.A_eq.rows(), 6 * 2);
  const auto count = [&](RowKind k) { return std::count(lp.in_kinds.begin(), lp.in_kinds.end(), k); };
  EXPECT_EQ(count(RowKind::FrictionFace), 4 * 2 * 4);
  EXPECT_EQ(count(RowKind::NormalCap), 2 * 4);
  EXPECT_EQ(count(RowKind::Kinematic), 6 * 2 * 4);
  // unilateral normal force lives in the variable bounds
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < kNumFeet; ++i) EXPECT_EQ(lp.lp.lower[lp.layout.force_column[k][i] + 2], 0.0);
}

TEST(TransitionLp, SupportSwitchesAtConfiguredFraction) {
  const RobotModel model;
  SupportPhase a = nominal_stance(model, {0, 0}, 0);
  SupportPhase b = a;
  b.c_F = {true, true, false, true};
  TransitionProblem prob{a, b, model, 1.0, 8};
  const TransitionLp lp = assemble_transition_lp(prob);
  EXPECT_EQ(lp.lp.n_vars, 3 + 4 * 12 + 4 * 9);  // samples 0..3 before s = 0.5
  prob.switch_fraction = 1.0;
  EXPECT_EQ(assemble_transition_lp(prob).lp.n_vars, 3 + 7 * 12 + 9);
  prob.switch_fraction = 0.0;
  EXPECT_THROW(assemble_transition_lp(prob), std::invalid_argument);
}

TEST(TransitionLp, PinnedStaticStanceBalancesWeight) {
  const RobotModel model;
  const SupportPhase p = nominal_stance(model, {1.0, 2.0}, 0.3);
  const TransitionLp lp = assemble_transition_lp({p, p, model, 1.0, 8, p.r_B});
  for (int k = 0; k < 8; ++k)
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(lp.lp.b_eq[6 * k + d], -model.mass * model.gravity[d], 1e-12);
  EXPECT_EQ(lp.lp.lower.head<3>(), lp.lp.upper.head<3>());
  EXPECT_LT(lp.lp.lower.head<3>().norm(), 1e-12);  // c0 is the frame origin
  EXPECT_TRUE(transition_lp_feasible(lp));
}

TEST(TransitionLp, EmptySupportIsInfeasibleWithoutSolve) {
  const RobotModel model;
  SupportPhase a = nominal_stance(model, {0, 0}, 0);
  a.c_F = {false, false, false, false};
  const TransitionLp lp = assemble_transition_lp({a, a, model, 1.0, 4});
  EXPECT_TRUE(lp.empty_support);
  EXPECT_FALSE(transition_lp_feasible(lp));
}

TEST(Feasibility, Examples) {
  const RobotModel model;
  const SupportPhase p = nominal_stance(model, {0, 0}, 0);
  EXPECT_TRUE(transition_feasible(p, p, model));

  SupportPhase far = nominal_stance(model, {10.0, 0}, 0);
  SupportPhase src = p;
  src.t_S = 0.5;
  EXPECT_FALSE(transition_feasible(src, far, model));

  // pinned static stance with the CoM 0.2 m outside the hull
  SupportPhase out = p;
  out.r_B.x() = 0.33 + 0.2;
  EXPECT_FALSE(pinned_static_feasible(out, static_oracle_model()));
}

TEST(Feasibility, StaticOracleAgreement) {
  const RobotModel model = static_oracle_model();
  std::mt19937_64 rng(2024);
  int inside = 0;
  for (int i = 0; i < 300; ++i) {
    const StaticCase c = random_static_case(rng, model, 0.01);
    inside += c.com_inside;
    ASSERT_EQ(pinned_static_feasible(c.phase, model), c.com_inside) << "case " << i;
  }
  EXPECT_GT(inside, 60);
  EXPECT_LT(inside, 240);
}

TEST(Feasibility, SmallStepsFeasibleLargeInfeasible) {
  const RobotModel model;
  const SupportPhase a = nominal_stance(model, {0, 0}, 0);
  SupportPhase b = a;
  b.r_B.x() += 0.05;
  EXPECT_TRUE(transition_feasible(a, b, model));
  b.r_B.x() = 0.3;  // feet stay behind, hind legs overreach
  EXPECT_FALSE(transition_feasible(a, b, model));
}

TEST(Feasibility, RigidMotionInvariance) {
  const RobotModel model;
  const auto map = flat_map(30.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int feasible = 0;
  for (int i = 0; i < 150; ++i) {
    SupportPhase a = nominal_stance(model, {u(rng), u(rng)}, kPi * u(rng));
    PlannerAction::Flat f;
    for (int j = 0; j < PlannerAction::kDim; ++j) f[j] = 0.4 * u(rng);
    const SupportPhase b = apply_action(a, PlannerAction::from_flat(f), *map, model);
    const Rigid g{kPi * u(rng), Vec2(5 * u(rng), 5 * u(rng))};
    const bool v = transition_feasible(a, b, model);
    feasible += v;
    ASSERT_EQ(transition_feasible(g.apply(a), g.apply(b), model), v) << "trial " << i;
  }
  EXPECT_GT(feasible, 10);
  EXPECT_LT(feasible, 140);
}
