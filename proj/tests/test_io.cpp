#include <gtest/gtest.h>

#include "gaitplan/io.hpp"
#include "support.hpp"

using namespace gaitplan;
using namespace gaitplan::testing;

namespace {

// Runs f and returns the SchemaError message, or "" when nothing was thrown.
template <class F>
std::string schema_error(F&& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

TerrainScenario composite_scenario() {
  TerrainScenario sc;
  sc.kind = ScenarioKind::Composite;
  sc.seed = 42;
  sc.params.stone_jitter = 0.03;
  sc.params.features = {FlatSection{2.0}, Gap{0.3, 1.0}, FlatSection{1.0}, SteppingStones{0.3, 0.1, 3},
                        Stairs{-0.1, 0.3, 2}};
  sc.spawn_region = {{0.5, -0.5}, {1.0, 0.5}};
  sc.goal_region = {{6.0, -0.5}, {7.0, 0.5}};
  return sc;
}

}  // namespace

TEST(Io, HeightMapRoundTripIsByteExact) {
  const HeightMap m = generate(composite_scenario());
  const std::string text = io::save_heightmap(m);
  const HeightMap back = io::load_heightmap(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(io::save_heightmap(back), text);

  // awkward values survive: shortest round-trip formatting
  HeightMap odd = HeightMap::constant({0.1, -1.0 / 3.0}, 0.04, 2, 3, 0.0);
  odd.at(0, 1) = 1e-300;
  odd.at(1, 2) = -0.1 - 0.2;
  EXPECT_EQ(io::load_heightmap(io::save_heightmap(odd)), odd);
}

TEST(Io, MapFileRoundTrip) {
  io::MapFile f;
  f.map = generate(composite_scenario());
  f.terrain_id = "Composite-42";
  f.spawn_region = Rect{{0.5, -0.5}, {1.0, 0.5}};
  const std::string text = io::save_map(f);
  const io::MapFile back = io::load_map(text);
  EXPECT_EQ(back, f);
  EXPECT_FALSE(back.goal_region.has_value());
  EXPECT_EQ(io::save_map(back), text);
}

TEST(Io, ScenarioRoundTripAndDefaults) {
  const TerrainScenario sc = composite_scenario();
  const Json j = io::to_json(sc);
  const TerrainScenario back = io::scenario_from_json(j);
  EXPECT_EQ(io::to_json(back).dump(), j.dump());
  EXPECT_EQ(generate(back), generate(sc));

  const TerrainScenario minimal =
      io::scenario_from_json(Json::parse(R"({"schema":"gaitplan.scenario","version":1,"kind":"FlatWorld"})"));
  EXPECT_EQ(minimal.kind, ScenarioKind::FlatWorld);
  EXPECT_EQ(minimal.params.side_length, ScenarioParams{}.side_length);

  const std::string msg = schema_error([] {
    io::scenario_from_json(Json::parse(
        R"({"schema":"gaitplan.scenario","version":1,"kind":"Composite","params":{"features":[{"type":"gap"}]}})"));
  });
  EXPECT_EQ(msg.rfind("scenario.params.features[0].width_m: missing field", 0), 0u) << msg;
}

TEST(Io, RobotModelRoundTrip) {
  RobotModel m;
  m.mass = 41.5;
  m.kinematic_box[2].lo.z() = -0.7;
  const Json j = io::to_json(m);
  const RobotModel back = io::robot_model_from_json(j);
  EXPECT_EQ(io::to_json(back).dump(), j.dump());
  Json bad = j;
  bad["mass_kg"] = -1.0;
  EXPECT_NE(schema_error([&] { io::robot_model_from_json(bad); }).find("mass"), std::string::npos);
}

TEST(Io, PhaseRoundTrip) {
  const RobotModel model;
  SupportPhase p = nominal_stance(model, {0.123456789, -2.5}, 0.77);
  p.v_B = Vec3(0.1, -0.3, 0.0);
  p.c_F = {true, false, true, true};
  p.t_E = 0.1;
  p.t_S = 1.9;
  const std::string text = io::save_phase(p);
  EXPECT_EQ(io::load_phase(text), p);
  EXPECT_EQ(io::save_phase(io::load_phase(text)), text);
}

TEST(Io, EpisodeLogRoundTrip) {
  GaitPlannerEnv env = flat_env();
  env.reset(5);
  ShootingConfig cfg = tuned_shooting_config();
  cfg.n_candidates = 8;
  cfg.horizon = 2;
  const PlanResult r = plan_to_goal(env, cfg, 6, 5);
  const std::string text = io::save_episode_log(r.log);
  // one header line plus one line per step
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(r.log.records.size() + 1));
  const EpisodeLog back = io::load_episode_log(text);
  EXPECT_EQ(io::save_episode_log(back), text);
  EXPECT_EQ(back.records.size(), r.log.records.size());
  EXPECT_EQ(back.initial, r.log.initial);
}

TEST(Io, TrackingLogRoundTrip) {
  TrackingLog log;
  TrackingRecord rec;
  rec.desired_contacts = {true, false, true, true};
  rec.desired_footholds[1] = Vec3(0.3, 0.2, 0.01);
  rec.measured_feet[1] = Vec3(0.31, 0.2, 0.0);
  log.records = {rec, rec};
  log.touchdowns = {{1, Vec2(0.31, 0.2), Vec2(0.3, 0.2)}};
  const std::string text = io::save_tracking_log(log);
  EXPECT_EQ(io::load_tracking_log(text), log);
  EXPECT_EQ(io::save_tracking_log(io::load_tracking_log(text)), text);
}

TEST(Io, MissingFieldsNameThePath) {
  Json j = io::to_json(HeightMap::constant({0, 0}, 0.1, 2, 2, 0.0));
  j.erase("resolution_m");
  EXPECT_EQ(schema_error([&] { io::heightmap_from_json(j); }), "heightmap.resolution_m: missing field");

  io::MapFile f;
  f.map = HeightMap::constant({0, 0}, 0.1, 2, 2, 0.0);
  Json mj = io::to_json(f);
  mj["heightmap"].erase("n_cols");
  EXPECT_EQ(schema_error([&] { io::mapfile_from_json(mj); }), "map.heightmap.n_cols: missing field");

  Json pj = Json::parse(io::save_phase(SupportPhase{}));
  pj["phase"].erase("t_S_s");
  EXPECT_EQ(schema_error([&] { io::load_phase(pj.dump()); }), "phase.phase.t_S_s: missing field");

  const std::string log = "{\"schema\":\"gaitplan.episode_log\",\"version\":1}\n";
  EXPECT_EQ(schema_error([&] { io::load_episode_log(log); }), "episode_log[0].terrain_id: missing field");
}

TEST(Io, HeaderChecks) {
  Json j = io::to_json(HeightMap{});
  j["version"] = 2;
  EXPECT_NE(schema_error([&] { io::heightmap_from_json(j); }).find("heightmap.version"), std::string::npos);
  j["version"] = 1;
  j["schema"] = "gaitplan.plan";
  EXPECT_NE(schema_error([&] { io::heightmap_from_json(j); }).find("heightmap.schema"), std::string::npos);
  EXPECT_NE(schema_error([] { io::load_heightmap("{not json"); }).find("invalid JSON"), std::string::npos);
  Json wrong = io::to_json(HeightMap::constant({0, 0}, 0.1, 2, 2, 0.0));
  wrong["elevations_m"].push_back(1.0);
  EXPECT_FALSE(schema_error([&] { io::heightmap_from_json(wrong); }).empty());
  wrong = io::to_json(HeightMap{});
  wrong["n_rows"] = "one";
  EXPECT_EQ(schema_error([&] { io::heightmap_from_json(wrong); }), "heightmap.n_rows: expected an integer");
}

TEST(Io, PgmExport) {
  HeightMap m = HeightMap::constant({0, 0}, 0.5, 2, 3, 0.0);
  m.at(1, 0) = 1.0;  // top-left pixel, since the first image row is the largest y
  m.at(0, 2) = 0.5;
  const auto [pgm, side] = io::export_pgm(m);
  const std::string head = "P5\n3 2\n65535\n";
  ASSERT_EQ(pgm.substr(0, head.size()), head);
  ASSERT_EQ(pgm.size(), head.size() + 12);
  auto px = [&, &pgm = pgm](int i) {
    return (static_cast<unsigned char>(pgm[head.size() + 2 * i]) << 8) |
           static_cast<unsigned char>(pgm[head.size() + 2 * i + 1]);
  };
  EXPECT_EQ(px(0), 65535);
  EXPECT_EQ(px(1), 0);
  EXPECT_EQ(px(5), 32768);
  EXPECT_EQ(side["min_elevation_m"], 0.0);
  EXPECT_EQ(side["max_elevation_m"], 1.0);
  EXPECT_EQ(side["first_image_row"], "max_y");
}
