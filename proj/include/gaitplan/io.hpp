#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitplan/env.hpp"
#include "gaitplan/metrics.hpp"
#include "gaitplan/planner.hpp"

namespace gaitplan {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Malformed or incomplete input. The message starts with the JSON path of the offending field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline Json parse(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(what + ": invalid JSON (" + e.what() + ")");
  }
}

namespace detail {

inline const Json& need(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key + ": missing field");
  return *it;
}

template <class T>
T as(const Json& j, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw SchemaError(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw SchemaError(path + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw SchemaError(path + ": expected a string");
    }
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& path) {
  return as<T>(need(j, key, path), path + "." + key);
}

inline std::vector<double> numbers(const Json& j, const std::string& path, std::optional<std::size_t> size = {}) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  if (size && j.size() != *size)
    throw SchemaError(path + ": expected " + std::to_string(*size) + " entries, got " + std::to_string(j.size()));
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as<double>(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed(const Json& j, const std::string& path) {
  const auto v = numbers(j, path, N);
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_field(const Json& j, const std::string& key, const std::string& path) {
  return fixed<N>(need(j, key, path), path + "." + key);
}

template <class Derived>
Json array(const Eigen::MatrixBase<Derived>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v.derived().data()[i]);
  return a;
}

inline void check_header(const Json& j, const std::string& schema, const std::string& path) {
  const auto s = get<std::string>(j, "schema", path);
  if (s != schema) throw SchemaError(path + ".schema: expected '" + schema + "', got '" + s + "'");
  const int v = get<int>(j, "version", path);
  if (v != kFormatVersion)
    throw SchemaError(path + ".version: unsupported version " + std::to_string(v) + " (reader understands " +
                      std::to_string(kFormatVersion) + ")");
}

inline Json header(const std::string& schema) {
  Json j;
  j["schema"] = schema;
  j["version"] = kFormatVersion;
  return j;
}

inline std::string dump(const Json& j) { return j.dump(1) + "\n"; }

}  // namespace detail

// ---- rectangles --------------------------------------------------------------

inline Json to_json(const Rect& r) {
  Json j;
  j["min_xy_m"] = detail::array(r.min);
  j["max_xy_m"] = detail::array(r.max);
  return j;
}

inline Rect rect_from_json(const Json& j, const std::string& path) {
  Rect r{detail::fixed_field<2>(j, "min_xy_m", path), detail::fixed_field<2>(j, "max_xy_m", path)};
  if (!r.valid()) throw SchemaError(path + ": min_xy_m exceeds max_xy_m");
  return r;
}

// ---- height maps -------------------------------------------------------------

/// A height map plus the episode regions it was generated with.
struct MapFile {
  HeightMap map;
  std::string terrain_id = "terrain";
  std::optional<Rect> spawn_region;
  std::optional<Rect> goal_region;

  bool operator==(const MapFile& o) const {
    auto same = [](const std::optional<Rect>& a, const std::optional<Rect>& b) {
      return a.has_value() == b.has_value() && (!a || (a->min == b->min && a->max == b->max));
    };
    return map == o.map && terrain_id == o.terrain_id && same(spawn_region, o.spawn_region) &&
           same(goal_region, o.goal_region);
  }
};

inline Json to_json(const HeightMap& m) {
  Json j = detail::header("gaitplan.heightmap");
  j["origin_xy_m"] = detail::array(m.origin());
  j["resolution_m"] = m.resolution();
  j["n_rows"] = m.n_rows();
  j["n_cols"] = m.n_cols();
  Json e = Json::array();
  for (double z : m.elevations()) e.push_back(z);
  j["elevations_m"] = std::move(e);
  return j;
}

inline HeightMap heightmap_from_json(const Json& j, const std::string& path = "heightmap") {
  detail::check_header(j, "gaitplan.heightmap", path);
  const Vec2 origin = detail::fixed_field<2>(j, "origin_xy_m", path);
  const double res = detail::get<double>(j, "resolution_m", path);
  const int rows = detail::get<int>(j, "n_rows", path);
  const int cols = detail::get<int>(j, "n_cols", path);
  auto elev = detail::numbers(detail::need(j, "elevations_m", path), path + ".elevations_m");
  try {
    return HeightMap(origin, res, rows, cols, std::move(elev));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline Json to_json(const MapFile& f) {
  Json j = detail::header("gaitplan.map");
  j["terrain_id"] = f.terrain_id;
  if (f.spawn_region) j["spawn_region"] = to_json(*f.spawn_region);
  if (f.goal_region) j["goal_region"] = to_json(*f.goal_region);
  j["heightmap"] = to_json(f.map);
  return j;
}

inline MapFile mapfile_from_json(const Json& j, const std::string& path = "map") {
  detail::check_header(j, "gaitplan.map", path);
  MapFile f;
  f.terrain_id = detail::get<std::string>(j, "terrain_id", path);
  if (j.contains("spawn_region")) f.spawn_region = rect_from_json(j["spawn_region"], path + ".spawn_region");
  if (j.contains("goal_region")) f.goal_region = rect_from_json(j["goal_region"], path + ".goal_region");
  f.map = heightmap_from_json(detail::need(j, "heightmap", path), path + ".heightmap");
  return f;
}

inline std::string save_heightmap(const HeightMap& m) { return detail::dump(to_json(m)); }
inline HeightMap load_heightmap(const std::string& text) { return heightmap_from_json(parse(text, "heightmap")); }
inline std::string save_map(const MapFile& f) { return detail::dump(to_json(f)); }
inline MapFile load_map(const std::string& text) { return mapfile_from_json(parse(text, "map")); }

/// 16-bit binary PGM, top image row = largest y. Elevations are scaled linearly
/// between the map minimum and maximum; the returned sidecar records the scale.
inline std::pair<std::string, Json> export_pgm(const HeightMap& m) {
  const auto e = m.elevations();
  const auto [lo_it, hi_it] = std::minmax_element(e.begin(), e.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;
  std::string out = "P5\n" + std::to_string(m.n_cols()) + " " + std::to_string(m.n_rows()) + "\n65535\n";
  out.reserve(out.size() + 2 * e.size());
  for (int r = m.n_rows() - 1; r >= 0; --r)
    for (int c = 0; c < m.n_cols(); ++c) {
      const auto v = static_cast<std::uint16_t>(std::lround((m.at(r, c) - lo) / span * 65535.0));
      out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xFF));
    }
  Json side = detail::header("gaitplan.pgm_sidecar");
  side["min_elevation_m"] = lo;
  side["max_elevation_m"] = hi;
  side["origin_xy_m"] = detail::array(m.origin());
  side["resolution_m"] = m.resolution();
  side["n_rows"] = m.n_rows();
  side["n_cols"] = m.n_cols();
  side["first_image_row"] = "max_y";
  return {std::move(out), std::move(side)};
}

// ---- scenarios -----------------------------------------------------------------

inline ScenarioKind scenario_kind_from_string(const std::string& s, const std::string& path) {
  for (auto k : {ScenarioKind::FlatWorld, ScenarioKind::RandomStairs, ScenarioKind::Composite})
    if (s == to_string(k)) return k;
  throw SchemaError(path + ": unknown scenario kind '" + s + "'");
}

inline Json to_json(const TerrainFeature& f) {
  Json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FlatSection>) {
          j["type"] = "flat";
          j["length_m"] = v.length;
        } else if constexpr (std::is_same_v<T, Gap>) {
          j["type"] = "gap";
          j["width_m"] = v.width;
          j["depth_m"] = v.depth;
        } else if constexpr (std::is_same_v<T, SteppingStones>) {
          j["type"] = "stepping_stones";
          j["stone_size_m"] = v.stone_size;
          j["spacing_m"] = v.spacing;
          j["count"] = v.count;
        } else {
          j["type"] = "stairs";
          j["rise_m"] = v.rise;
          j["run_m"] = v.run;
          j["count"] = v.count;
        }
      },
      f);
  return j;
}

inline TerrainFeature feature_from_json(const Json& j, const std::string& path) {
  const auto type = detail::get<std::string>(j, "type", path);
  if (type == "flat") return FlatSection{detail::get<double>(j, "length_m", path)};
  if (type == "gap") return Gap{detail::get<double>(j, "width_m", path), detail::get<double>(j, "depth_m", path)};
  if (type == "stepping_stones")
    return SteppingStones{detail::get<double>(j, "stone_size_m", path), detail::get<double>(j, "spacing_m", path),
                          detail::get<int>(j, "count", path)};
  if (type == "stairs")
    return Stairs{detail::get<double>(j, "rise_m", path), detail::get<double>(j, "run_m", path),
                  detail::get<int>(j, "count", path)};
  throw SchemaError(path + ".type: unknown feature type '" + type + "'");
}

inline Json to_json(const TerrainScenario& s) {
  Json j = detail::header("gaitplan.scenario");
  j["kind"] = to_string(s.kind);
  j["seed"] = s.seed;
  const ScenarioParams& p = s.params;
  Json pj;
  pj["resolution_m"] = p.resolution;
  pj["side_length_m"] = p.side_length;
  pj["flat_elevation_m"] = p.flat_elevation;
  pj["patch_size_m"] = p.patch_size;
  pj["elevation_steps_m"] = p.elevation_steps;
  pj["diagonal_rise_m"] = p.diagonal_rise;
  pj["course_length_m"] = p.course_length;
  pj["course_width_m"] = p.course_width;
  pj["connective_length_m"] = p.connective_length;
  pj["pit_depth_m"] = p.pit_depth;
  pj["stone_jitter_m"] = p.stone_jitter;
  Json feats = Json::array();
  for (const auto& f : p.features) feats.push_back(to_json(f));
  pj["features"] = std::move(feats);
  j["params"] = std::move(pj);
  j["spawn_region"] = to_json(s.spawn_region);
  j["goal_region"] = to_json(s.goal_region);
  return j;
}

/// Scenario specs are hand-written inputs: every parameter is optional and
/// falls back to its default; kind is required.
inline TerrainScenario scenario_from_json(const Json& j, const std::string& path = "scenario") {
  detail::check_header(j, "gaitplan.scenario", path);
  TerrainScenario s;
  s.kind = scenario_kind_from_string(detail::get<std::string>(j, "kind", path), path + ".kind");
  if (j.contains("seed")) s.seed = detail::get<std::uint64_t>(j, "seed", path);
  if (j.contains("params")) {
    const Json& pj = j["params"];
    const std::string pp = path + ".params";
    ScenarioParams& p = s.params;
    auto opt = [&](const char* key, double& dst) {
      if (pj.contains(key)) dst = detail::get<double>(pj, key, pp);
    };
    opt("resolution_m", p.resolution);
    opt("side_length_m", p.side_length);
    opt("flat_elevation_m", p.flat_elevation);
    opt("patch_size_m", p.patch_size);
    opt("diagonal_rise_m", p.diagonal_rise);
    opt("course_length_m", p.course_length);
    opt("course_width_m", p.course_width);
    opt("connective_length_m", p.connective_length);
    opt("pit_depth_m", p.pit_depth);
    opt("stone_jitter_m", p.stone_jitter);
    if (pj.contains("elevation_steps_m"))
      p.elevation_steps = detail::numbers(pj["elevation_steps_m"], pp + ".elevation_steps_m");
    if (pj.contains("features")) {
      const Json& fj = pj["features"];
      if (!fj.is_array()) throw SchemaError(pp + ".features: expected an array");
      p.features.clear();
      for (std::size_t i = 0; i < fj.size(); ++i)
        p.features.push_back(feature_from_json(fj[i], pp + ".features[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("spawn_region")) s.spawn_region = rect_from_json(j["spawn_region"], path + ".spawn_region");
  if (j.contains("goal_region")) s.goal_region = rect_from_json(j["goal_region"], path + ".goal_region");
  return s;
}

// ---- robot model -------------------------------------------------------------

inline Json to_json(const RobotModel& m) {
  Json j = detail::header("gaitplan.robot_model");
  j["mass_kg"] = m.mass;
  j["gravity_mps2"] = detail::array(m.gravity);
  j["h_com_m"] = m.h_com;
  Json nom = Json::array(), boxes = Json::array();
  for (int k = 0; k < kNumFeet; ++k) {
    nom.push_back(detail::array(m.nominal_footholds[k]));
    Json b;
    b["lo_m"] = detail::array(m.kinematic_box[k].lo);
    b["hi_m"] = detail::array(m.kinematic_box[k].hi);
    boxes.push_back(std::move(b));
  }
  j["nominal_footholds_m"] = std::move(nom);
  j["kinematic_box"] = std::move(boxes);
  j["friction_coeff"] = m.friction_coeff;
  j["max_normal_force_n"] = m.max_normal_force;
  j["max_step_m"] = m.max_step;
  return j;
}

inline RobotModel robot_model_from_json(const Json& j, const std::string& path = "model") {
  detail::check_header(j, "gaitplan.robot_model", path);
  RobotModel m;
  m.mass = detail::get<double>(j, "mass_kg", path);
  m.gravity = detail::fixed_field<3>(j, "gravity_mps2", path);
  m.h_com = detail::get<double>(j, "h_com_m", path);
  const Json& nom = detail::need(j, "nominal_footholds_m", path);
  const Json& boxes = detail::need(j, "kinematic_box", path);
  if (!nom.is_array() || nom.size() != kNumFeet) throw SchemaError(path + ".nominal_footholds_m: expected 4 entries");
  if (!boxes.is_array() || boxes.size() != kNumFeet) throw SchemaError(path + ".kinematic_box: expected 4 entries");
  for (int k = 0; k < kNumFeet; ++k) {
    const std::string idx = "[" + std::to_string(k) + "]";
    m.nominal_footholds[k] = detail::fixed<2>(nom[k], path + ".nominal_footholds_m" + idx);
    m.kinematic_box[k].lo = detail::fixed_field<3>(boxes[k], "lo_m", path + ".kinematic_box" + idx);
    m.kinematic_box[k].hi = detail::fixed_field<3>(boxes[k], "hi_m", path + ".kinematic_box" + idx);
  }
  m.friction_coeff = detail::get<double>(j, "friction_coeff", path);
  m.max_normal_force = detail::get<double>(j, "max_normal_force_n", path);
  m.max_step = detail::get<double>(j, "max_step_m", path);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return m;
}

// ---- phases and actions --------------------------------------------------------

inline Json to_json(const SupportPhase& p) {
  Json j;
  Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = p.R_B;
  j["R_B_rowmajor"] = detail::array(Eigen::Map<const Eigen::Matrix<double, 9, 1>>(r.data()));
  j["r_B_m"] = detail::array(p.r_B);
  j["v_B_mps"] = detail::array(p.v_B);
  Json feet = Json::array(), contacts = Json::array();
  for (int k = 0; k < kNumFeet; ++k) {
    feet.push_back(detail::array(p.r_F[k]));
    contacts.push_back(p.c_F[k]);
  }
  j["r_F_m"] = std::move(feet);
  j["c_F"] = std::move(contacts);
  j["t_E_s"] = p.t_E;
  j["t_S_s"] = p.t_S;
  return j;
}

inline SupportPhase phase_from_json(const Json& j, const std::string& path) {
  SupportPhase p;
  const auto r = detail::fixed_field<9>(j, "R_B_rowmajor", path);
  p.R_B = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(r.data());
  p.r_B = detail::fixed_field<3>(j, "r_B_m", path);
  p.v_B = detail::fixed_field<3>(j, "v_B_mps", path);
  const Json& feet = detail::need(j, "r_F_m", path);
  const Json& contacts = detail::need(j, "c_F", path);
  if (!feet.is_array() || feet.size() != kNumFeet) throw SchemaError(path + ".r_F_m: expected 4 entries");
  if (!contacts.is_array() || contacts.size() != kNumFeet) throw SchemaError(path + ".c_F: expected 4 entries");
  for (int k = 0; k < kNumFeet; ++k) {
    const std::string idx = "[" + std::to_string(k) + "]";
    p.r_F[k] = detail::fixed<3>(feet[k], path + ".r_F_m" + idx);
    p.c_F[k] = detail::as<bool>(contacts[k], path + ".c_F" + idx);
  }
  p.t_E = detail::get<double>(j, "t_E_s", path);
  p.t_S = detail::get<double>(j, "t_S_s", path);
  return p;
}

/// Stand-alone phase file, as consumed by the feasibility checker.
inline std::string save_phase(const SupportPhase& p) {
  Json j = detail::header("gaitplan.phase");
  j["phase"] = to_json(p);
  return detail::dump(j);
}

inline SupportPhase load_phase(const std::string& text) {
  const Json j = parse(text, "phase");
  detail::check_header(j, "gaitplan.phase", "phase");
  return phase_from_json(detail::need(j, "phase", "phase"), "phase.phase");
}

inline Json to_json(const PlannerAction& a) {
  Json j;
  j["a_R"] = a.a_R;
  j["a_B"] = detail::array(a.a_B);
  j["a_v"] = detail::array(a.a_v);
  j["a_F"] = detail::array(a.a_F);
  j["a_c"] = detail::array(a.a_c);
  j["a_t"] = detail::array(a.a_t);
  return j;
}

inline PlannerAction action_from_json(const Json& j, const std::string& path) {
  PlannerAction a;
  a.a_R = detail::get<double>(j, "a_R", path);
  a.a_B = detail::fixed_field<2>(j, "a_B", path);
  a.a_v = detail::fixed_field<2>(j, "a_v", path);
  a.a_F = detail::fixed_field<8>(j, "a_F", path);
  a.a_c = detail::fixed_field<3>(j, "a_c", path);
  a.a_t = detail::fixed_field<2>(j, "a_t", path);
  return a;
}

inline Json to_json(const PlannerObservation& o) {
  Json j;
  j["o_R"] = o.o_R;
  j["o_v"] = detail::array(o.o_v);
  j["o_F"] = detail::array(o.o_F);
  j["o_c"] = detail::array(o.o_c);
  Json rows = Json::array();
  for (int r = 0; r < kLocalMapSize; ++r) rows.push_back(detail::array(Eigen::VectorXd(o.o_M.row(r).transpose())));
  j["o_M"] = std::move(rows);
  return j;
}

inline Json to_json(const RewardTerms& t) {
  Json j;
  j["r_p"] = t.r_p;
  j["r_h"] = t.r_h;
  j["r_k"] = t.r_k;
  j["r_c"] = t.r_c;
  j["total"] = t.total;
  return j;
}

inline RewardTerms reward_terms_from_json(const Json& j, const std::string& path) {
  return {detail::get<double>(j, "r_p", path), detail::get<double>(j, "r_h", path),
          detail::get<double>(j, "r_k", path), detail::get<double>(j, "r_c", path),
          detail::get<double>(j, "total", path)};
}

// ---- plans and episode logs ----------------------------------------------------

inline Json to_json(const PhasePlan& plan) {
  Json j = detail::header("gaitplan.plan");
  j["terrain_id"] = plan.terrain_id;
  j["goal_xy_m"] = detail::array(plan.goal);
  j["seed"] = plan.seed;
  Json phases = Json::array();
  for (const auto& p : plan.phases) phases.push_back(to_json(p));
  j["phases"] = std::move(phases);
  j["rewards"] = plan.rewards;
  return j;
}

inline PhasePlan plan_from_json(const Json& j, const std::string& path = "plan") {
  detail::check_header(j, "gaitplan.plan", path);
  PhasePlan plan;
  plan.terrain_id = detail::get<std::string>(j, "terrain_id", path);
  plan.goal = detail::fixed_field<2>(j, "goal_xy_m", path);
  plan.seed = detail::get<std::uint64_t>(j, "seed", path);
  const Json& phases = detail::need(j, "phases", path);
  if (!phases.is_array()) throw SchemaError(path + ".phases: expected an array");
  for (std::size_t i = 0; i < phases.size(); ++i)
    plan.phases.push_back(phase_from_json(phases[i], path + ".phases[" + std::to_string(i) + "]"));
  plan.rewards = detail::numbers(detail::need(j, "rewards", path), path + ".rewards");
  if (!plan.phases.empty() && plan.rewards.size() + 1 != plan.phases.size())
    throw SchemaError(path + ".rewards: expected one reward per committed phase");
  return plan;
}

inline std::string save_plan(const PhasePlan& p) { return detail::dump(to_json(p)); }
inline PhasePlan load_plan(const std::string& text) { return plan_from_json(parse(text, "plan")); }

inline Json to_json(const EpisodeRecord& r) {
  Json j;
  j["step"] = r.step;
  j["action"] = to_json(r.action);
  j["phase"] = to_json(r.phase);
  j["reward"] = r.reward;
  j["terms"] = to_json(r.terms);
  j["termination_reason"] = to_string(r.reason);
  j["success"] = r.success;
  return j;
}

inline EpisodeRecord record_from_json(const Json& j, const std::string& path) {
  EpisodeRecord r;
  r.step = detail::get<int>(j, "step", path);
  r.action = action_from_json(detail::need(j, "action", path), path + ".action");
  r.phase = phase_from_json(detail::need(j, "phase", path), path + ".phase");
  r.reward = detail::get<double>(j, "reward", path);
  r.terms = reward_terms_from_json(detail::need(j, "terms", path), path + ".terms");
  try {
    r.reason = termination_reason_from_string(detail::get<std::string>(j, "termination_reason", path));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path + ".termination_reason: " + e.what());
  }
  r.success = detail::get<bool>(j, "success", path);
  return r;
}

/// JSON lines: a header line, then one compact line per step.
inline std::string save_episode_log(const EpisodeLog& log) {
  Json head = detail::header("gaitplan.episode_log");
  head["terrain_id"] = log.terrain_id;
  head["seed"] = log.seed;
  head["goal_xy_m"] = detail::array(log.goal);
  head["initial"] = to_json(log.initial);
  std::string out = head.dump() + "\n";
  for (const auto& r : log.records) out += to_json(r).dump() + "\n";
  return out;
}

inline EpisodeLog load_episode_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("episode_log: empty input");
  const Json head = parse(line, "episode_log line 1");
  detail::check_header(head, "gaitplan.episode_log", "episode_log[0]");
  EpisodeLog log;
  log.terrain_id = detail::get<std::string>(head, "terrain_id", "episode_log[0]");
  log.seed = detail::get<std::uint64_t>(head, "seed", "episode_log[0]");
  log.goal = detail::fixed_field<2>(head, "goal_xy_m", "episode_log[0]");
  log.initial = phase_from_json(detail::need(head, "initial", "episode_log[0]"), "episode_log[0].initial");
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const std::string path = "episode_log[" + std::to_string(n) + "]";
    log.records.push_back(record_from_json(parse(line, path), path));
  }
  return log;
}

// ---- tracking logs -------------------------------------------------------------

inline Json to_json(const TrackingLog& log) {
  Json j = detail::header("gaitplan.tracking_log");
  Json recs = Json::array();
  for (const auto& r : log.records) {
    Json rj;
    Json c = Json::array(), d = Json::array(), m = Json::array();
    for (int k = 0; k < kNumFeet; ++k) {
      c.push_back(r.desired_contacts[k]);
      d.push_back(detail::array(r.desired_footholds[k]));
      m.push_back(detail::array(r.measured_feet[k]));
    }
    rj["desired_contacts"] = std::move(c);
    rj["desired_footholds_m"] = std::move(d);
    rj["measured_feet_m"] = std::move(m);
    recs.push_back(std::move(rj));
  }
  j["records"] = std::move(recs);
  Json evs = Json::array();
  for (const auto& e : log.touchdowns) {
    Json ej;
    ej["foot"] = e.foot;
    ej["touchdown_xy_m"] = detail::array(e.touchdown_xy);
    ej["target_xy_m"] = detail::array(e.target_xy);
    evs.push_back(std::move(ej));
  }
  j["touchdowns"] = std::move(evs);
  return j;
}

inline TrackingLog tracking_log_from_json(const Json& j, const std::string& path = "tracking_log") {
  detail::check_header(j, "gaitplan.tracking_log", path);
  TrackingLog log;
  const Json& recs = detail::need(j, "records", path);
  if (!recs.is_array()) throw SchemaError(path + ".records: expected an array");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string rp = path + ".records[" + std::to_string(i) + "]";
    const Json& c = detail::need(recs[i], "desired_contacts", rp);
    const Json& d = detail::need(recs[i], "desired_footholds_m", rp);
    const Json& m = detail::need(recs[i], "measured_feet_m", rp);
    for (const auto& [arr, key] : {std::pair{&c, "desired_contacts"}, {&d, "desired_footholds_m"}, {&m, "measured_feet_m"}})
      if (!arr->is_array() || arr->size() != kNumFeet) throw SchemaError(rp + "." + key + ": expected 4 entries");
    TrackingRecord r;
    for (int k = 0; k < kNumFeet; ++k) {
      const std::string idx = "[" + std::to_string(k) + "]";
      r.desired_contacts[k] = detail::as<bool>(c[k], rp + ".desired_contacts" + idx);
      r.desired_footholds[k] = detail::fixed<3>(d[k], rp + ".desired_footholds_m" + idx);
      r.measured_feet[k] = detail::fixed<3>(m[k], rp + ".measured_feet_m" + idx);
    }
    log.records.push_back(r);
  }
  const Json& evs = detail::need(j, "touchdowns", path);
  if (!evs.is_array()) throw SchemaError(path + ".touchdowns: expected an array");
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const std::string ep = path + ".touchdowns[" + std::to_string(i) + "]";
    TouchdownEvent e;
    e.foot = detail::get<int>(evs[i], "foot", ep);
    if (e.foot < 0 || e.foot >= kNumFeet) throw SchemaError(ep + ".foot: must lie in [0, 3]");
    e.touchdown_xy = detail::fixed_field<2>(evs[i], "touchdown_xy_m", ep);
    e.target_xy = detail::fixed_field<2>(evs[i], "target_xy_m", ep);
    log.touchdowns.push_back(e);
  }
  return log;
}

inline std::string save_tracking_log(const TrackingLog& l) { return detail::dump(to_json(l)); }
inline TrackingLog load_tracking_log(const std::string& text) { return tracking_log_from_json(parse(text, "tracking_log")); }

// ---- reports ---------------------------------------------------------------------

inline Json to_json(const EsrReport& r) {
  Json j = detail::header("gaitplan.esr_report");
  j["n_episodes"] = r.n_episodes;
  j["successes"] = r.successes;
  j["esr"] = r.esr;
  j["mean_steps"] = r.mean_steps;
  Json h;
  for (const auto& [k, v] : r.histogram) h[k] = v;
  j["histogram"] = std::move(h);
  j["steps"] = r.steps;
  j["succeeded"] = r.succeeded;
  return j;
}

// ---- LP dumps --------------------------------------------------------------------

/// Text dump of an LP with every number in C99 hexadecimal notation, so a
/// parsed dump reproduces the solve bit for bit.
inline std::string dump_lp(const LinearProgram& lp) {
  lp.check_shape();
  std::string out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, " %a", v);
    out += buf;
  };
  out += "gaitplan-lp " + std::to_string(kFormatVersion) + "\n";
  out += "vars " + std::to_string(lp.n_vars) + "\n";
  out += "lower";
  for (int i = 0; i < lp.n_vars; ++i) num(lp.lower[i]);
  out += "\nupper";
  for (int i = 0; i < lp.n_vars; ++i) num(lp.upper[i]);
  out += "\n";
  auto block = [&](const char* tag, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    out += std::string(tag) + " " + std::to_string(A.rows()) + "\n";
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      out += "row";
      for (Eigen::Index c = 0; c < A.cols(); ++c) num(A(r, c));
      out += " |";
      num(b[r]);
      out += "\n";
    }
  };
  block("eq", lp.A_eq, lp.b_eq);
  block("le", lp.A_in, lp.b_in);
  return out;
}

inline LinearProgram parse_lp(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  auto expect = [&](const std::string& want) {
    if (!(in >> tok) || tok != want) throw SchemaError("lp dump: expected '" + want + "', got '" + tok + "'");
  };
  auto read_num = [&](const char* what) {
    if (!(in >> tok)) throw SchemaError(std::string("lp dump: truncated while reading ") + what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw SchemaError(std::string("lp dump: bad number '") + tok + "' in " + what);
    return v;
  };
  auto read_count = [&](const char* what) {
    long long n = 0;
    if (!(in >> n) || n < 0) throw SchemaError(std::string("lp dump: bad count for ") + what);
    return static_cast<int>(n);
  };
  expect("gaitplan-lp");
  if (read_count("version") != kFormatVersion) throw SchemaError("lp dump: unsupported version");
  expect("vars");
  LinearProgram lp(read_count("vars"));
  expect("lower");
  for (int i = 0; i < lp.n_vars; ++i) lp.lower[i] = read_num("lower");
  expect("upper");
  for (int i = 0; i < lp.n_vars; ++i) lp.upper[i] = read_num("upper");
  auto block = [&](const char* tag, Eigen::MatrixXd& A, Eigen::VectorXd& b) {
    expect(tag);
    const int rows = read_count(tag);
    A.resize(rows, lp.n_vars);
    b.resize(rows);
    for (int r = 0; r < rows; ++r) {
      expect("row");
      for (int c = 0; c < lp.n_vars; ++c) A(r, c) = read_num(tag);
      expect("|");
      b[r] = read_num(tag);
    }
  };
  block("eq", lp.A_eq, lp.b_eq);
  block("le", lp.A_in, lp.b_in);
  lp.check_shape();
  return lp;
}

}  // namespace io
}  // namespace gaitplan
