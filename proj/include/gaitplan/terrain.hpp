#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gaitplan/common.hpp"

namespace gaitplan {

/// Uniform grid of terrain elevations. Cell (row, col) is centered at
/// origin + (col, row) * resolution and its elevation is constant over the
/// whole cell. Rows run along +y, columns along +x.
class HeightMap {
 public:
  HeightMap() = default;

  HeightMap(Vec2 origin, double resolution, int n_rows, int n_cols, std::vector<double> elevations)
      : origin_(origin), resolution_(resolution), n_rows_(n_rows), n_cols_(n_cols),
        elevations_(std::move(elevations)) {
    if (!(resolution_ > 0.0) || !std::isfinite(resolution_))
      throw std::invalid_argument("HeightMap: resolution must be positive");
    if (n_rows_ < 1 || n_cols_ < 1) throw std::invalid_argument("HeightMap: empty grid");
    if (elevations_.size() != static_cast<std::size_t>(n_rows_) * static_cast<std::size_t>(n_cols_))
      throw std::invalid_argument("HeightMap: elevation count does not match n_rows * n_cols");
    if (!origin_.allFinite()) throw std::invalid_argument("HeightMap: origin must be finite");
    for (double e : elevations_)
      if (!std::isfinite(e)) throw std::invalid_argument("HeightMap: non-finite elevation");
  }

  static HeightMap constant(Vec2 origin, double resolution, int n_rows, int n_cols, double z) {
    return HeightMap(origin, resolution, n_rows, n_cols,
                     std::vector<double>(static_cast<std::size_t>(n_rows) * n_cols, z));
  }

  const Vec2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int n_rows() const { return n_rows_; }
  int n_cols() const { return n_cols_; }
  std::span<const double> elevations() const { return elevations_; }

  double at(int row, int col) const { return elevations_[static_cast<std::size_t>(row) * n_cols_ + col]; }
  double& at(int row, int col) { return elevations_[static_cast<std::size_t>(row) * n_cols_ + col]; }

  Vec2 cell_center(int row, int col) const {
    return origin_ + resolution_ * Vec2(static_cast<double>(col), static_cast<double>(row));
  }

  /// World rectangle covered by the grid (outer cell edges).
  Rect footprint() const {
    const Vec2 half = Vec2::Constant(0.5 * resolution_);
    return {origin_ - half,
            origin_ + resolution_ * Vec2(n_cols_ - 1, n_rows_ - 1) + half};
  }

  bool contains(const Vec2& xy) const {
    int r, c;
    return locate(xy, r, c);
  }

  /// Index of the cell containing xy; false when outside the footprint.
  bool locate(const Vec2& xy, int& row, int& col) const {
    const double fc = std::floor((xy.x() - origin_.x()) / resolution_ + 0.5);
    const double fr = std::floor((xy.y() - origin_.y()) / resolution_ + 0.5);
    if (!(fc >= 0.0 && fr >= 0.0 && fc < n_cols_ && fr < n_rows_)) return false;
    col = static_cast<int>(fc);
    row = static_cast<int>(fr);
    return true;
  }

  bool operator==(const HeightMap& o) const {
    return origin_ == o.origin_ && resolution_ == o.resolution_ && n_rows_ == o.n_rows_ &&
           n_cols_ == o.n_cols_ && elevations_ == o.elevations_;
  }

 private:
  Vec2 origin_ = Vec2::Zero();
  double resolution_ = 1.0;
  int n_rows_ = 1;
  int n_cols_ = 1;
  std::vector<double> elevations_ = {0.0};
};

/// Nearest-cell elevation lookup. Throws OutOfBounds outside the footprint.
inline double elevation_at(const HeightMap& map, const Vec2& xy) {
  int r, c;
  if (!map.locate(xy, r, c))
    throw OutOfBounds("elevation query (" + std::to_string(xy.x()) + ", " + std::to_string(xy.y()) +
                      ") outside terrain footprint");
  return map.at(r, c);
}

// ---------------------------------------------------------------------------
// Robocentric local height-map

inline constexpr int kLocalMapSize = 32;
inline constexpr double kLocalMapResolution = 0.04;

using LocalHeightMap = Eigen::Matrix<double, kLocalMapSize, kLocalMapSize, Eigen::RowMajor>;

/// Base-frame offset of local sample (row, col); rows run along base +y.
inline Vec2 local_sample_offset(int row, int col) {
  constexpr double c = 0.5 * (kLocalMapSize - 1);
  return kLocalMapResolution * Vec2(col - c, row - c);
}

/// True when every sample of the yaw-aligned window around base_xy is on the map.
inline bool local_window_inside(const HeightMap& map, const Vec2& base_xy, double base_yaw) {
  const Mat2 rot = rot2(base_yaw);
  const int last = kLocalMapSize - 1;
  for (const auto& [r, c] : {std::pair{0, 0}, {0, last}, {last, 0}, {last, last}})
    if (!map.contains(base_xy + rot * local_sample_offset(r, c))) return false;
  return true;
}

/// 32x32 window at 4 cm pitch centered on the base and rotated with its yaw.
/// Values are terrain elevation minus base_z.
inline LocalHeightMap local_heightmap(const HeightMap& map, const Vec2& base_xy, double base_yaw,
                                      double base_z) {
  if (!local_window_inside(map, base_xy, base_yaw))
    throw OutOfBounds("local height-map window leaves terrain footprint");
  const Mat2 rot = rot2(base_yaw);
  LocalHeightMap out;
  for (int r = 0; r < kLocalMapSize; ++r)
    for (int c = 0; c < kLocalMapSize; ++c)
      out(r, c) = elevation_at(map, base_xy + rot * local_sample_offset(r, c)) - base_z;
  return out;
}

// ---------------------------------------------------------------------------
// Edge distance

inline constexpr double kDefaultEdgeSearchRadius = 0.5;

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

}  // namespace detail

/// Planar distance from xy to the nearest boundary between two adjacent cells
/// whose elevations differ by more than height_threshold. Returns +infinity
/// when no such boundary lies within search_radius.
inline double min_edge_distance(const HeightMap& map, const Vec2& xy, double height_threshold,
                                double search_radius = kDefaultEdgeSearchRadius) {
  if (!(height_threshold > 0.0)) throw std::invalid_argument("min_edge_distance: threshold must be positive");
  int r0, c0;
  if (!map.locate(xy, r0, c0)) throw OutOfBounds("min_edge_distance: query outside terrain footprint");
  const double res = map.resolution();
  const int span = static_cast<int>(std::ceil(search_radius / res)) + 1;
  const int r_lo = std::max(0, r0 - span), r_hi = std::min(map.n_rows() - 1, r0 + span);
  const int c_lo = std::max(0, c0 - span), c_hi = std::min(map.n_cols() - 1, c0 + span);
  const double h = 0.5 * res;

  double best = std::numeric_limits<double>::infinity();
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      const double z = map.at(r, c);
      const Vec2 ctr = map.cell_center(r, c);
      if (c + 1 < map.n_cols() && std::abs(map.at(r, c + 1) - z) > height_threshold)
        best = std::min(best, detail::point_segment_distance(xy, ctr + Vec2(h, -h), ctr + Vec2(h, h)));
      if (r + 1 < map.n_rows() && std::abs(map.at(r + 1, c) - z) > height_threshold)
        best = std::min(best, detail::point_segment_distance(xy, ctr + Vec2(-h, h), ctr + Vec2(h, h)));
    }
  }
  return best <= search_radius ? best : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioKind { FlatWorld, RandomStairs, Composite };

struct FlatSection {
  double length = 1.0;
};
struct Gap {
  double width = 0.3;
  double depth = 1.0;
};
struct SteppingStones {
  double stone_size = 0.3;
  double spacing = 0.1;
  int count = 3;
};
struct Stairs {
  double rise = 0.1;
  double run = 0.3;
  int count = 3;
};

using TerrainFeature = std::variant<FlatSection, Gap, SteppingStones, Stairs>;

struct ScenarioParams {
  double resolution = 0.04;
  // FlatWorld / RandomStairs: square side centered on the world origin.
  double side_length = 20.0;
  double flat_elevation = 0.0;
  // RandomStairs
  double patch_size = 1.0;
  std::vector<double> elevation_steps = {0.0, 0.05, 0.10};
  double diagonal_rise = 0.05;  // per patch along each axis
  // Composite: course along +x starting at x = 0, centered on y = 0.
  double course_length = 12.0;
  double course_width = 4.0;
  double connective_length = 1.0;
  double pit_depth = 1.0;        // floor below stepping stones
  double stone_jitter = 0.0;     // random lateral stone offset bound
  std::vector<TerrainFeature> features;
};

struct TerrainScenario {
  ScenarioKind kind = ScenarioKind::FlatWorld;
  std::uint64_t seed = 0;
  ScenarioParams params;
  Rect spawn_region{{-1.0, -1.0}, {1.0, 1.0}};
  Rect goal_region{{-6.0, -6.0}, {6.0, 6.0}};
};

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::FlatWorld: return "FlatWorld";
    case ScenarioKind::RandomStairs: return "RandomStairs";
    case ScenarioKind::Composite: return "Composite";
  }
  return "?";
}

namespace detail {

inline int cells_for(double length, double res, const char* what) {
  const double n = length / res;
  const double rounded = std::round(n);
  if (rounded < 1.0 || std::abs(n - rounded) > 1e-6)
    throw std::invalid_argument(std::string(what) + " must be a positive multiple of the resolution");
  return static_cast<int>(rounded);
}

// One x-interval of the composite course. Within [y_lo, y_hi] the level is
// `inner`, elsewhere `outer`.
struct CourseSegment {
  double x0, x1;
  double inner, outer;
  double y_lo = -std::numeric_limits<double>::infinity();
  double y_hi = std::numeric_limits<double>::infinity();
};

inline double feature_length(const TerrainFeature& f) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FlatSection>) return v.length;
        else if constexpr (std::is_same_v<T, Gap>) return v.width;
        else if constexpr (std::is_same_v<T, SteppingStones>)
          return v.count * v.stone_size + (v.count - 1) * v.spacing;
        else return v.count * v.run;
      },
      f);
}

inline void validate_feature(const TerrainFeature& f) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FlatSection>) {
          if (!(v.length >= 0.0)) throw std::invalid_argument("FlatSection length must be non-negative");
        } else if constexpr (std::is_same_v<T, Gap>) {
          if (!(v.width > 0.0)) throw std::invalid_argument("Gap width must be positive");
          if (!std::isfinite(v.depth)) throw std::invalid_argument("Gap depth must be finite");
        } else if constexpr (std::is_same_v<T, SteppingStones>) {
          if (!(v.stone_size > 0.0) || !(v.spacing >= 0.0) || v.count < 1)
            throw std::invalid_argument("SteppingStones need positive size, non-negative spacing, count >= 1");
        } else {
          if (!(v.rise != 0.0) || !std::isfinite(v.rise)) throw std::invalid_argument("Stairs rise must be non-zero");
          if (!(v.run > 0.0) || v.count < 1) throw std::invalid_argument("Stairs need positive run and count >= 1");
        }
      },
      f);
}

inline std::vector<CourseSegment> lay_course(const ScenarioParams& p, std::mt19937_64& rng) {
  std::vector<CourseSegment> segs;
  double x = 0.0, level = 0.0;
  bool prev_flat = true;
  for (const auto& f : p.features) {
    validate_feature(f);
    const bool is_flat = std::holds_alternative<FlatSection>(f);
    if (!is_flat && !prev_flat && p.connective_length > 0.0) {
      segs.push_back({x, x + p.connective_length, level, level});
      x += p.connective_length;
    }
    if (const auto* flat = std::get_if<FlatSection>(&f)) {
      segs.push_back({x, x + flat->length, level, level});
      x += flat->length;
    } else if (const auto* gap = std::get_if<Gap>(&f)) {
      segs.push_back({x, x + gap->width, level - gap->depth, level - gap->depth});
      x += gap->width;
    } else if (const auto* st = std::get_if<SteppingStones>(&f)) {
      std::uniform_real_distribution<double> jitter(-p.stone_jitter, p.stone_jitter);
      for (int i = 0; i < st->count; ++i) {
        const double y0 = p.stone_jitter > 0.0 ? jitter(rng) : 0.0;
        segs.push_back({x, x + st->stone_size, level, level - p.pit_depth, y0 - 0.5 * st->stone_size,
                        y0 + 0.5 * st->stone_size});
        x += st->stone_size;
        if (i + 1 < st->count) {
          segs.push_back({x, x + st->spacing, level - p.pit_depth, level - p.pit_depth});
          x += st->spacing;
        }
      }
    } else {
      const auto& s = std::get<Stairs>(f);
      for (int i = 0; i < s.count; ++i) {
        level += s.rise;
        segs.push_back({x, x + s.run, level, level});
        x += s.run;
      }
    }
    prev_flat = is_flat;
  }
  if (x > p.course_length + 1e-9)
    throw std::invalid_argument("Composite features (" + std::to_string(x) + " m) exceed course length (" +
                                std::to_string(p.course_length) + " m)");
  segs.push_back({x, std::numeric_limits<double>::infinity(), level, level});
  return segs;
}

}  // namespace detail

/// Generates the height-map of a scenario. Pure function of (kind, seed, params).
inline HeightMap generate(const TerrainScenario& scenario) {
  const ScenarioParams& p = scenario.params;
  if (!(p.resolution > 0.0)) throw std::invalid_argument("scenario resolution must be positive");
  std::mt19937_64 rng(scenario.seed);
  HeightMap map;

  switch (scenario.kind) {
    case ScenarioKind::FlatWorld: {
      const int n = detail::cells_for(p.side_length, p.resolution, "side_length");
      const double o = -0.5 * p.side_length + 0.5 * p.resolution;
      map = HeightMap::constant({o, o}, p.resolution, n, n, p.flat_elevation);
      break;
    }
    case ScenarioKind::RandomStairs: {
      const int n = detail::cells_for(p.side_length, p.resolution, "side_length");
      const int per_patch = detail::cells_for(p.patch_size, p.resolution, "patch_size");
      if (n % per_patch != 0) throw std::invalid_argument("side_length must be a multiple of patch_size");
      if (p.elevation_steps.empty()) throw std::invalid_argument("elevation_steps must not be empty");
      const int n_patch = n / per_patch;
      std::uniform_int_distribution<std::size_t> pick(0, p.elevation_steps.size() - 1);
      std::vector<double> patch_z(static_cast<std::size_t>(n_patch) * n_patch);
      for (int i = 0; i < n_patch; ++i)
        for (int j = 0; j < n_patch; ++j)
          patch_z[static_cast<std::size_t>(i) * n_patch + j] =
              p.diagonal_rise * (i + j) + p.elevation_steps[pick(rng)];
      const double o = -0.5 * p.side_length + 0.5 * p.resolution;
      map = HeightMap::constant({o, o}, p.resolution, n, n, 0.0);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          map.at(r, c) = patch_z[static_cast<std::size_t>(r / per_patch) * n_patch + c / per_patch];
      break;
    }
    case ScenarioKind::Composite: {
      const auto segs = detail::lay_course(p, rng);
      const int nx = detail::cells_for(p.course_length, p.resolution, "course_length");
      const int ny = detail::cells_for(p.course_width, p.resolution, "course_width");
      const Vec2 origin(0.5 * p.resolution, -0.5 * p.course_width + 0.5 * p.resolution);
      map = HeightMap::constant(origin, p.resolution, ny, nx, 0.0);
      std::size_t s = 0;
      for (int c = 0; c < nx; ++c) {
        const double x = origin.x() + c * p.resolution;
        while (s + 1 < segs.size() && x >= segs[s].x1) ++s;
        for (int r = 0; r < ny; ++r) {
          const double y = origin.y() + r * p.resolution;
          const auto& seg = segs[s];
          map.at(r, c) = (y >= seg.y_lo && y <= seg.y_hi) ? seg.inner : seg.outer;
        }
      }
      break;
    }
  }

  const Rect fp = map.footprint();
  if (!scenario.spawn_region.valid() || !fp.contains(scenario.spawn_region))
    throw std::invalid_argument("spawn_region lies outside the generated terrain footprint");
  if (!scenario.goal_region.valid() || !fp.contains(scenario.goal_region))
    throw std::invalid_argument("goal_region lies outside the generated terrain footprint");
  return map;
}

}  // namespace gaitplan
