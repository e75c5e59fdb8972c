#pragma once

#include <vector>

#include "gaitplan/phase.hpp"

namespace gaitplan {

/// One controller time step: desired contacts and footholds next to measured feet.
struct TrackingRecord {
  ContactFlags desired_contacts{false, false, false, false};
  std::array<Vec3, kNumFeet> desired_footholds{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, kNumFeet> measured_feet{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};

  bool operator==(const TrackingRecord&) const = default;
};

struct TouchdownEvent {
  int foot = 0;
  Vec2 touchdown_xy = Vec2::Zero();
  Vec2 target_xy = Vec2::Zero();

  bool operator==(const TouchdownEvent&) const = default;
};

/// Input-only log: this toolkit has no physics that could produce measured feet.
struct TrackingLog {
  std::vector<TrackingRecord> records;
  std::vector<TouchdownEvent> touchdowns;

  bool operator==(const TrackingLog&) const = default;
};

inline constexpr double kTouchdownTolerance = 0.05;

/// Mean over records of the contact-weighted mean foothold error.
inline double compute_fter(const TrackingLog& log) {
  if (log.records.empty()) throw std::invalid_argument("compute_fter: empty tracking log");
  double total = 0.0;
  for (std::size_t t = 0; t < log.records.size(); ++t) {
    const TrackingRecord& r = log.records[t];
    const int n = count_contacts(r.desired_contacts);
    if (n == 0) throw std::invalid_argument("compute_fter: record " + std::to_string(t) + " has no desired contacts");
    double err = 0.0;
    for (int k = 0; k < kNumFeet; ++k)
      if (r.desired_contacts[k]) err += (r.desired_footholds[k] - r.measured_feet[k]).norm();
    total += err / n;
  }
  return total / static_cast<double>(log.records.size());
}

/// Fraction of touchdowns landing within the planar tolerance, boundary included.
inline double compute_fts(const std::vector<TouchdownEvent>& events, double tolerance = kTouchdownTolerance) {
  if (events.empty()) throw std::invalid_argument("compute_fts: no touchdown events");
  int ok = 0;
  for (const auto& e : events) {
    if (e.foot < 0 || e.foot >= kNumFeet) throw std::invalid_argument("compute_fts: foot id out of range");
    if ((e.touchdown_xy - e.target_xy).norm() <= tolerance) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(events.size());
}

}  // namespace gaitplan
