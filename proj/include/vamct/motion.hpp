#pragma once

// Per-projection rigid translation errors ("patient motion").

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "vamct/projector.hpp"

namespace vamct {

enum class MotionMode {
  World,     // entries are (tx, ty, tz) sample translations in pixels
  Detector,  // entries are (du, dv, unused) detector shifts in pixels
};

struct DetectorShift {
  double du = 0.0;
  double dv = 0.0;
};

struct MotionSchedule {
  MotionMode mode = MotionMode::World;
  std::vector<std::array<double, 3>> entries;  // one per projection angle
};

/// Parallel-beam image of a sample translation: du = tx cos + ty sin, dv = tz.
/// The along-beam component is invisible.
DetectorShift induced_detector_shift(const std::array<double, 3>& t, double angle_deg);

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Independent uniform draws per angle and axis; deterministic for a seed.
/// Detector mode uses ranges[0] for du and ranges[1] for dv.
MotionSchedule sample_schedule(std::uint64_t seed, int n_angles, const std::array<AxisRange, 3>& ranges,
                               MotionMode mode);

/// Detector shift applied to frame i.
DetectorShift schedule_shift(const MotionSchedule& schedule, std::size_t i, double angle_deg);

ProjectionSet apply_motion(const ProjectionSet& set, const MotionSchedule& schedule);

/// Same schedule with every shift negated.
MotionSchedule inverse(const MotionSchedule& schedule);

/// CSV: header "index,angle_deg,tx,ty,tz" (world) or "index,angle_deg,du,dv"
/// (detector), then one row per angle.
void write_schedule_csv(std::ostream& out, const MotionSchedule& schedule, std::span<const double> angles);
MotionSchedule read_schedule_csv(std::istream& in);
MotionSchedule load_schedule_csv(const std::filesystem::path& path);

}  // namespace vamct
