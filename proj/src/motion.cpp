#include "vamct/motion.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "vamct/parallel.hpp"

namespace vamct {

DetectorShift induced_detector_shift(const std::array<double, 3>& t, double angle_deg) {
  const double th = deg_to_rad(angle_deg);
  return {t[0] * std::cos(th) + t[1] * std::sin(th), t[2]};
}

MotionSchedule sample_schedule(std::uint64_t seed, int n_angles, const std::array<AxisRange, 3>& ranges,
                               MotionMode mode) {
  for (const auto& r : ranges)
    if (!(r.lo <= r.hi)) throw Error(Error::Kind::InvalidArgument, "motion", "range lo must not exceed hi");
  if (n_angles < 0) throw Error(Error::Kind::InvalidArgument, "motion", "negative angle count");
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw keeps the sequence independent of the standard
  // library's distribution implementation.
  auto uniform = [&rng](const AxisRange& r) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return r.lo + (r.hi - r.lo) * u;
  };
  MotionSchedule s;
  s.mode = mode;
  s.entries.resize(static_cast<std::size_t>(n_angles));
  for (auto& e : s.entries) {
    e[0] = uniform(ranges[0]);
    e[1] = uniform(ranges[1]);
    e[2] = mode == MotionMode::World ? uniform(ranges[2]) : 0.0;
  }
  return s;
}

DetectorShift schedule_shift(const MotionSchedule& schedule, std::size_t i, double angle_deg) {
  const auto& e = schedule.entries.at(i);
  if (schedule.mode == MotionMode::World) return induced_detector_shift(e, angle_deg);
  return {e[0], e[1]};
}

ProjectionSet apply_motion(const ProjectionSet& set, const MotionSchedule& schedule) {
  if (schedule.entries.size() != set.n_angles())
    throw Error(Error::Kind::DimensionMismatch, "motion",
                "schedule has " + std::to_string(schedule.entries.size()) + " entries for " +
                    std::to_string(set.n_angles()) + " projections");
  for (const auto& e : schedule.entries)
    for (double v : e)
      if (!std::isfinite(v)) throw Error(Error::Kind::InvalidArgument, "motion", "non-finite schedule entry");
  ProjectionSet out = set;
  parallel_for(set.n_angles(), [&](std::size_t i) {
    const auto d = schedule_shift(schedule, i, set.angles[i]);
    if (d.du == 0.0 && d.dv == 0.0) return;
    shift_subpixel(set.frame(i), set.nu, set.nv, d.du, d.dv, out.frame(i));
  });
  return out;
}

MotionSchedule inverse(const MotionSchedule& schedule) {
  MotionSchedule inv = schedule;
  for (auto& e : inv.entries)
    for (double& v : e) v = -v;
  return inv;
}

void write_schedule_csv(std::ostream& out, const MotionSchedule& schedule, std::span<const double> angles) {
  if (angles.size() != schedule.entries.size())
    throw Error(Error::Kind::DimensionMismatch, "motion", "angle count does not match schedule");
  const bool world = schedule.mode == MotionMode::World;
  out << (world ? "index,angle_deg,tx,ty,tz\n" : "index,angle_deg,du,dv\n");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const auto& e = schedule.entries[i];
    out << i << ',' << angles[i] << ',' << e[0] << ',' << e[1];
    if (world) out << ',' << e[2];
    out << '\n';
  }
}

MotionSchedule read_schedule_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(Error::Kind::Io, "motion", "empty schedule file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  MotionSchedule s;
  std::size_t columns = 0;
  if (header == "index,angle_deg,tx,ty,tz") {
    s.mode = MotionMode::World;
    columns = 5;
  } else if (header == "index,angle_deg,du,dv") {
    s.mode = MotionMode::Detector;
    columns = 4;
  } else {
    throw Error(Error::Kind::Io, "motion", "unrecognized schedule header '" + header + "'");
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> fields;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != columns) throw Error(Error::Kind::Io, "motion", "bad schedule row: " + line);
    if (static_cast<std::size_t>(fields[0]) != s.entries.size())
      throw Error(Error::Kind::Io, "motion", "schedule indices must be consecutive from 0");
    s.entries.push_back({fields[2], fields[3], columns == 5 ? fields[4] : 0.0});
  }
  return s;
}

MotionSchedule load_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Io, "motion", "cannot open " + path.string());
  return read_schedule_csv(in);
}

}  // namespace vamct
