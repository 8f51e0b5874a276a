#include "vamct/align.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "vamct/parallel.hpp"

namespace vamct {

double TrajectoryModel::amplitude() const { return std::hypot(a, b); }

double TrajectoryModel::phase_deg() const {
  if (a == 0.0 && b == 0.0) return 0.0;
  double p = rad_to_deg(std::atan2(-b, a));
  if (p <= -180.0) p += 360.0;
  return p;
}

double TrajectoryModel::u(double angle_deg) const {
  const double th = deg_to_rad(angle_deg);
  return center + a * std::cos(th) + b * std::sin(th);
}

TrajectoryModel TrajectoryModel::from_amplitude_phase(double center, double amplitude, double phase_deg) {
  TrajectoryModel m;
  m.center = center;
  m.a = amplitude * std::cos(deg_to_rad(phase_deg));
  m.b = -amplitude * std::sin(deg_to_rad(phase_deg));
  return m;
}

std::string_view to_string(AlignMode m) { return m == AlignMode::Ideal ? "ideal" : "virtual_cor"; }

AlignMode parse_align_mode(std::string_view name) {
  if (name == "ideal") return AlignMode::Ideal;
  if (name == "virtual_cor" || name == "virtual-cor") return AlignMode::VirtualCor;
  throw Error(Error::Kind::InvalidArgument, "align", "unknown alignment mode '" + std::string(name) + "'");
}

namespace {

// Fills entries of `values` flagged invalid by linear interpolation in angle
// between the nearest valid neighbours; the ends copy the nearest valid value.
void fill_invalid(std::vector<double>& values, const FixedPointTrack& track, std::span<const double> angles) {
  const std::size_t n = values.size();
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < n; ++i)
    if (track.points[i].valid) good.push_back(i);
  if (good.empty()) throw Error(Error::Kind::Rejected, "align", "no valid fixed-point entries");
  std::size_t g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (track.points[i].valid) continue;
    while (g + 1 < good.size() && good[g + 1] < i) ++g;
    const std::size_t lo = good[g];
    if (i < lo) {
      values[i] = values[lo];
    } else if (g + 1 >= good.size()) {
      values[i] = values[good.back()];
    } else {
      const std::size_t hi = good[g + 1];
      const double t = (angles[i] - angles[lo]) / (angles[hi] - angles[lo]);
      values[i] = values[lo] + t * (values[hi] - values[lo]);
    }
  }
}

void check_track(const ProjectionSet& set, const FixedPointTrack& track, const char* stage) {
  if (track.points.size() != set.n_angles())
    throw Error(Error::Kind::DimensionMismatch, stage, "track length does not match the projection count");
  if (2 * track.valid_count() < set.n_angles())
    throw Error(Error::Kind::Rejected, stage, "fewer than half of the frames carry a valid fixed point");
}

ProjectionSet shift_frames(const ProjectionSet& set, std::span<const double> du, std::span<const double> dv) {
  ProjectionSet out = set;
  parallel_for(set.n_angles(), [&](std::size_t i) {
    if (du[i] == 0.0 && dv[i] == 0.0) return;
    shift_subpixel(set.frame(i), set.nu, set.nv, du[i], dv[i], out.frame(i));
  });
  return out;
}

}  // namespace

VerticalAlignment vertical_align(const ProjectionSet& set, const FixedPointTrack& track,
                                 std::optional<double> target_row) {
  check_track(set, track, "vertical");
  std::vector<double> rows;
  for (const auto& p : track.points)
    if (p.valid) rows.push_back(p.v);
  double target;
  if (target_row) {
    target = *target_row;
  } else {
    std::sort(rows.begin(), rows.end());
    const std::size_t n = rows.size();
    target = n % 2 ? rows[n / 2] : 0.5 * (rows[n / 2 - 1] + rows[n / 2]);
  }

  VerticalAlignment out;
  out.target_row = target;
  out.dv.resize(set.n_angles());
  for (std::size_t i = 0; i < set.n_angles(); ++i)
    out.dv[i] = track.points[i].valid ? target - track.points[i].v : 0.0;
  fill_invalid(out.dv, track, set.angles);

  const std::vector<double> zero(set.n_angles(), 0.0);
  out.set = shift_frames(set, zero, out.dv);
  out.track = track;
  for (auto& p : out.track.points)
    if (p.valid) p.v = target;
  return out;
}

TrajectoryModel fit_trajectory(const FixedPointTrack& track, std::span<const double> angles) {
  if (track.points.size() != angles.size())
    throw Error(Error::Kind::DimensionMismatch, "fit", "track length does not match the angle count");
  std::vector<std::size_t> used;
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!track.points[i].valid) continue;
    used.push_back(i);
    lo = std::min(lo, angles[i]);
    hi = std::max(hi, angles[i]);
  }
  if (used.size() < 3) throw Error(Error::Kind::Rejected, "fit", "need at least 3 valid track entries");
  if (hi - lo < 90.0)
    throw Error(Error::Kind::Rejected, "fit",
                "valid entries span only " + std::to_string(hi - lo) + " degrees (need >= 90)");

  Eigen::MatrixXd design(used.size(), 3);
  Eigen::VectorXd rhs(used.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    const double th = deg_to_rad(angles[used[k]]);
    design(k, 0) = 1.0;
    design(k, 1) = std::cos(th);
    design(k, 2) = std::sin(th);
    rhs(k) = track.points[used[k]].u;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw Error(Error::Kind::Rejected, "fit", "rank-deficient trajectory system");
  const Eigen::Vector3d x = qr.solve(rhs);

  TrajectoryModel m;
  m.center = x[0];
  m.a = x[1];
  m.b = x[2];
  double ss = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < used.size(); ++k) {
    const double r = rhs(k) - m.u(angles[used[k]]);
    ss += r * r;
    mx = std::max(mx, std::abs(r));
  }
  m.rms_residual = std::sqrt(ss / static_cast<double>(used.size()));
  m.max_residual = mx;
  return m;
}

std::vector<double> horizontal_shifts(const FixedPointTrack& track, std::span<const double> angles,
                                      const TrajectoryModel& model, AlignMode mode, int nu) {
  const double c0 = rotation_center(nu);
  std::vector<double> du(angles.size(), 0.0);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!track.points[i].valid) continue;
    const double target = mode == AlignMode::Ideal ? model.u(angles[i]) : c0;
    du[i] = target - track.points[i].u;
  }
  fill_invalid(du, track, angles);
  return du;
}

HorizontalAlignment horizontal_align(const ProjectionSet& set, const FixedPointTrack& track,
                                     const TrajectoryModel& model, AlignMode mode) {
  check_track(set, track, "horizontal");
  HorizontalAlignment out;
  out.du = horizontal_shifts(track, set.angles, model, mode, set.nu);
  const std::vector<double> zero(set.n_angles(), 0.0);
  out.set = shift_frames(set, out.du, zero);
  return out;
}

AlignmentResult vam_align(const ProjectionSet& set, TrackMethod method, AlignMode mode, const TrackParams& params) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), name, e.what());
    }
  };

  const FixedPointTrack first = stage("track", [&] { return track_fixed_points(set, method, params); });
  const VerticalAlignment vertical = stage("vertical", [&] { return vertical_align(set, first, std::nullopt); });
  // Horizontal positions are measured on vertically clean frames.
  FixedPointTrack layer = stage("retrack", [&] { return track_fixed_points(vertical.set, method, params); });
  for (std::size_t i = 0; i < layer.points.size(); ++i) layer.points[i].valid = layer.points[i].valid && first.points[i].valid;
  const TrajectoryModel fitted = stage("fit", [&] { return fit_trajectory(layer, set.angles); });

  TrajectoryModel target = fitted;
  if (mode == AlignMode::Ideal) target.center = rotation_center(set.nu);
  const std::vector<double> du =
      stage("horizontal", [&] { return horizontal_shifts(layer, set.angles, target, mode, set.nu); });

  AlignmentResult result;
  auto& rep = result.report;
  rep.mode = mode;
  rep.method = method;
  rep.target_row = vertical.target_row;
  rep.fitted = fitted;
  if (mode == AlignMode::VirtualCor) target = TrajectoryModel::from_amplitude_phase(rotation_center(set.nu), 0.0, 0.0);
  rep.target = target;
  rep.shifts.resize(set.n_angles());
  rep.valid.resize(set.n_angles());
  for (std::size_t i = 0; i < set.n_angles(); ++i) {
    rep.shifts[i] = {du[i], vertical.dv[i]};
    rep.valid[i] = layer.points[i].valid;
  }
  result.set = shift_frames(set, du, vertical.dv);
  return result;
}

MotionSchedule as_schedule(const AlignmentReport& report) {
  MotionSchedule s;
  s.mode = MotionMode::Detector;
  s.entries.reserve(report.shifts.size());
  for (const auto& d : report.shifts) s.entries.push_back({d.du, d.dv, 0.0});
  return s;
}

void write_report_csv(std::ostream& out, const AlignmentReport& report, std::span<const double> angles) {
  if (angles.size() != report.shifts.size())
    throw Error(Error::Kind::DimensionMismatch, "align", "angle count does not match report");
  out << "index,angle_deg,du,dv,valid\n" << std::setprecision(17);
  for (std::size_t i = 0; i < angles.size(); ++i)
    out << i << ',' << angles[i] << ',' << report.shifts[i].du << ',' << report.shifts[i].dv << ','
        << (report.valid[i] ? 1 : 0) << '\n';
}

void write_report_summary(std::ostream& out, const AlignmentReport& report) {
  double ss = 0.0, mx = 0.0;
  for (const auto& d : report.shifts) {
    const double m = std::hypot(d.du, d.dv);
    ss += m * m;
    mx = std::max(mx, m);
  }
  const double n = std::max<std::size_t>(1, report.shifts.size());
  out << std::setprecision(10);
  out << "mode " << to_string(report.mode) << '\n';
  out << "method " << to_string(report.method) << '\n';
  out << "target_row " << report.target_row << '\n';
  out << "fit_center " << report.fitted.center << '\n';
  out << "fit_amplitude " << report.fitted.amplitude() << '\n';
  out << "fit_phase_deg " << report.fitted.phase_deg() << '\n';
  out << "fit_rms_residual " << report.fitted.rms_residual << '\n';
  out << "fit_max_residual " << report.fitted.max_residual << '\n';
  out << "target_center " << report.target.center << '\n';
  out << "target_amplitude " << report.target.amplitude() << '\n';
  out << "target_phase_deg " << report.target.phase_deg() << '\n';
  out << "shift_rms " << std::sqrt(ss / n) << '\n';
  out << "shift_max " << mx << '\n';
}

}  // namespace vamct
