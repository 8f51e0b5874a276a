#pragma once

// Virtual alignment: bring every projection onto a common layer using a
// tracked fixed point, fit the point's sinusoidal trajectory, and move each
// frame horizontally so the point follows either that trajectory or the
// detector center (the virtual rotation axis).

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vamct/motion.hpp"
#include "vamct/projector.hpp"
#include "vamct/tracker.hpp"

namespace vamct {

/// u(theta) = center + amplitude * cos(theta + phase)
///          = center + a cos(theta) + b sin(theta),
/// with a = amplitude cos(phase), b = -amplitude sin(phase).
struct TrajectoryModel {
  double center = 0.0;
  double a = 0.0;
  double b = 0.0;
  double rms_residual = 0.0;
  double max_residual = 0.0;

  double amplitude() const;
  /// Degrees, normalized to (-180, 180].
  double phase_deg() const;
  double u(double angle_deg) const;

  static TrajectoryModel from_amplitude_phase(double center, double amplitude, double phase_deg);
};

enum class AlignMode {
  Ideal,       // fixed point follows the fitted sinusoid about the detector center
  VirtualCor,  // fixed point held on the detector center column
};

std::string_view to_string(AlignMode m);
AlignMode parse_align_mode(std::string_view name);

struct VerticalAlignment {
  ProjectionSet set;
  FixedPointTrack track;
  std::vector<double> dv;
  double target_row = 0.0;
};

/// Shifts every frame vertically so the fixed point sits on target_row
/// (default: median of the valid rows). Invalid frames take dv interpolated
/// in angle from valid neighbours.
VerticalAlignment vertical_align(const ProjectionSet& set, const FixedPointTrack& track,
                                 std::optional<double> target_row = std::nullopt);

/// Least squares over valid entries; needs >= 3 of them spanning >= 90 deg.
TrajectoryModel fit_trajectory(const FixedPointTrack& track, std::span<const double> angles);

/// Per-frame horizontal correction: model.u(theta_i) - u_i (ideal) or
/// c0 - u_i (virtual COR); invalid frames interpolated.
std::vector<double> horizontal_shifts(const FixedPointTrack& track, std::span<const double> angles,
                                      const TrajectoryModel& model, AlignMode mode, int nu);

struct HorizontalAlignment {
  ProjectionSet set;
  std::vector<double> du;
};

HorizontalAlignment horizontal_align(const ProjectionSet& set, const FixedPointTrack& track,
                                     const TrajectoryModel& model, AlignMode mode);

struct AlignmentReport {
  AlignMode mode = AlignMode::Ideal;
  TrackMethod method = TrackMethod::Marker;
  std::vector<DetectorShift> shifts;  // applied to the input frames
  std::vector<bool> valid;            // fixed point detected in the input frame
  double target_row = 0.0;
  TrajectoryModel fitted;  // least-squares fit to the common-layer track
  TrajectoryModel target;  // trajectory the fixed point was moved onto
};

struct AlignmentResult {
  ProjectionSet set;
  AlignmentReport report;
};

/// track -> vertical_align -> re-track -> fit_trajectory -> horizontal shift.
/// The output is the input shifted once per frame by the reported (du, dv).
/// In ideal mode the fitted sinusoid is re-centred on the detector center:
/// its fitted offset only absorbs the mean lateral error.
AlignmentResult vam_align(const ProjectionSet& set, TrackMethod method, AlignMode mode,
                          const TrackParams& params = {});

/// Detector-mode schedule reproducing the report's shifts.
MotionSchedule as_schedule(const AlignmentReport& report);

/// CSV "index,angle_deg,du,dv,valid".
void write_report_csv(std::ostream& out, const AlignmentReport& report, std::span<const double> angles);
void write_report_summary(std::ostream& out, const AlignmentReport& report);

}  // namespace vamct
