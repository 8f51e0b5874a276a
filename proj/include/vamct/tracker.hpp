#pragma once

// Fixed-point detection and tracking across a projection set.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vamct/projector.hpp"

namespace vamct {

enum class TrackMethod {
  Apex,      // highest supra-threshold row, centroid of that row
  Centroid,  // intensity-weighted centroid of the whole frame
  Marker,    // dense bead: window centroid around the smoothed maximum
};

std::string_view to_string(TrackMethod m);
TrackMethod parse_track_method(std::string_view name);

struct TrackParams {
  /// Absolute background threshold; when unset, background_fraction of the
  /// frame maximum is used.
  std::optional<double> background_threshold;
  double background_fraction = 0.05;
  /// Odd side length of the marker centroid window.
  int marker_window = 21;
};

struct TrackPoint {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

struct FixedPointTrack {
  TrackMethod method = TrackMethod::Centroid;
  std::vector<TrackPoint> points;

  std::size_t valid_count() const;
};

/// Frames with nothing above the background threshold yield an invalid point.
TrackPoint detect_fixed_point(std::span<const float> frame, int width, int height, TrackMethod method,
                              const TrackParams& params = {});
TrackPoint detect_fixed_point(const Image& image, TrackMethod method, const TrackParams& params = {});

/// Rejects the track when fewer than half of the frames are valid.
FixedPointTrack track_fixed_points(const ProjectionSet& set, TrackMethod method, const TrackParams& params = {});

/// CSV "index,angle_deg,u,v,valid".
void write_track_csv(std::ostream& out, const FixedPointTrack& track, std::span<const double> angles);
FixedPointTrack read_track_csv(std::istream& in, TrackMethod method);

}  // namespace vamct
