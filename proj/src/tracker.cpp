#include "vamct/tracker.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <sstream>
#include <string>

#include "vamct/parallel.hpp"

namespace vamct {

std::string_view to_string(TrackMethod m) {
  switch (m) {
    case TrackMethod::Apex: return "apex";
    case TrackMethod::Centroid: return "centroid";
    case TrackMethod::Marker: return "marker";
  }
  return "?";
}

TrackMethod parse_track_method(std::string_view name) {
  if (name == "apex") return TrackMethod::Apex;
  if (name == "centroid") return TrackMethod::Centroid;
  if (name == "marker") return TrackMethod::Marker;
  throw Error(Error::Kind::InvalidArgument, "track", "unknown tracking method '" + std::string(name) + "'");
}

std::size_t FixedPointTrack::valid_count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const TrackPoint& p) { return p.valid; }));
}

namespace {

struct FrameView {
  std::span<const float> data;
  int w, h;
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * w + x]; }
};

TrackPoint detect_apex(const FrameView& f, double tau) {
  for (int y = 0; y < f.h; ++y) {
    double sw = 0.0, su = 0.0;
    for (int x = 0; x < f.w; ++x) {
      const double v = f.at(x, y);
      if (v > tau) {
        sw += v;
        su += v * x;
      }
    }
    if (sw > 0.0) return {su / sw, static_cast<double>(y), true};
  }
  return {};
}

TrackPoint detect_centroid(const FrameView& f) {
  double sw = 0.0, su = 0.0, sv = 0.0;
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      const double v = f.at(x, y);
      sw += v;
      su += v * x;
      sv += v * y;
    }
  }
  if (!(sw > 0.0)) return {};
  return {su / sw, sv / sw, true};
}

// Bead localization: the 3x3-smoothed maximum picks the window; a plane fitted
// to the window's outer ring removes the local background slope, and the
// centroid of what remains above half of its peak gives the bead center.
TrackPoint detect_marker(const FrameView& f, int window) {
  double best = -std::numeric_limits<double>::infinity();
  int bx = 0, by = 0;
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      double s = 0.0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const int xx = x + i, yy = y + j;
          if (xx >= 0 && xx < f.w && yy >= 0 && yy < f.h) s += f.at(xx, yy);
        }
      if (s > best) {
        best = s;
        bx = x;
        by = y;
      }
    }
  }
  const int half = std::max(1, window / 2);
  const int x0 = std::max(0, bx - half), x1 = std::min(f.w - 1, bx + half);
  const int y0 = std::max(0, by - half), y1 = std::min(f.h - 1, by + half);

  // Background plane a + b x + c y from the ring pixels.
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  int ring = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (x != x0 && x != x1 && y != y0 && y != y1) continue;
      const Eigen::Vector3d row(1.0, x - bx, y - by);
      ata += row * row.transpose();
      atb += row * static_cast<double>(f.at(x, y));
      ++ring;
    }
  }
  Eigen::Vector3d plane = Eigen::Vector3d::Zero();
  if (ring >= 3) {
    Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
    if (ldlt.info() == Eigen::Success && std::abs(ata.determinant()) > 1e-9) plane = ldlt.solve(atb);
    else plane[0] = atb[0] / ring;
  }
  auto residual = [&](int x, int y) { return f.at(x, y) - (plane[0] + plane[1] * (x - bx) + plane[2] * (y - by)); };

  double peak = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) peak = std::max(peak, residual(x, y));
  if (!(peak > 0.0)) return {};
  const double level = 0.5 * peak;
  double sw = 0.0, su = 0.0, sv = 0.0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double wgt = residual(x, y) - level;
      if (wgt > 0.0) {
        sw += wgt;
        su += wgt * x;
        sv += wgt * y;
      }
    }
  }
  if (!(sw > 0.0)) return {};
  return {su / sw, sv / sw, true};
}

}  // namespace

TrackPoint detect_fixed_point(std::span<const float> frame, int width, int height, TrackMethod method,
                              const TrackParams& params) {
  if (width <= 0 || height <= 0 || frame.size() != static_cast<std::size_t>(width) * height)
    throw Error(Error::Kind::DimensionMismatch, "track", "frame size mismatch");
  const FrameView f{frame, width, height};
  const float fmax = *std::max_element(frame.begin(), frame.end());
  const double tau = params.background_threshold ? *params.background_threshold : params.background_fraction * fmax;
  if (!(fmax > tau) || !(fmax > 0.0f)) return {};
  switch (method) {
    case TrackMethod::Apex: return detect_apex(f, tau);
    case TrackMethod::Centroid: return detect_centroid(f);
    case TrackMethod::Marker: return detect_marker(f, params.marker_window);
  }
  return {};
}

TrackPoint detect_fixed_point(const Image& image, TrackMethod method, const TrackParams& params) {
  return detect_fixed_point(image.data, image.width, image.height, method, params);
}

FixedPointTrack track_fixed_points(const ProjectionSet& set, TrackMethod method, const TrackParams& params) {
  FixedPointTrack track;
  track.method = method;
  track.points.resize(set.n_angles());
  parallel_for(set.n_angles(), [&](std::size_t i) {
    track.points[i] = detect_fixed_point(set.frame(i), set.nu, set.nv, method, params);
  });
  const std::size_t valid = track.valid_count();
  if (2 * valid < set.n_angles())
    throw Error(Error::Kind::Rejected, "track",
                "only " + std::to_string(valid) + " of " + std::to_string(set.n_angles()) +
                    " frames have a detectable fixed point (" + std::to_string(set.n_angles() - valid) + " invalid)");
  return track;
}

void write_track_csv(std::ostream& out, const FixedPointTrack& track, std::span<const double> angles) {
  if (angles.size() != track.points.size())
    throw Error(Error::Kind::DimensionMismatch, "track", "angle count does not match track");
  out << "index,angle_deg,u,v,valid\n" << std::setprecision(17);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const auto& p = track.points[i];
    out << i << ',' << angles[i] << ',' << p.u << ',' << p.v << ',' << (p.valid ? 1 : 0) << '\n';
  }
}

FixedPointTrack read_track_csv(std::istream& in, TrackMethod method) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,angle_deg,u,v,valid", 0) != 0)
    throw Error(Error::Kind::Io, "track", "missing track CSV header");
  FixedPointTrack track;
  track.method = method;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ls, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != 5) throw Error(Error::Kind::Io, "track", "bad track row: " + line);
    track.points.push_back({fields[2], fields[3], fields[4] != 0.0});
  }
  return track;
}

}  // namespace vamct
