#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vamct/phantom.hpp"
#include "vamct/tracker.hpp"

using namespace vamct;

namespace {

Image gaussian_blob(int w, int h, double cx, double cy, double sigma, double amp, double slope_x, double base) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      img.at(x, y) = static_cast<float>(base + slope_x * x + amp * std::exp(-r2 / (2 * sigma * sigma)));
    }
  return img;
}

}  // namespace

TEST_CASE("method names parse") {
  CHECK(parse_track_method("apex") == TrackMethod::Apex);
  CHECK(parse_track_method("centroid") == TrackMethod::Centroid);
  CHECK(parse_track_method("marker") == TrackMethod::Marker);
  CHECK(to_string(TrackMethod::Marker) == "marker");
  CHECK_THROWS_AS(parse_track_method("blob"), Error);
}

TEST_CASE("apex finds the topmost supra-threshold row") {
  Image img(20, 20);
  for (int y = 7; y < 15; ++y)
    for (int x = 4; x < 10; ++x) img.at(x, y) = 1.0f;
  img.at(8, 6) = 0.01f;  // below 5% of the maximum
  const TrackPoint p = detect_fixed_point(img, TrackMethod::Apex);
  REQUIRE(p.valid);
  CHECK(p.v == 7.0);
  CHECK(p.u == doctest::Approx(6.5));
}

TEST_CASE("centroid equals the direct weighted mean") {
  Image img(17, 11);
  double m = 0, mu = 0, mv = 0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 17; ++x) {
      const float v = static_cast<float>((x * 7 + y * 3) % 5);
      img.at(x, y) = v;
      m += v;
      mu += v * x;
      mv += v * y;
    }
  const TrackPoint p = detect_fixed_point(img, TrackMethod::Centroid);
  CHECK(p.u == doctest::Approx(mu / m).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(mv / m).epsilon(1e-12));
}

TEST_CASE("marker localization ignores a sloped background") {
  for (auto [cx, cy] : {std::pair{30.3, 20.7}, {12.5, 33.25}, {40.9, 9.1}}) {
    const Image img = gaussian_blob(56, 44, cx, cy, 1.8, 20.0, 0.05, 3.0);
    const TrackPoint p = detect_fixed_point(img, TrackMethod::Marker);
    REQUIRE(p.valid);
    CHECK(std::abs(p.u - cx) < 0.05);
    CHECK(std::abs(p.v - cy) < 0.05);
  }
}

TEST_CASE("empty frames give invalid points") {
  const Image img(10, 10);
  for (TrackMethod m : {TrackMethod::Apex, TrackMethod::Centroid, TrackMethod::Marker})
    CHECK_FALSE(detect_fixed_point(img, m).valid);
}

TEST_CASE("tracking rejects sets with too few valid frames") {
  ProjectionSet set(uniform_angles(4, 45.0), 12, 12);
  set.frame(0)[5 * 12 + 5] = 1.0f;
  CHECK_THROWS_AS(track_fixed_points(set, TrackMethod::Centroid), Error);
  set.frame(1)[5 * 12 + 6] = 1.0f;
  const FixedPointTrack t = track_fixed_points(set, TrackMethod::Centroid);
  CHECK(t.valid_count() == 2);
}

TEST_CASE("centroid of a rigid sample follows its mass-center orbit") {
  const GridSize g{64, 64, 16};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  double m = 0, mx = 0, my = 0, mz = 0;
  for (int z = 0; z < g.nz; ++z)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x < g.nx; ++x) {
        const double v = vol.at(x, y, z);
        m += v;
        mx += v * (x - rotation_center(g.nx));
        my += v * (y - rotation_center(g.ny));
        mz += v * z;
      }
  const auto angles = uniform_angles(36, 5.0);
  const ProjectionSet set = forward_project_volume(vol, angles);
  TrackParams params;
  params.background_threshold = -1.0;
  const FixedPointTrack t = track_fixed_points(set, TrackMethod::Centroid, params);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double th = deg_to_rad(angles[i]);
    // Per-row projected mass varies slightly with angle, which moves the
    // discrete centroid by a few thousandths of a pixel.
    CHECK(std::abs(t.points[i].u - (rotation_center(64) + (mx * std::cos(th) + my * std::sin(th)) / m)) <= 0.05);
    CHECK(std::abs(t.points[i].v - mz / m) <= 0.01);
  }
}

TEST_CASE("track CSV round trips") {
  FixedPointTrack t;
  t.method = TrackMethod::Marker;
  t.points = {{1.25, 2.5, true}, {0.1 + 0.2, 3.0, false}, {127.123456789, 64.0, true}};
  const std::vector<double> angles{0.0, 0.5, 1.0};
  std::stringstream ss;
  write_track_csv(ss, t, angles);
  const FixedPointTrack back = read_track_csv(ss, TrackMethod::Marker);
  REQUIRE(back.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points[i].u == t.points[i].u);
    CHECK(back.points[i].v == t.points[i].v);
    CHECK(back.points[i].valid == t.points[i].valid);
  }
  std::istringstream bad("u,v\n");
  CHECK_THROWS_AS(read_track_csv(bad, TrackMethod::Marker), Error);
}
