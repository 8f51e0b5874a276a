#include <doctest.h>

#include <cmath>
#include <random>

#include "vamct/parallel.hpp"
#include "vamct/phantom.hpp"
#include "vamct/projector.hpp"

using namespace vamct;

namespace {

PhantomSpec ellipses() {
  PhantomSpec spec;
  spec.components.push_back({ShapeKind::Ellipsoid, {0, 0, 0}, {90, 70, 60}, 1.0});
  spec.components.push_back({ShapeKind::Ellipsoid, {20, -15, 0}, {30, 18, 60}, 0.8});
  spec.components.push_back({ShapeKind::Ellipsoid, {-35, 25, 0}, {12, 22, 60}, -0.4});
  spec.components.push_back({ShapeKind::Ellipsoid, {5, 40, 0}, {8, 8, 60}, 1.5});
  return spec;
}

double rms_rel(const Sinogram& a, const Sinogram& b) {
  double se = 0, peak = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
    peak = std::max(peak, static_cast<double>(std::abs(b.data[i])));
  }
  return std::sqrt(se / a.data.size()) / peak;
}

}  // namespace

TEST_CASE("angle validation") {
  CHECK_NOTHROW(validate_angles(uniform_angles(360, 0.5), "t"));
  const std::vector<double> repeated{0, 1, 1}, wrapped{0, 90, 180}, negative{-1, 2};
  CHECK_THROWS_AS(validate_angles(repeated, "t"), Error);
  CHECK_THROWS_AS(validate_angles(wrapped, "t"), Error);
  CHECK_THROWS_AS(validate_angles(negative, "t"), Error);
}

TEST_CASE("zero slice projects to zero") {
  const Slice s(32, 32);
  const auto angles = uniform_angles(10, 18.0);
  const Sinogram p = forward_project_slice(s, angles);
  CHECK(p.nu == 32);
  for (float v : p.data) CHECK(v == 0.0f);
}

TEST_CASE("discrete projection matches the closed form") {
  const GridSize g{256, 256, 1};
  const PhantomSpec spec = ellipses();
  const Volume vol = generate_phantom(spec, g);
  const auto angles = uniform_angles(360, 0.5);
  const Sinogram disc = forward_project_slice(vol.slice(0), angles);
  const Sinogram exact = analytic_sinogram(spec, g, 0, angles);
  const double err = rms_rel(disc, exact);
  MESSAGE("relative RMSE " << err);
  CHECK(err <= 0.005);

  double lo = 1e300, hi = 0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    double m = 0;
    for (float v : disc.row(i)) m += v;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK((hi - lo) / hi <= 0.005);
}

TEST_CASE("projection of a single pixel lands on its abscissa") {
  Slice s(31, 31);
  s.at(20, 12) = 1.0f;  // x = +5, y = -3 from the center
  const std::vector<double> angles{0.0, 30.0, 90.0, 135.0};
  const Sinogram p = forward_project_slice(s, angles);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    double m = 0, mu = 0;
    for (int u = 0; u < p.nu; ++u) {
      m += p.at(i, u);
      mu += u * p.at(i, u);
    }
    const double th = deg_to_rad(angles[i]);
    CHECK(std::abs(mu / m - (15 + 5 * std::cos(th) - 3 * std::sin(th))) <= 0.05);
  }
}

TEST_CASE("volume projection stacks slice projections") {
  const GridSize g{40, 40, 7};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  const auto angles = uniform_angles(24, 7.5);
  const ProjectionSet set = forward_project_volume(vol, angles);
  CHECK(set.nu == 40);
  CHECK(set.nv == 7);
  for (int z = 0; z < 7; ++z) {
    const Sinogram s = forward_project_slice(vol.slice(z), angles);
    CHECK(set.sinogram(z).data == s.data);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const GridSize g{48, 48, 9};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  const auto angles = uniform_angles(30, 6.0);
  set_thread_count(1);
  const ProjectionSet a = forward_project_volume(vol, angles);
  set_thread_count(4);
  const ProjectionSet b = forward_project_volume(vol, angles);
  set_thread_count(0);
  CHECK(a.data == b.data);
}

TEST_CASE("flat-field round trip with arbitrary gain and offset") {
  const GridSize g{32, 32, 12};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  ProjectionSet proj = forward_project_volume(vol, uniform_angles(20, 9.0));
  // Keep transmission well above the floor.
  const float peak = *std::max_element(proj.data.begin(), proj.data.end());
  for (float& v : proj.data) v *= 5.0f / peak;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> gain(200.0, 60000.0), off(0.0, 150.0);
  std::vector<double> flat(proj.frame_size()), dark(proj.frame_size());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    dark[k] = off(rng);
    flat[k] = dark[k] + gain(rng);
  }
  for (RawMode mode : {RawMode::Attenuation, RawMode::Normalized}) {
    RawSimulation opt;
    opt.mode = mode;
    const RawFrameSet raw = simulate_raw(proj, flat, dark, opt);
    const FlatFieldResult ff = flat_field_correct(raw);
    CHECK(ff.clamped == 0);
    const ProjectionSet back = mode == RawMode::Attenuation ? to_attenuation(ff.normalized).attenuation : ff.normalized;
    double worst = 0;
    for (std::size_t i = 0; i < proj.data.size(); ++i)
      worst = std::max(worst, std::abs(static_cast<double>(back.data[i]) - proj.data[i]));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("dead detector pixels are floored and counted") {
  ProjectionSet proj(uniform_angles(2, 90.0), 4, 2);
  std::vector<double> flat(8, 1000.0), dark(8, 10.0);
  RawFrameSet raw = simulate_raw(proj, flat, dark);
  for (std::size_t f = 0; f < raw.n_flats(); ++f) raw.flats[f * 8 + 3] = 10.0;
  const FlatFieldResult ff = flat_field_correct(raw);
  CHECK(ff.clamped == 1);
  for (float v : ff.normalized.data) CHECK(std::isfinite(v));

  for (double& v : raw.flats) v = 10.0;
  CHECK_THROWS_AS(flat_field_correct(raw), Error);
}

TEST_CASE("noisy raw frames are reproducible") {
  ProjectionSet proj(uniform_angles(3, 60.0), 8, 4);
  std::vector<double> flat(32, 5000.0), dark(32, 20.0);
  RawSimulation opt;
  opt.noise_seed = 99;
  const RawFrameSet a = simulate_raw(proj, flat, dark, opt);
  const RawFrameSet b = simulate_raw(proj, flat, dark, opt);
  CHECK(a.projections == b.projections);
  CHECK(a.flats == b.flats);
}

TEST_CASE("simulate_raw rejects non-positive gain") {
  ProjectionSet proj(uniform_angles(2, 90.0), 2, 2);
  std::vector<double> flat(4, 5.0), dark(4, 5.0);
  CHECK_THROWS_AS(simulate_raw(proj, flat, dark), Error);
}

TEST_CASE("attenuation floors non-positive transmission") {
  ProjectionSet n(uniform_angles(1, 1.0), 3, 1);
  n.data = {1.0f, 0.0f, -0.5f};
  const AttenuationResult a = to_attenuation(n);
  CHECK(a.attenuation.data[0] == 0.0f);
  CHECK(a.attenuation.data[1] == doctest::Approx(-std::log(kTransmissionFloor)));
  CHECK(a.clamped == 2);
}
