// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli.hpp"
#include "support.hpp"
#include "vamct/align.hpp"
#include "vamct/io.hpp"
#include "vamct/metrology.hpp"
#include "vamct/motion.hpp"
#include "vamct/phantom.hpp"
#include "vamct/projector.hpp"
#include "vamct/recon.hpp"
#include "vamct/simd/kernels.hpp"
#include "vamct/tracker.hpp"

using namespace vamct;
namespace fs = std::filesystem;

namespace {

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion(int id, const std::string& name, const std::function<bool(std::ostringstream&)>& body) {
  std::ostringstream detail;
  detail.precision(6);
  bool pass = false;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  if (!pass) ++failures;
  std::printf("AC%-2d %s  %s  [%s] (%.1f s)\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.str().c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

struct Registered {
  std::array<double, 2> offset{};
  double rmse = 0.0;
};

Registered registered(const Slice& reference, const Slice& test) {
  Registered r;
  r.offset = registration_offset(reference, test);
  const Slice back = shift_subpixel(test, -r.offset[0], -r.offset[1]);
  r.rmse = relative_rmse(back.data, reference.data);
  return r;
}

const std::vector<double> kAngles = uniform_angles(360, 0.5);

bool ac1(std::ostringstream& d) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridSize g{256, 256, 256};
  const Volume vol = generate_phantom(tooth_phantom(g, false), g);
  const ProjectionSet proj = forward_project_volume(vol, kAngles);
  const Volume rec = fbp_volume(proj);
  const Extent ev = max_extent_volume(segment_threshold(rec, 0.6, {1, 1}));
  const ProjectionExtent ep = max_extent_projections(proj, 0.5);
  const MeasurementReport r = compare_extents(ev, ep, 1.0);
  const double runtime = seconds_since(t0);
  d << "volume " << ev.length << " px, projection " << ep.extent.length << " px at " << ep.angle_deg
    << " deg, |diff| " << r.difference << " px <= 1; runtime " << runtime << " s <= 120 ("
    << simd::active_kernels().name << ")";
  return r.pass && runtime <= 120.0;
}

bool ac2(std::ostringstream& d) {
  bool ok = true;
  auto check = [&](const char* name, const Slice& slice) {
    const Sinogram p = forward_project_slice(slice, kAngles);
    const Similarity s = sinogram_similarity(reproject(fbp_slice(p), kAngles), p);
    const bool pass = s.pearson && *s.pearson >= 0.99 && s.nrmse <= 0.05;
    ok = ok && pass;
    d << name << " r " << s.pearson.value_or(0.0) << " nrmse " << s.nrmse << "; ";
  };
  PhantomSpec disk;
  disk.components.push_back({ShapeKind::Ellipsoid, {0, 0, 0}, {100, 100, 100}, 1.0});
  check("disk", generate_phantom(disk, {256, 256, 1}).slice(0));
  const GridSize g{256, 256, 128};
  check("tooth", generate_phantom(tooth_phantom(g), g).slice(g.nz / 2));
  d << "need r >= 0.99, nrmse <= 0.05";
  return ok;
}

bool ac3(std::ostringstream& d) {
  const GridSize g{256, 256, 128};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  const ProjectionSet proj = forward_project_volume(vol, kAngles);
  TrackParams tp;
  tp.background_threshold = -1.0;
  const FixedPointTrack track = track_fixed_points(proj, TrackMethod::Centroid, tp);
  const TrajectoryModel fit = fit_trajectory(track, kAngles);

  // Mass-center orbit of the voxel grid.
  double m = 0, mx = 0, my = 0;
  const double c = rotation_center(g.nx);
  for (int z = 0; z < g.nz; ++z)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x < g.nx; ++x) {
        const double v = vol.at(x, y, z);
        m += v;
        mx += v * (x - c);
        my += v * (y - c);
      }
  double se = 0;
  for (std::size_t i = 0; i < kAngles.size(); ++i) {
    const double th = deg_to_rad(kAngles[i]);
    const double u = rotation_center(proj.nu) + mx / m * std::cos(th) + my / m * std::sin(th);
    se += (track.points[i].u - u) * (track.points[i].u - u);
  }
  const double orbit_rms = std::sqrt(se / kAngles.size());
  d << "fit rms residual " << fit.rms_residual << " px, rms vs mass-center orbit " << orbit_rms << " px, need <= 0.1";
  return fit.rms_residual <= 0.1 && orbit_rms <= 0.1;
}

struct RecoveryRun {
  std::vector<int> levels;
  std::vector<Registered> ideal, vcor, unaligned, modes;
  double a = 0, b = 0;
  double target_row = 0;
};

const RecoveryRun& recovery() {
  static const RecoveryRun run = [] {
    RecoveryRun r;
    const GridSize g{256, 256, 128};
    const Volume vol = generate_phantom(tooth_phantom(g), g);
    const ProjectionSet clean = forward_project_volume(vol, kAngles);
    const MotionSchedule sched =
        sample_schedule(7, 360, {AxisRange{-15, 15}, AxisRange{-15, 15}, AxisRange{-15, 15}}, MotionMode::World);
    const ProjectionSet perturbed = apply_motion(clean, sched);
    const AlignmentResult ideal = vam_align(perturbed, TrackMethod::Marker, AlignMode::Ideal);
    const AlignmentResult vcor = vam_align(perturbed, TrackMethod::Marker, AlignMode::VirtualCor);
    r.a = ideal.report.fitted.a;
    r.b = ideal.report.fitted.b;
    r.target_row = ideal.report.target_row;

    // Never-perturbed reference on the aligned common layer.
    const FixedPointTrack clean_track = track_fixed_points(clean, TrackMethod::Marker);
    double row = 0;
    std::size_t n = 0;
    for (const auto& p : clean_track.points)
      if (p.valid) {
        row += p.v;
        ++n;
      }
    const double dz = r.target_row - row / static_cast<double>(n);
    ProjectionSet layer = clean;
    for (std::size_t i = 0; i < clean.n_angles(); ++i)
      shift_subpixel(clean.frame(i), clean.nu, clean.nv, 0.0, dz, layer.frame(i));
    const Volume truth_layer = fbp_volume(layer);
    const Volume truth = fbp_volume(clean);
    const Volume rec_ideal = fbp_volume(ideal.set);
    const Volume rec_vcor = fbp_volume(vcor.set);
    const Volume rec_bad = fbp_volume(perturbed);

    r.levels = {static_cast<int>(std::lround(r.target_row)), g.nz / 4, g.nz / 2, 3 * g.nz / 4};
    for (int z : r.levels) {
      r.ideal.push_back(registered(truth_layer.slice(z), rec_ideal.slice(z)));
      r.vcor.push_back(registered(truth_layer.slice(z), rec_vcor.slice(z)));
      r.unaligned.push_back(registered(truth.slice(z), rec_bad.slice(z)));
      r.modes.push_back(registered(rec_ideal.slice(z), rec_vcor.slice(z)));
    }
    return r;
  }();
  return run;
}

bool ac4(std::ostringstream& d) {
  const RecoveryRun& r = recovery();
  bool ok = true;
  for (std::size_t k = 0; k < r.levels.size(); ++k) {
    const double worst = std::max(r.ideal[k].rmse, r.vcor[k].rmse);
    ok = ok && worst <= 0.03 && r.unaligned[k].rmse >= 3.0 * worst;
    d << "z" << r.levels[k] << " ideal " << r.ideal[k].rmse << " vcor " << r.vcor[k].rmse << " unaligned "
      << r.unaligned[k].rmse << "; ";
  }
  d << "need <= 0.03 and unaligned >= 3x";
  return ok;
}

bool ac5(std::ostringstream& d) {
  const RecoveryRun& r = recovery();
  bool ok = true;
  for (std::size_t k = 0; k < r.levels.size(); ++k) {
    const double err = std::hypot(r.modes[k].offset[0] + r.a, r.modes[k].offset[1] + r.b);
    ok = ok && err <= 1.0 && r.modes[k].rmse <= 0.02;
    d << "z" << r.levels[k] << " offset (" << r.modes[k].offset[0] << ", " << r.modes[k].offset[1] << ") err " << err
      << " rmse " << r.modes[k].rmse << "; ";
  }
  d << "expected (" << -r.a << ", " << -r.b << "), need err <= 1 px, rmse <= 0.02";
  return ok;
}

bool ac6(std::ostringstream& d) {
  const TrajectoryModel truth = TrajectoryModel::from_amplitude_phase(rotation_center(512), 121.0, -24.0);
  FixedPointTrack track;
  for (double a : kAngles) track.points.push_back({truth.u(a), 100.0, true});
  const TrajectoryModel fit = fit_trajectory(track, kAngles);
  const double ea = std::abs(fit.amplitude() - 121.0), ep = std::abs(fit.phase_deg() + 24.0);
  d << "amplitude " << fit.amplitude() << " (err " << ea << "), phase " << fit.phase_deg() << " (err " << ep
    << "), need <= 1e-6";
  return ea <= 1e-6 && ep <= 1e-6;
}

bool ac7(std::ostringstream& d) {
  const GridSize g{64, 64, 24};
  const Volume vol = generate_phantom(tooth_phantom(g), g);
  ProjectionSet proj = forward_project_volume(vol, uniform_angles(90, 2.0));
  const float peak = *std::max_element(proj.data.begin(), proj.data.end());
  for (float& v : proj.data) v *= 5.0f / peak;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gain(100.0, 65000.0), off(0.0, 400.0);
  std::vector<double> flat(proj.frame_size()), dark(proj.frame_size());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    dark[k] = off(rng);
    flat[k] = dark[k] + gain(rng);
  }
  const RawFrameSet raw = simulate_raw(proj, flat, dark);
  const ProjectionSet back = to_attenuation(flat_field_correct(raw).normalized).attenuation;
  double worst = 0;
  for (std::size_t i = 0; i < proj.data.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(back.data[i]) - proj.data[i]));
  d << "max abs error " << worst << ", need <= 1e-5";
  return worst <= 1e-5;
}

bool ac8(std::ostringstream& d) {
  PhantomSpec spec;
  spec.components.push_back({ShapeKind::Ellipsoid, {0, 0, 0}, {100, 80, 10}, 1.0});
  spec.components.push_back({ShapeKind::Ellipsoid, {25, -20, 0}, {35, 20, 10}, 0.7});
  spec.components.push_back({ShapeKind::Ellipsoid, {-40, 30, 0}, {15, 25, 10}, -0.5});
  spec.components.push_back({ShapeKind::Ellipsoid, {10, 45, 0}, {9, 9, 10}, 2.0});
  spec.components.push_back({ShapeKind::Ellipsoid, {-50, -35, 0}, {20, 6, 10}, 1.2});
  const GridSize g{256, 256, 1};
  const Volume vol = generate_phantom(spec, g);
  const Sinogram disc = forward_project_slice(vol.slice(0), kAngles);
  const Sinogram exact = analytic_sinogram(spec, g, 0, kAngles);
  double se = 0, peak = 0;
  for (std::size_t i = 0; i < disc.data.size(); ++i) {
    se += (disc.data[i] - exact.data[i]) * static_cast<double>(disc.data[i] - exact.data[i]);
    peak = std::max(peak, static_cast<double>(std::abs(exact.data[i])));
  }
  const double rmse = std::sqrt(se / disc.data.size()) / peak;
  double lo = 1e300, hi = 0;
  for (std::size_t i = 0; i < kAngles.size(); ++i) {
    double m = 0;
    for (float v : disc.row(i)) m += v;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const double spread = (hi - lo) / hi;
  d << "rmse " << rmse << " of max, mass spread " << spread << ", need both <= 0.005";
  return rmse <= 0.005 && spread <= 0.005;
}

bool ac9(std::ostringstream& d) {
  int diameter_bad = 0, morph_bad = 0, cases = 0;
  for (int t = 0; t < 20; ++t) {
    const int nx = 10 + t % 7, ny = 9 + t % 5, nz = 1 + t % 8;
    Mask m = testing::random_mask(nx, ny, nz, 0.1 + 0.04 * t, 500 + t);
    for (int r : {1, 2}) {
      morph_bad += erode(m, r).data != testing::direct_morph(m, r, true).data;
      morph_bad += dilate(m, r).data != testing::direct_morph(m, r, false).data;
    }
    if (t % 2) m = dilate(m, 1);
    if (m.empty() || m.count() > 10000) continue;
    ++cases;
    const Extent fast = max_extent_volume(m), slow = testing::brute_diameter(m);
    diameter_bad += fast.length != slow.length || fast.p1 != slow.p1 || fast.p2 != slow.p2;
  }
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-3.0f, 7.0f);
  double ramp_worst = 0;
  for (int n : {8, 63, 128, 256, 301}) {
    std::vector<float> row(n);
    for (float& v : row) v = u(rng);
    const auto got = RampFilter(n).apply_padded(row);
    const auto want = testing::spatial_ramp(row);
    for (int i = 0; i < n; ++i) ramp_worst = std::max(ramp_worst, std::abs(got[i] - want[i]));
  }
  d << "diameter mismatches " << diameter_bad << "/" << cases << ", morphology mismatches " << morph_bad
    << ", ramp max error " << ramp_worst << " (<= 1e-6)";
  return diameter_bad == 0 && morph_bad == 0 && ramp_worst <= 1e-6;
}

int vamct_run(std::vector<std::string> args) {
  args.insert(args.begin(), "vamct");
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (rc != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return rc;
}

bool ac10(std::ostringstream& d) {
  const fs::path root = VAMCT_TEST_TMP;
  const std::vector<std::string> grid = {"--nx", "64", "--ny", "64", "--nz", "32"};
  const std::vector<std::string> angles = {"--angles", "90", "--step", "2"};
  auto pipeline = [&](const fs::path& dir) {
    fs::remove_all(dir);
    const std::string o = dir.string();
    auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
      a.insert(a.end(), b.begin(), b.end());
      return a;
    };
    int rc = 0;
    rc |= vamct_run(with({"--out", o, "phantom"}, grid));
    rc |= vamct_run(with({"--out", o, "project", "--volume", o + "/phantom.vamv"}, angles));
    rc |= vamct_run({"--out", o, "--seed", "21", "perturb", "--projections", o + "/projections.vamp", "--range", "5"});
    rc |= vamct_run({"--out", o, "track", "--projections", o + "/perturbed.vamp"});
    rc |= vamct_run({"--out", o, "align", "--projections", o + "/perturbed.vamp", "--mode", "virtual_cor"});
    rc |= vamct_run({"--out", o, "reconstruct", "--projections", o + "/aligned.vamp", "--pgm-slice", "16"});
    rc |= vamct_run({"--out", o, "measure", "--volume", o + "/phantom.vamv", "--projections", o + "/projections.vamp"});
    rc |= vamct_run({"--out", o, "sinogram", "--projections", o + "/aligned.vamp", "--level", "16"});
    rc |= vamct_run({"--out", o, "profile", "--projections", o + "/aligned.vamp", "--frame", "0", "--column", "31"});
    rc |= vamct_run({"--out", o, "compare", "--a", o + "/aligned.vamp", "--b", o + "/aligned.vamp"});
    rc |= vamct_run(with(with({"--out", o + "/demo", "--seed", "21", "demo-fig5", "--range", "5"}, grid), angles));
    return rc == 0;
  };
  // Same configuration twice, including paths: snapshot, wipe, rerun.
  const fs::path dir = root / "run";
  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return files;
  };
  if (!pipeline(dir)) {
    d << "pipeline failed";
    return false;
  }
  const auto first = snapshot();
  if (!pipeline(dir)) {
    d << "pipeline failed on rerun";
    return false;
  }
  const auto second = snapshot();
  std::size_t files = first.size(), differ = 0, bad_hash = 0;
  for (const auto& [rel, bytes] : first) {
    const auto it = second.find(rel);
    differ += it == second.end() || it->second != bytes;
    if (rel.ends_with(".manifest.json")) {
      const fs::path parent = fs::path(rel).parent_path();
      const auto m = nlohmann::json::parse(bytes);
      for (const auto& out : m["outputs"]) {
        const auto f = second.find((parent / out["file"].get<std::string>()).string());
        bad_hash += f == second.end() || out["sha256"] != cli::sha256_hex(f->second);
      }
    }
  }
  differ += second.size() != first.size();
  d << files << " files, " << differ << " differ, " << bad_hash << " manifest hash mismatches";
  return files > 0 && differ == 0 && bad_hash == 0;
}

}  // namespace

int main() {
  std::printf("kernels: %s\n", simd::active_kernels().name);
  criterion(1, "max-extent agreement (256^3 tooth)", ac1);
  criterion(2, "sinogram reprojection consistency", ac2);
  criterion(3, "centroid trajectory exactness", ac3);
  criterion(4, "alignment recovery vs never-perturbed reconstruction", ac4);
  criterion(5, "ideal vs virtual-COR mode equivalence", ac5);
  criterion(6, "trajectory fit exactness T(121, -24 deg)", ac6);
  criterion(7, "flat-field round trip", ac7);
  criterion(8, "projector vs closed-form oracle", ac8);
  criterion(9, "brute-force equivalences", ac9);
  criterion(10, "CLI determinism", ac10);
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
