#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "vamct/align.hpp"
#include "vamct/io.hpp"
#include "vamct/metrology.hpp"
#include "vamct/motion.hpp"
#include "vamct/parallel.hpp"
#include "vamct/phantom.hpp"
#include "vamct/recon.hpp"
#include "vamct/tracker.hpp"

namespace vamct::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Error::Kind::Io, "manifest", "sha256 failed");
  std::ostringstream ss;
  ss << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) ss << std::setw(2) << static_cast<int>(digest[i]);
  return ss.str();
}

namespace {

// Inputs are hashed as they are read; outputs are staged in memory and only
// written once the command has succeeded.
class Run {
public:
  Run(std::string command, fs::path out, std::uint64_t seed) : command_(std::move(command)), out_(std::move(out)), seed_(seed) {}

  json params = json::object();

  std::string input(const std::string& path) {
    if (path.empty()) throw Error(Error::Kind::InvalidArgument, "cli", "missing required input path");
    if (!fs::is_regular_file(path)) throw Error(Error::Kind::Io, "cli", "input not found: " + path);
    std::string bytes = read_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    return bytes;
  }

  void emit(const std::string& name, std::string bytes) { outputs_.emplace_back(name, std::move(bytes)); }
  void emit_text(const std::string& name, const std::ostringstream& ss) { emit(name, ss.str()); }

  void commit(std::ostream& log) {
    std::vector<fs::path> written;
    try {
      fs::create_directories(out_);
      json outs = json::array();
      for (const auto& [name, bytes] : outputs_) {
        const fs::path p = out_ / name;
        write_file_atomic(p, bytes);
        written.push_back(p);
        outs.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
      }
      json manifest = {{"tool", "vamct"},     {"command", command_}, {"seed", seed_},
                       {"parameters", params}, {"inputs", inputs_},   {"outputs", outs}};
      const fs::path mp = out_ / (command_ + ".manifest.json");
      write_file_atomic(mp, manifest.dump(2) + "\n");
      written.push_back(mp);
    } catch (...) {
      for (const auto& p : written) {
        std::error_code ec;
        fs::remove(p, ec);
      }
      throw;
    }
    for (const auto& [name, bytes] : outputs_) log << (out_ / name).string() << '\n';
  }

private:
  std::string command_;
  fs::path out_;
  std::uint64_t seed_;
  json inputs_ = json::array();
  std::vector<std::pair<std::string, std::string>> outputs_;
};

// ---- shared pipeline steps (used by both the subcommands and the demo) ----

struct PhantomOptions {
  std::string spec_path;
  int nx = 256, ny = 256, nz = 128;
  double spacing = 1.0;
  bool no_marker = false;
};

struct AngleOptions {
  int count = 360;
  double step = 0.5;
  double start = 0.0;
};

struct MotionOptions {
  double range = 15.0;
  std::optional<double> rx, ry, rz;
  std::string mode = "world";
};

struct TrackOptions {
  std::string method = "marker";
  double background_fraction = 0.05;
  std::optional<double> background_threshold;
  int marker_window = 21;

  TrackParams params() const {
    TrackParams p;
    p.background_fraction = background_fraction;
    p.background_threshold = background_threshold;
    p.marker_window = marker_window;
    return p;
  }
};

struct FilterOptions {
  std::string filter = "ram-lak";
  double cutoff = 1.0;
  FilterSpec spec() const { return {parse_filter_kind(filter), cutoff}; }
};

// Angles are stored as f32 on disk; rounding them up front keeps in-memory
// pipelines identical to file-based ones.
std::vector<double> make_angles(const AngleOptions& a) {
  if (a.count < 2) throw Error(Error::Kind::InvalidArgument, "cli", "need at least 2 angles");
  auto angles = uniform_angles(a.count, a.step, a.start);
  for (double& x : angles) x = static_cast<float>(x);
  validate_angles(angles, "cli");
  return angles;
}

MotionSchedule make_schedule(const MotionOptions& m, std::uint64_t seed, int n_angles) {
  const auto sym = [](double r) { return AxisRange{-std::abs(r), std::abs(r)}; };
  const std::array<AxisRange, 3> ranges = {sym(m.rx.value_or(m.range)), sym(m.ry.value_or(m.range)),
                                           sym(m.rz.value_or(m.range))};
  MotionMode mode;
  if (m.mode == "world") mode = MotionMode::World;
  else if (m.mode == "detector") mode = MotionMode::Detector;
  else throw Error(Error::Kind::InvalidArgument, "perturb", "unknown motion mode '" + m.mode + "'");
  return sample_schedule(seed, n_angles, ranges, mode);
}

PhantomSpec phantom_spec(Run& run, const PhantomOptions& o) {
  const GridSize g{o.nx, o.ny, o.nz};
  if (o.spec_path.empty()) return tooth_phantom(g, !o.no_marker);
  std::istringstream in(run.input(o.spec_path));
  return parse_phantom_spec(in);
}

std::string text_of(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

ProjectionSet load_projections_input(Run& run, const std::string& path) { return decode_projections(run.input(path)); }

Volume load_volume_input(Run& run, const std::string& path) { return decode_volume(run.input(path)); }

std::string magic_of(const std::string& bytes) { return bytes.substr(0, std::min<std::size_t>(4, bytes.size())); }

Slice volume_slice_at(const Volume& v, double z) {
  const int z0 = static_cast<int>(std::floor(z));
  const double w = z - z0;
  Slice s(v.nx, v.ny, v.spacing);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const double a = (z0 >= 0 && z0 < v.nz) ? v.slice_span(z0)[i] : 0.0;
    const double b = (z0 + 1 >= 0 && z0 + 1 < v.nz) ? v.slice_span(z0 + 1)[i] : 0.0;
    s.data[i] = static_cast<float>(w == 0.0 ? a : (1.0 - w) * a + w * b);
  }
  return s;
}

struct Registered {
  std::array<double, 2> offset{};
  double rmse = 0.0;
};

// Registers `test` onto `reference` by translation and returns the relative
// RMSE after moving it back.
Registered registered_error(const Slice& reference, const Slice& test) {
  Registered r;
  r.offset = registration_offset(reference, test);
  const Slice back = shift_subpixel(test, -r.offset[0], -r.offset[1]);
  r.rmse = relative_rmse(back.data, reference.data);
  return r;
}

Image sinogram_image(const Sinogram& s) {
  Image img(s.nu, static_cast<int>(s.n_angles()));
  img.data = s.data;
  return img;
}

// ---- subcommands ----

struct Common {
  std::string out = ".";
  std::uint64_t seed = 0;
  int threads = 0;
};

void cmd_phantom(Run& run, const PhantomOptions& o) {
  const GridSize g{o.nx, o.ny, o.nz};
  const PhantomSpec spec = phantom_spec(run, o);
  const Volume vol = generate_phantom(spec, g, o.spacing);
  run.params = {{"spec", o.spec_path.empty() ? "tooth" : o.spec_path}, {"nx", o.nx}, {"ny", o.ny}, {"nz", o.nz},
                {"spacing_um", o.spacing}, {"marker", spec.marker.has_value()}};
  run.emit("phantom.vamv", encode_volume(vol));
  run.emit("phantom.txt", text_of([&](std::ostream& s) { write_phantom_spec(s, spec); }));
}

void cmd_project(Run& run, const std::string& volume_path, const AngleOptions& a) {
  const Volume vol = load_volume_input(run, volume_path);
  const auto angles = make_angles(a);
  run.params = {{"angles", a.count}, {"step_deg", a.step}, {"start_deg", a.start}};
  run.emit("projections.vamp", encode_projections(forward_project_volume(vol, angles)));
}

void cmd_perturb(Run& run, const std::string& path, const MotionOptions& m, std::uint64_t seed) {
  const ProjectionSet set = load_projections_input(run, path);
  const MotionSchedule schedule = make_schedule(m, seed, static_cast<int>(set.n_angles()));
  run.params = {{"mode", m.mode},
                {"range_x", m.rx.value_or(m.range)},
                {"range_y", m.ry.value_or(m.range)},
                {"range_z", m.rz.value_or(m.range)}};
  run.emit("perturbed.vamp", encode_projections(apply_motion(set, schedule)));
  run.emit("schedule.csv", text_of([&](std::ostream& s) { write_schedule_csv(s, schedule, set.angles); }));
}

void cmd_track(Run& run, const std::string& path, const TrackOptions& t) {
  const ProjectionSet set = load_projections_input(run, path);
  const TrackMethod method = parse_track_method(t.method);
  const FixedPointTrack track = track_fixed_points(set, method, t.params());
  run.params = {{"method", t.method}, {"background_fraction", t.background_fraction}, {"marker_window", t.marker_window}};
  if (t.background_threshold) run.params["background_threshold"] = *t.background_threshold;
  run.emit("track.csv", text_of([&](std::ostream& s) { write_track_csv(s, track, set.angles); }));
}

void cmd_align(Run& run, const std::string& path, const TrackOptions& t, const std::string& mode_name) {
  const ProjectionSet set = load_projections_input(run, path);
  const AlignMode mode = parse_align_mode(mode_name);
  const AlignmentResult r = vam_align(set, parse_track_method(t.method), mode, t.params());
  run.params = {{"method", t.method}, {"mode", std::string(to_string(mode))},
                {"background_fraction", t.background_fraction}, {"marker_window", t.marker_window}};
  run.emit("aligned.vamp", encode_projections(r.set));
  run.emit("alignment.csv", text_of([&](std::ostream& s) { write_report_csv(s, r.report, set.angles); }));
  run.emit("alignment.txt", text_of([&](std::ostream& s) { write_report_summary(s, r.report); }));
}

void cmd_reconstruct(Run& run, const std::string& path, const FilterOptions& f, double spacing, int pgm_slice) {
  const ProjectionSet set = decode_projections(run.input(path), spacing);
  const Volume vol = fbp_volume(set, f.spec());
  run.params = {{"filter", f.filter}, {"cutoff", f.cutoff}, {"spacing_um", spacing}};
  run.emit("recon.vamv", encode_volume(vol));
  if (pgm_slice >= 0) {
    if (pgm_slice >= vol.nz) throw Error(Error::Kind::InvalidArgument, "reconstruct", "slice out of range");
    run.params["pgm_slice"] = pgm_slice;
    GrayRange range;
    const Slice s = vol.slice(pgm_slice);
    run.emit("recon_slice.pgm", encode_pgm16(s.data, s.width, s.height, &range));
    std::ostringstream side;
    side << std::setprecision(9) << "min " << range.min << "\nmax " << range.max << '\n';
    run.emit_text("recon_slice.pgm.txt", side);
  }
}

struct MeasureOptions {
  std::string volume, projections;
  double tau_volume = 0.6;
  double tau_projection = 0.5;
  int open = 1, close = 1;
  double tolerance = 1.0;
  double spacing = 1.0;
};

void cmd_measure(Run& run, const MeasureOptions& o) {
  const Volume vol = load_volume_input(run, o.volume);
  const ProjectionSet set = load_projections_input(run, o.projections);
  const Extent ev = max_extent_volume(segment_threshold(vol, o.tau_volume, {o.open, o.close}));
  const ProjectionExtent ep = max_extent_projections(set, o.tau_projection);
  const MeasurementReport rep = compare_extents(ev, ep, o.tolerance, o.spacing);
  run.params = {{"tau_volume", o.tau_volume}, {"tau_projection", o.tau_projection}, {"open_radius", o.open},
                {"close_radius", o.close},    {"tolerance_px", o.tolerance},        {"spacing_um", o.spacing}};
  run.emit("measurement.txt", text_of([&](std::ostream& s) { write_measurement_report(s, rep); }));
}

void cmd_flatfield(Run& run, const std::string& raw_path, const std::string& flats_path, const std::string& darks_path,
                   bool attenuation) {
  const ProjectionSet proj = load_projections_input(run, raw_path);
  const ProjectionSet flats = load_projections_input(run, flats_path);
  const ProjectionSet darks = load_projections_input(run, darks_path);
  if (flats.nu != proj.nu || flats.nv != proj.nv || darks.nu != proj.nu || darks.nv != proj.nv)
    throw Error(Error::Kind::DimensionMismatch, "flatfield", "flat/dark frames differ in size from the projections");
  RawFrameSet raw;
  raw.angles = proj.angles;
  raw.nu = proj.nu;
  raw.nv = proj.nv;
  raw.projections.assign(proj.data.begin(), proj.data.end());
  raw.flats.assign(flats.data.begin(), flats.data.end());
  raw.darks.assign(darks.data.begin(), darks.data.end());
  const FlatFieldResult ff = flat_field_correct(raw);
  std::size_t clamped_t = 0;
  ProjectionSet result = ff.normalized;
  if (attenuation) {
    AttenuationResult a = to_attenuation(ff.normalized);
    clamped_t = a.clamped;
    result = std::move(a.attenuation);
  }
  run.params = {{"output", attenuation ? "attenuation" : "normalized"}};
  run.emit("corrected.vamp", encode_projections(result));
  std::ostringstream s;
  s << "gain_floored_pixels " << ff.clamped << "\ntransmission_floored_pixels " << clamped_t << '\n';
  run.emit_text("flatfield.txt", s);
}

struct CompareOptions {
  std::string a, b;
  int slice = -1;
  double dz = 0.0;
  double tolerance = 0.03;
  double min_pearson = 0.99;
  double max_nrmse = 0.05;
};

void cmd_compare(Run& run, const CompareOptions& o) {
  const std::string ba = run.input(o.a);
  const std::string bb = run.input(o.b);
  if (magic_of(ba) != magic_of(bb)) throw Error(Error::Kind::InvalidArgument, "compare", "inputs have different formats");
  std::ostringstream s;
  s << std::setprecision(10);
  const std::string kind = magic_of(ba);
  if (kind == "VAMV") {
    const Volume test = decode_volume(ba);
    const Volume ref = decode_volume(bb);
    if (test.nx != ref.nx || test.ny != ref.ny || test.nz != ref.nz)
      throw Error(Error::Kind::DimensionMismatch, "compare", "volumes differ in shape");
    const int z = o.slice >= 0 ? o.slice : ref.nz / 2;
    if (z >= ref.nz) throw Error(Error::Kind::InvalidArgument, "compare", "slice out of range");
    const Registered r = registered_error(ref.slice(z), volume_slice_at(test, z + o.dz));
    run.params = {{"slice", z}, {"dz", o.dz}, {"tolerance", o.tolerance}};
    s << "kind volume\nslice " << z << "\ndz " << o.dz << "\noffset_x " << r.offset[0] << "\noffset_y " << r.offset[1]
      << "\nrelative_rmse " << r.rmse << "\ntolerance " << o.tolerance << "\nresult "
      << (r.rmse <= o.tolerance ? "pass" : "fail") << '\n';
  } else if (kind == "VAMS" || kind == "VAMP") {
    Similarity sim;
    if (kind == "VAMS") {
      sim = sinogram_similarity(decode_sinogram(ba), decode_sinogram(bb));
    } else {
      const ProjectionSet pa = decode_projections(ba), pb = decode_projections(bb);
      if (pa.nu != pb.nu || pa.nv != pb.nv || pa.n_angles() != pb.n_angles())
        throw Error(Error::Kind::DimensionMismatch, "compare", "projection sets differ in shape");
      sim = image_similarity(pa.data, pb.data);
    }
    run.params = {{"min_pearson", o.min_pearson}, {"max_nrmse", o.max_nrmse}};
    const bool pass = sim.pearson && *sim.pearson >= o.min_pearson && sim.nrmse <= o.max_nrmse;
    s << "kind " << (kind == "VAMS" ? "sinogram" : "projections") << "\nnrmse " << sim.nrmse << "\npearson ";
    if (sim.pearson) s << *sim.pearson;
    else s << "undefined";
    s << "\nresult " << (pass ? "pass" : "fail") << '\n';
  } else {
    throw Error(Error::Kind::InvalidArgument, "compare", "unsupported input format '" + kind + "'");
  }
  run.emit_text("compare.txt", s);
}

void cmd_sinogram(Run& run, const std::string& projections, const std::string& volume, int level,
                  const AngleOptions& a) {
  Sinogram sino;
  if (!projections.empty() == !volume.empty())
    throw Error(Error::Kind::InvalidArgument, "sinogram", "give exactly one of --projections or --volume");
  if (!projections.empty()) {
    const ProjectionSet set = load_projections_input(run, projections);
    if (level < 0 || level >= set.nv) throw Error(Error::Kind::InvalidArgument, "sinogram", "row out of range");
    sino = set.sinogram(level);
    run.params = {{"source", "projections"}, {"row", level}};
  } else {
    const Volume vol = load_volume_input(run, volume);
    if (level < 0 || level >= vol.nz) throw Error(Error::Kind::InvalidArgument, "sinogram", "slice out of range");
    sino = reproject(vol.slice(level), make_angles(a));
    run.params = {{"source", "volume"}, {"slice", level}, {"angles", a.count}, {"step_deg", a.step}, {"start_deg", a.start}};
  }
  run.emit("sinogram.vams", encode_sinogram(sino));
  GrayRange range;
  run.emit("sinogram.pgm", encode_pgm16(sino.data, sino.nu, static_cast<int>(sino.n_angles()), &range));
}

void cmd_profile(Run& run, const std::string& path, int frame, int column) {
  const ProjectionSet set = load_projections_input(run, path);
  if (frame < 0 || static_cast<std::size_t>(frame) >= set.n_angles())
    throw Error(Error::Kind::InvalidArgument, "profile", "frame out of range");
  const auto profile = density_profile(set.image(frame), column);
  run.params = {{"frame", frame}, {"angle_deg", set.angles[frame]}, {"column", column}};
  run.emit("profile.csv", text_of([&](std::ostream& s) { write_profile_csv(s, profile); }));
}

struct DemoOptions {
  PhantomOptions phantom;
  AngleOptions angles;
  MotionOptions motion;
  TrackOptions track;
  FilterOptions filter;
};

void emit_pgm(Run& run, const std::string& name, const Image& img, std::ostringstream& ranges) {
  GrayRange range;
  run.emit(name, encode_pgm16(img.data, img.width, img.height, &range));
  ranges << name << ' ' << range.min << ' ' << range.max << '\n';
}

void cmd_demo(Run& run, const DemoOptions& o, std::uint64_t seed) {
  const GridSize g{o.phantom.nx, o.phantom.ny, o.phantom.nz};
  const PhantomSpec spec = phantom_spec(run, o.phantom);
  const Volume vol = generate_phantom(spec, g, o.phantom.spacing);
  const auto angles = make_angles(o.angles);
  const ProjectionSet clean = forward_project_volume(vol, angles);
  const MotionSchedule schedule = make_schedule(o.motion, seed, static_cast<int>(angles.size()));
  const ProjectionSet perturbed = apply_motion(clean, schedule);
  const TrackMethod method = parse_track_method(o.track.method);
  const TrackParams tp = o.track.params();

  const AlignmentResult ideal = vam_align(perturbed, method, AlignMode::Ideal, tp);
  const AlignmentResult vcor = vam_align(perturbed, method, AlignMode::VirtualCor, tp);
  const VerticalAlignment common = vertical_align(perturbed, track_fixed_points(perturbed, method, tp));

  const FilterSpec fs = o.filter.spec();
  const Volume rec_ideal = fbp_volume(ideal.set, fs);
  const Volume rec_vcor = fbp_volume(vcor.set, fs);

  // Ground truth on the same common layer: the clean set moved to the
  // aligned target row.
  const FixedPointTrack clean_track = track_fixed_points(clean, method, tp);
  double clean_row = 0.0;
  std::size_t nvalid = 0;
  for (const auto& p : clean_track.points)
    if (p.valid) {
      clean_row += p.v;
      ++nvalid;
    }
  clean_row /= static_cast<double>(nvalid);
  const double dz = ideal.report.target_row - clean_row;
  ProjectionSet clean_layer = clean;
  for (std::size_t i = 0; i < clean.n_angles(); ++i)
    shift_subpixel(clean.frame(i), clean.nu, clean.nv, 0.0, dz, clean_layer.frame(i));
  const Volume truth = fbp_volume(clean_layer, fs);
  const Volume rec_bad = fbp_volume(perturbed, fs);

  const int row = std::clamp(static_cast<int>(std::lround(ideal.report.target_row)), 0, clean.nv - 1);
  const Registered e_ideal = registered_error(truth.slice(row), rec_ideal.slice(row));
  const Registered e_vcor = registered_error(truth.slice(row), rec_vcor.slice(row));
  const Registered e_bad = registered_error(truth.slice(row), volume_slice_at(rec_bad, row + dz));
  const Registered e_modes = registered_error(rec_ideal.slice(row), rec_vcor.slice(row));

  run.params = {{"nx", o.phantom.nx},       {"ny", o.phantom.ny},         {"nz", o.phantom.nz},
                {"angles", o.angles.count}, {"step_deg", o.angles.step},  {"start_deg", o.angles.start},
                {"motion_mode", o.motion.mode}, {"range", o.motion.range}, {"method", o.track.method},
                {"filter", o.filter.filter},    {"cutoff", o.filter.cutoff}};

  std::ostringstream ranges;
  ranges << std::setprecision(9);
  emit_pgm(run, "misaligned_sinogram.pgm", sinogram_image(perturbed.sinogram(row)), ranges);
  emit_pgm(run, "common_layer_sinogram.pgm", sinogram_image(common.set.sinogram(row)), ranges);
  emit_pgm(run, "ideal_sinogram.pgm", sinogram_image(ideal.set.sinogram(row)), ranges);
  emit_pgm(run, "virtual_cor_sinogram.pgm", sinogram_image(vcor.set.sinogram(row)), ranges);
  emit_pgm(run, "ideal_recon.pgm", rec_ideal.slice(row), ranges);
  emit_pgm(run, "virtual_cor_recon.pgm", rec_vcor.slice(row), ranges);
  run.emit_text("pgm_ranges.txt", ranges);

  run.emit("perturbed.vamp", encode_projections(perturbed));
  run.emit("schedule.csv", text_of([&](std::ostream& s) { write_schedule_csv(s, schedule, angles); }));
  run.emit("recon_ideal.vamv", encode_volume(rec_ideal));
  run.emit("recon_virtual_cor.vamv", encode_volume(rec_vcor));
  run.emit("alignment_ideal.csv", text_of([&](std::ostream& s) { write_report_csv(s, ideal.report, angles); }));
  run.emit("alignment_ideal.txt", text_of([&](std::ostream& s) { write_report_summary(s, ideal.report); }));
  run.emit("alignment_virtual_cor.csv", text_of([&](std::ostream& s) { write_report_csv(s, vcor.report, angles); }));
  run.emit("alignment_virtual_cor.txt", text_of([&](std::ostream& s) { write_report_summary(s, vcor.report); }));

  std::ostringstream s;
  s << std::setprecision(10);
  s << "slice " << row << "\nground_truth_row_offset " << dz << '\n';
  s << "rmse_ideal " << e_ideal.rmse << "\nrmse_virtual_cor " << e_vcor.rmse << "\nrmse_unaligned " << e_bad.rmse << '\n';
  s << "mode_offset_x " << e_modes.offset[0] << "\nmode_offset_y " << e_modes.offset[1] << '\n';
  s << "mode_expected_x " << -ideal.report.fitted.a << "\nmode_expected_y " << -ideal.report.fitted.b << '\n';
  s << "mode_rmse " << e_modes.rmse << '\n';
  s << "result " << (std::max(e_ideal.rmse, e_vcor.rmse) <= 0.03 ? "pass" : "fail") << '\n';
  run.emit_text("demo.txt", s);
}

void add_phantom_options(CLI::App* c, PhantomOptions& o) {
  c->add_option("--spec", o.spec_path, "phantom spec file (default: built-in tooth)");
  c->add_option("--nx", o.nx)->check(CLI::PositiveNumber);
  c->add_option("--ny", o.ny)->check(CLI::PositiveNumber);
  c->add_option("--nz", o.nz)->check(CLI::PositiveNumber);
  c->add_option("--spacing", o.spacing, "micrometers per voxel")->check(CLI::PositiveNumber);
  c->add_flag("--no-marker", o.no_marker, "omit the marker bead from the built-in tooth");
}

void add_angle_options(CLI::App* c, AngleOptions& a) {
  c->add_option("--angles", a.count, "number of projection angles");
  c->add_option("--step", a.step, "angular step in degrees");
  c->add_option("--start", a.start, "first angle in degrees");
}

void add_motion_options(CLI::App* c, MotionOptions& m) {
  c->add_option("--range", m.range, "uniform +/- range on every axis (pixels)");
  c->add_option("--range-x", m.rx);
  c->add_option("--range-y", m.ry);
  c->add_option("--range-z", m.rz);
  c->add_option("--motion-mode", m.mode, "world | detector");
}

void add_track_options(CLI::App* c, TrackOptions& t) {
  c->add_option("--method", t.method, "apex | centroid | marker");
  c->add_option("--background-fraction", t.background_fraction);
  c->add_option("--background-threshold", t.background_threshold);
  c->add_option("--marker-window", t.marker_window);
}

void add_filter_options(CLI::App* c, FilterOptions& f) {
  c->add_option("--filter", f.filter, "ram-lak | shepp-logan | hann");
  c->add_option("--cutoff", f.cutoff, "fraction of Nyquist");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parallel-beam CT toolkit: phantoms, projection, motion, alignment, reconstruction, metrology", "vamct"};
  app.set_config("--config", "", "TOML/INI configuration file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  std::optional<int> threads;
  app.add_option("--out", common.out, "output directory");
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--threads", threads, "worker threads (0 = auto; default VAMCT_THREADS)");

  PhantomOptions phantom;
  auto* c_phantom = app.add_subcommand("phantom", "generate a phantom volume");
  add_phantom_options(c_phantom, phantom);

  std::string volume_path, proj_path;
  AngleOptions angles;
  auto* c_project = app.add_subcommand("project", "forward-project a volume");
  c_project->add_option("--volume", volume_path)->required();
  add_angle_options(c_project, angles);

  MotionOptions motion;
  auto* c_perturb = app.add_subcommand("perturb", "apply random per-projection motion");
  c_perturb->add_option("--projections", proj_path)->required();
  add_motion_options(c_perturb, motion);

  TrackOptions track;
  auto* c_track = app.add_subcommand("track", "track the fixed point");
  c_track->add_option("--projections", proj_path)->required();
  add_track_options(c_track, track);

  std::string align_mode = "ideal";
  auto* c_align = app.add_subcommand("align", "virtual alignment");
  c_align->add_option("--projections", proj_path)->required();
  c_align->add_option("--mode", align_mode, "ideal | virtual_cor");
  add_track_options(c_align, track);

  FilterOptions filter;
  double spacing = 1.0;
  int pgm_slice = -1;
  auto* c_recon = app.add_subcommand("reconstruct", "filtered back-projection");
  c_recon->add_option("--projections", proj_path)->required();
  c_recon->add_option("--spacing", spacing)->check(CLI::PositiveNumber);
  c_recon->add_option("--pgm-slice", pgm_slice, "also export this axial slice as PGM");
  add_filter_options(c_recon, filter);

  MeasureOptions measure;
  auto* c_measure = app.add_subcommand("measure", "maximum-extent comparison");
  c_measure->add_option("--volume", measure.volume)->required();
  c_measure->add_option("--projections", measure.projections)->required();
  c_measure->add_option("--tau-volume", measure.tau_volume);
  c_measure->add_option("--tau-projection", measure.tau_projection);
  c_measure->add_option("--open", measure.open);
  c_measure->add_option("--close", measure.close);
  c_measure->add_option("--tolerance", measure.tolerance);
  c_measure->add_option("--spacing", measure.spacing);

  std::string raw_path, flats_path, darks_path;
  bool attenuation = false;
  auto* c_flat = app.add_subcommand("flatfield", "flat-field correction of raw frames");
  c_flat->add_option("--raw", raw_path)->required();
  c_flat->add_option("--flats", flats_path)->required();
  c_flat->add_option("--darks", darks_path)->required();
  c_flat->add_flag("--attenuation", attenuation, "output -ln of the normalized frames");

  CompareOptions compare;
  auto* c_compare = app.add_subcommand("compare", "compare two volumes, sinograms or projection sets");
  c_compare->add_option("--a", compare.a, "test data")->required();
  c_compare->add_option("--b", compare.b, "reference data")->required();
  c_compare->add_option("--slice", compare.slice, "reference slice (volumes; default middle)");
  c_compare->add_option("--dz", compare.dz, "axial offset of the test volume in slices");
  c_compare->add_option("--tolerance", compare.tolerance, "relative RMSE bound (volumes)");
  c_compare->add_option("--min-pearson", compare.min_pearson);
  c_compare->add_option("--max-nrmse", compare.max_nrmse);

  int level = -1;
  std::string sino_volume;
  auto* c_sino = app.add_subcommand("sinogram", "extract or reproject one sinogram");
  c_sino->add_option("--projections", proj_path);
  c_sino->add_option("--volume", sino_volume);
  c_sino->add_option("--level", level, "detector row or volume slice")->required();
  add_angle_options(c_sino, angles);

  int frame = 0, column = 0;
  auto* c_profile = app.add_subcommand("profile", "density profile along a detector column");
  c_profile->add_option("--projections", proj_path)->required();
  c_profile->add_option("--frame", frame)->required();
  c_profile->add_option("--column", column)->required();

  DemoOptions demo;
  auto* c_demo = app.add_subcommand("demo-fig5", "end-to-end alignment demonstration");
  add_phantom_options(c_demo, demo.phantom);
  add_angle_options(c_demo, demo.angles);
  add_motion_options(c_demo, demo.motion);
  add_track_options(c_demo, demo.track);
  add_filter_options(c_demo, demo.filter);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "cli: " << e.what() << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (threads) {
      if (*threads < 0) throw Error(Error::Kind::InvalidArgument, "cli", "--threads must be >= 0");
      set_thread_count(*threads);
    }
    Run run(name, common.out, common.seed);
    if (sub == c_phantom) cmd_phantom(run, phantom);
    else if (sub == c_project) cmd_project(run, volume_path, angles);
    else if (sub == c_perturb) cmd_perturb(run, proj_path, motion, common.seed);
    else if (sub == c_track) cmd_track(run, proj_path, track);
    else if (sub == c_align) cmd_align(run, proj_path, track, align_mode);
    else if (sub == c_recon) cmd_reconstruct(run, proj_path, filter, spacing, pgm_slice);
    else if (sub == c_measure) cmd_measure(run, measure);
    else if (sub == c_flat) cmd_flatfield(run, raw_path, flats_path, darks_path, attenuation);
    else if (sub == c_compare) cmd_compare(run, compare);
    else if (sub == c_sino) cmd_sinogram(run, proj_path, sino_volume, level, angles);
    else if (sub == c_profile) cmd_profile(run, proj_path, frame, column);
    else if (sub == c_demo) cmd_demo(run, demo, common.seed);
    run.commit(out);
  } catch (const Error& e) {
    err << e.stage() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace vamct::cli
