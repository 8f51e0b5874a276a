#pragma once

// Discrete parallel-beam forward projection, raw-frame simulation and
// flat-field correction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vamct/core.hpp"

namespace vamct {

/// One axial level: p(theta_i, u), angle-major, angles in degrees.
struct Sinogram {
  std::vector<double> angles;
  int nu = 0;
  std::vector<float> data;

  Sinogram() = default;
  Sinogram(std::vector<double> angles_deg, int columns)
      : angles(std::move(angles_deg)), nu(columns), data(angles.size() * static_cast<std::size_t>(columns), 0.0f) {}

  std::size_t n_angles() const { return angles.size(); }
  std::span<float> row(std::size_t i) { return {data.data() + i * nu, static_cast<std::size_t>(nu)}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * nu, static_cast<std::size_t>(nu)}; }
  float at(std::size_t i, int u) const { return data[i * nu + u]; }
};

/// Ordered stack of projection images; frame i was taken at angles[i].
struct ProjectionSet {
  std::vector<double> angles;
  int nu = 0;
  int nv = 0;
  double spacing = 1.0;
  std::vector<float> data;

  ProjectionSet() = default;
  ProjectionSet(std::vector<double> angles_deg, int columns, int rows, double spacing_um = 1.0)
      : angles(std::move(angles_deg)), nu(columns), nv(rows), spacing(spacing_um),
        data(angles.size() * static_cast<std::size_t>(columns) * rows, 0.0f) {}

  std::size_t n_angles() const { return angles.size(); }
  std::size_t frame_size() const { return static_cast<std::size_t>(nu) * nv; }
  std::span<float> frame(std::size_t i) { return {data.data() + i * frame_size(), frame_size()}; }
  std::span<const float> frame(std::size_t i) const { return {data.data() + i * frame_size(), frame_size()}; }

  Image image(std::size_t i) const;
  void set_image(std::size_t i, const Image& img);

  /// Detector row v of every frame: the sinogram of axial level v.
  Sinogram sinogram(int v) const;
};

/// Raw detector counts before normalization. Frames are stacked; flats and
/// darks are averaged before correction.
struct RawFrameSet {
  std::vector<double> angles;
  int nu = 0;
  int nv = 0;
  double spacing = 1.0;
  std::vector<double> projections;  // n_angles frames
  std::vector<double> flats;        // n_flats frames
  std::vector<double> darks;        // n_darks frames

  std::size_t frame_size() const { return static_cast<std::size_t>(nu) * nv; }
  std::size_t n_flats() const { return frame_size() ? flats.size() / frame_size() : 0; }
  std::size_t n_darks() const { return frame_size() ? darks.size() / frame_size() : 0; }
};

/// Throws unless angles are strictly increasing within [0, 180) and the data
/// length matches.
void validate_angles(std::span<const double> angles, const char* stage);
void validate(const Sinogram& sino, const char* stage = "projector");
void validate(const ProjectionSet& set, const char* stage = "projector");

/// Angles start, start + step, ... (count of them), in degrees.
std::vector<double> uniform_angles(int count, double step_deg, double start_deg = 0.0);

Sinogram forward_project_slice(const Slice& slice, std::span<const double> angles);
ProjectionSet forward_project_volume(const Volume& volume, std::span<const double> angles);

enum class RawMode { Attenuation, Normalized };

struct RawSimulation {
  RawMode mode = RawMode::Attenuation;
  int n_flats = 5;
  int n_darks = 5;
  std::optional<std::uint64_t> noise_seed;
};

/// frame = t * flat + (1 - t) * dark with t = exp(-p) (attenuation mode) or
/// t = p (normalized mode). `flat_profile` and `dark_level` are nu x nv.
RawFrameSet simulate_raw(const ProjectionSet& proj, std::span<const double> flat_profile,
                         std::span<const double> dark_level, const RawSimulation& options = {});

struct FlatFieldResult {
  ProjectionSet normalized;
  std::size_t clamped = 0;  // detector pixels whose gain was floored
};

/// n = (proj - mean(darks)) / (mean(flats) - mean(darks)); gains below
/// 1e-6 * median(flat) are floored and counted.
FlatFieldResult flat_field_correct(const RawFrameSet& raw);

struct AttenuationResult {
  ProjectionSet attenuation;
  std::size_t clamped = 0;
};

inline constexpr double kTransmissionFloor = 1e-6;

/// -ln(max(n, kTransmissionFloor)), pixelwise.
AttenuationResult to_attenuation(const ProjectionSet& normalized);

}  // namespace vamct
