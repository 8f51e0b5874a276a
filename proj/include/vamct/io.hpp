#pragma once

// Binary containers and image export.
//
//   VAMV  "VAMV" u32 nx ny nz, f32 spacing_um, f32 data[nx*ny*nz] (x fastest)
//   VAMS  "VAMS" u32 n_angles nu, f32 angles[n_angles], f32 data (angle-major)
//   VAMP  "VAMP" u32 n_angles nu nv, f32 angles[n_angles], f32 frames
//         (angle-major, u fastest)
//
// All fields little-endian. Readers validate magic, sizes, angles and
// finiteness. Angles round-trip through f32.

#include <filesystem>
#include <string>

#include "vamct/core.hpp"
#include "vamct/projector.hpp"

namespace vamct {

std::string encode_volume(const Volume& v);
std::string encode_sinogram(const Sinogram& s);
std::string encode_projections(const ProjectionSet& p);

Volume decode_volume(const std::string& bytes);
Sinogram decode_sinogram(const std::string& bytes);
/// VAMP carries no spacing; the result has `spacing_um`.
ProjectionSet decode_projections(const std::string& bytes, double spacing_um = 1.0);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

void save_volume(const std::filesystem::path& path, const Volume& v);
void save_sinogram(const std::filesystem::path& path, const Sinogram& s);
void save_projections(const std::filesystem::path& path, const ProjectionSet& p);
Volume load_volume(const std::filesystem::path& path);
Sinogram load_sinogram(const std::filesystem::path& path);
ProjectionSet load_projections(const std::filesystem::path& path, double spacing_um = 1.0);

struct GrayRange {
  double min = 0.0;
  double max = 0.0;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples) with values
/// mapped linearly from [min, max] of the image to [0, 65535].
std::string encode_pgm16(std::span<const float> data, int width, int height, GrayRange* range = nullptr);
/// Writes `path` and a sidecar `path + ".txt"` holding the value range.
void save_pgm16(const std::filesystem::path& path, const Image& image);

}  // namespace vamct
