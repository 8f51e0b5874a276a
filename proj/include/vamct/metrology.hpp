#pragma once

// Segmentation, maximum-extent measurement, profiles and image similarity.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vamct/core.hpp"
#include "vamct/projector.hpp"

namespace vamct {

/// Boolean grid matching its source; a slice gives nz == 1.
struct Mask {
  int nx = 0, ny = 0, nz = 1;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int x, int y, int z = 1) : nx(x), ny(y), nz(z), data(static_cast<std::size_t>(x) * y * z, 0) {}

  std::size_t index(int x, int y, int z = 0) const {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  bool at(int x, int y, int z = 0) const { return data[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool v) { data[index(x, y, z)] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

struct Morphology {
  int open_radius = 0;
  int close_radius = 0;
};

/// Box structuring element of half-width r along every axis longer than one
/// element; voxels outside the grid count as background.
Mask erode(const Mask& m, int r);
Mask dilate(const Mask& m, int r);

/// (data >= tau), then opening by open_radius, then closing by close_radius.
Mask segment_threshold(const Volume& volume, double tau, const Morphology& morph = {});
Mask segment_threshold(const Image& image, double tau, const Morphology& morph = {});

/// Voxels of the mask with at least one 6-neighbour off the mask (the grid
/// exterior counts as off).
std::vector<std::array<int, 3>> boundary_voxels(const Mask& m);

struct Extent {
  double length = 0.0;  // voxel-center distance in pixels
  std::array<int, 3> p1{};
  std::array<int, 3> p2{};
};

/// Exact diameter of a point set. Among pairs at the maximal distance the
/// lexicographically smallest (p1, p2) with p1 < p2 is returned.
Extent max_pairwise_distance(std::span<const std::array<int, 3>> points);

/// Diameter of the mask's boundary voxels.
Extent max_extent_volume(const Mask& mask);

struct ProjectionExtent {
  Extent extent;  // p = (u, v, 0)
  double angle_deg = 0.0;
  std::size_t frame = 0;
};

/// Largest silhouette (frame >= tau) diameter over all frames; ties go to
/// the smallest angle.
ProjectionExtent max_extent_projections(const ProjectionSet& set, double tau);

struct MeasurementReport {
  Extent volume;
  ProjectionExtent projection;
  double spacing_um = 1.0;
  double difference = 0.0;  // |volume - projection| in pixels
  double tolerance = 1.0;
  bool pass = false;

  double volume_um() const { return volume.length * spacing_um; }
  double projection_um() const { return projection.extent.length * spacing_um; }
};

MeasurementReport compare_extents(const Extent& volume, const ProjectionExtent& projection,
                                  double tolerance_px = 1.0, double spacing_um = 1.0);

/// key value lines, each labelled with the grid it was measured on.
void write_measurement_report(std::ostream& out, const MeasurementReport& report);

/// Column u, top to bottom.
std::vector<float> density_profile(const Image& image, int u);
/// CSV "row,value".
void write_profile_csv(std::ostream& out, std::span<const float> profile);

struct Similarity {
  double nrmse = 0.0;             // RMSE / (max(b) - min(b))
  std::optional<double> pearson;  // empty when either input has zero variance
};

Similarity sinogram_similarity(const Sinogram& a, const Sinogram& b);
Similarity image_similarity(std::span<const float> a, std::span<const float> b);

/// Translation (dx, dy) such that b(x, y) ~= a(x - dx, y - dy): integer
/// argmax of the zero-padded cross-correlation refined per axis by a
/// three-point parabola.
std::array<double, 2> registration_offset(const Slice& a, const Slice& b);

/// Root-mean-square difference divided by the dynamic range of `reference`.
double relative_rmse(std::span<const float> image, std::span<const float> reference);

}  // namespace vamct
