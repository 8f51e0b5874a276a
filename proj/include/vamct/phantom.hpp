#pragma once

// Synthetic samples with known geometry and their closed-form projections.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vamct/core.hpp"
#include "vamct/projector.hpp"

namespace vamct {

enum class ShapeKind { Ellipsoid, Cuboid };

/// Axis-aligned solid. Center is in voxels relative to the volume center
/// ((n - 1) / 2 on each axis); semi-axes in voxels; densities add.
struct PhantomComponent {
  ShapeKind kind = ShapeKind::Ellipsoid;
  std::array<double, 3> center{};
  std::array<double, 3> semi_axes{};
  double density = 0.0;
};

/// Dense sphere used as a trackable fixed point.
struct Marker {
  std::array<double, 3> center{};
  double radius = 0.0;
  double density = 0.0;
};

struct PhantomSpec {
  std::vector<PhantomComponent> components;
  std::optional<Marker> marker;
};

struct GridSize {
  int nx = 0, ny = 0, nz = 0;
};

/// Radius (voxels, from the rotation axis) every component must stay within.
inline double safe_radius(const GridSize& g) { return std::min(g.nx, g.ny) / 2.0 - 2.0; }

/// Voxel value = sum of densities of every component containing the voxel
/// center. Rejects components leaving the safe cylinder and markers that are
/// not strictly denser than the densest background voxel.
Volume generate_phantom(const PhantomSpec& spec, const GridSize& grid, double spacing_um = 1.0);

/// Exact line integrals through the ellipse cross-sections of axial level
/// `slice_z`. Only ellipsoids (and the spherical marker) have closed forms;
/// cuboids are rejected. nu = max(nx, ny).
Sinogram analytic_sinogram(const PhantomSpec& spec, const GridSize& grid, int slice_z,
                           std::span<const double> angles);

/// Nested-ellipsoid tooth: enamel shell over dentin, low-density pulp
/// chamber, a root below the crown and a dense marker bead in the crown.
/// Proportions scale with the grid.
PhantomSpec tooth_phantom(const GridSize& grid, bool with_marker = true);

/// Line-oriented text format, one component per line:
///   ellipsoid <cx> <cy> <cz> <a> <b> <c> <density>
///   cuboid    <cx> <cy> <cz> <a> <b> <c> <density>
///   marker    <cx> <cy> <cz> <radius> <density>
/// Blank lines and text after '#' are ignored.
PhantomSpec parse_phantom_spec(std::istream& in);
PhantomSpec load_phantom_spec(const std::filesystem::path& path);
void write_phantom_spec(std::ostream& out, const PhantomSpec& spec);

}  // namespace vamct
