#include "vamct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vamct/parallel.hpp"

namespace vamct {

namespace {

double radial_extent(const PhantomComponent& c) {
  const double cx = std::abs(c.center[0]);
  const double cy = std::abs(c.center[1]);
  if (c.kind == ShapeKind::Cuboid) return std::hypot(cx + c.semi_axes[0], cy + c.semi_axes[1]);
  return std::hypot(cx, cy) + std::max(c.semi_axes[0], c.semi_axes[1]);
}

bool contains(const PhantomComponent& c, double x, double y, double z) {
  const double dx = (x - c.center[0]) / c.semi_axes[0];
  const double dy = (y - c.center[1]) / c.semi_axes[1];
  const double dz = (z - c.center[2]) / c.semi_axes[2];
  if (c.kind == ShapeKind::Cuboid) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0 && std::abs(dz) <= 1.0;
  return dx * dx + dy * dy + dz * dz <= 1.0;
}

PhantomComponent as_component(const Marker& m) {
  return {ShapeKind::Ellipsoid, m.center, {m.radius, m.radius, m.radius}, m.density};
}

void add_component(Volume& vol, const PhantomComponent& c) {
  const double ox = rotation_center(vol.nx), oy = rotation_center(vol.ny), oz = rotation_center(vol.nz);
  // Voxel index range of the bounding box, clipped to the grid.
  auto range = [](double center, double half, double origin, int n) {
    int lo = std::max(0, static_cast<int>(std::floor(center - half + origin)));
    int hi = std::min(n - 1, static_cast<int>(std::ceil(center + half + origin)));
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = range(c.center[0], c.semi_axes[0], ox, vol.nx);
  const auto [y0, y1] = range(c.center[1], c.semi_axes[1], oy, vol.ny);
  const auto [z0, z1] = range(c.center[2], c.semi_axes[2], oz, vol.nz);
  if (x0 > x1 || y0 > y1 || z0 > z1) return;
  const float rho = static_cast<float>(c.density);
  parallel_for(static_cast<std::size_t>(z1 - z0 + 1), [&](std::size_t dzi) {
    const int z = z0 + static_cast<int>(dzi);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (contains(c, x - ox, y - oy, z - oz)) vol.at(x, y, z) += rho;
  });
}

void check_component(const PhantomComponent& c, const GridSize& grid, const char* what) {
  for (double a : c.semi_axes)
    if (!(a > 0)) throw Error(Error::Kind::InvalidArgument, "phantom", std::string(what) + " semi-axes must be positive");
  if (!std::isfinite(c.density)) throw Error(Error::Kind::InvalidArgument, "phantom", "density must be finite");
  if (radial_extent(c) > safe_radius(grid))
    throw Error(Error::Kind::Rejected, "phantom",
                std::string(what) + " extends beyond the reconstructable cylinder (radius " +
                    std::to_string(safe_radius(grid)) + " voxels)");
}

}  // namespace

Volume generate_phantom(const PhantomSpec& spec, const GridSize& grid, double spacing_um) {
  if (grid.nx <= 0 || grid.ny <= 0 || grid.nz <= 0)
    throw Error(Error::Kind::InvalidArgument, "phantom", "grid dimensions must be positive");
  if (!(spacing_um > 0)) throw Error(Error::Kind::InvalidArgument, "phantom", "spacing must be positive");
  for (const auto& c : spec.components) check_component(c, grid, "component");
  if (spec.marker) check_component(as_component(*spec.marker), grid, "marker");

  Volume vol(grid.nx, grid.ny, grid.nz, spacing_um);
  for (const auto& c : spec.components) add_component(vol, c);
  if (spec.marker) {
    const float background_max = vol.data.empty() ? 0.0f : *std::max_element(vol.data.begin(), vol.data.end());
    if (!(spec.marker->density > background_max))
      throw Error(Error::Kind::Rejected, "phantom",
                  "marker density must exceed the densest background voxel (" + std::to_string(background_max) + ")");
    add_component(vol, as_component(*spec.marker));
  }
  return vol;
}

Sinogram analytic_sinogram(const PhantomSpec& spec, const GridSize& grid, int slice_z,
                           std::span<const double> angles) {
  validate_angles(angles, "analytic_sinogram");
  std::vector<PhantomComponent> parts;
  for (const auto& c : spec.components) {
    if (c.kind != ShapeKind::Ellipsoid)
      throw Error(Error::Kind::Rejected, "analytic_sinogram", "closed form exists for ellipsoids only");
    parts.push_back(c);
  }
  if (spec.marker) parts.push_back(as_component(*spec.marker));

  const int nu = std::max(grid.nx, grid.ny);
  const double c0 = rotation_center(nu);
  const double z = slice_z - rotation_center(grid.nz);
  Sinogram sino(std::vector<double>(angles.begin(), angles.end()), nu);
  for (const auto& part : parts) {
    const double dz = (z - part.center[2]) / part.semi_axes[2];
    if (dz * dz >= 1.0) continue;
    const double k = std::sqrt(1.0 - dz * dz);
    const double a = part.semi_axes[0] * k;
    const double b = part.semi_axes[1] * k;
    for (std::size_t i = 0; i < angles.size(); ++i) {
      const double th = deg_to_rad(angles[i]);
      const double ct = std::cos(th), st = std::sin(th);
      const double l2 = a * a * ct * ct + b * b * st * st;
      const double shift = part.center[0] * ct + part.center[1] * st;
      auto row = sino.row(i);
      for (int u = 0; u < nu; ++u) {
        const double s = (u - c0) - shift;
        if (s * s < l2) row[u] += static_cast<float>(2.0 * part.density * (a * b / l2) * std::sqrt(l2 - s * s));
      }
    }
  }
  return sino;
}

PhantomSpec tooth_phantom(const GridSize& grid, bool with_marker) {
  const double n = std::min(grid.nx, grid.ny);
  const double h = grid.nz;
  PhantomSpec spec;
  // enamel shell: outer crown minus inner crown
  spec.components.push_back({ShapeKind::Ellipsoid, {0, 0, -0.16 * h}, {0.30 * n, 0.26 * n, 0.20 * h}, 2.0});
  spec.components.push_back({ShapeKind::Ellipsoid, {0, 0, -0.16 * h}, {0.26 * n, 0.22 * n, 0.17 * h}, -0.8});
  // root
  spec.components.push_back({ShapeKind::Ellipsoid, {0.02 * n, 0, 0.20 * h}, {0.17 * n, 0.15 * n, 0.22 * h}, 1.2});
  // pulp chamber
  spec.components.push_back({ShapeKind::Ellipsoid, {0, 0, 0.04 * h}, {0.07 * n, 0.06 * n, 0.22 * h}, -0.9});
  if (with_marker) spec.marker = Marker{{0.12 * n, -0.08 * n, -0.20 * h}, std::max(1.5, 0.025 * n), 10.0};
  return spec;
}

PhantomSpec parse_phantom_spec(std::istream& in) {
  PhantomSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto fail = [&](const std::string& why) {
      throw Error(Error::Kind::InvalidArgument, "phantom", "line " + std::to_string(line_no) + ": " + why);
    };
    if (kind == "ellipsoid" || kind == "cuboid") {
      PhantomComponent c;
      c.kind = kind == "cuboid" ? ShapeKind::Cuboid : ShapeKind::Ellipsoid;
      if (!(ls >> c.center[0] >> c.center[1] >> c.center[2] >> c.semi_axes[0] >> c.semi_axes[1] >> c.semi_axes[2] >>
            c.density))
        fail("expected <cx> <cy> <cz> <a> <b> <c> <density>");
      spec.components.push_back(c);
    } else if (kind == "marker") {
      Marker m;
      if (!(ls >> m.center[0] >> m.center[1] >> m.center[2] >> m.radius >> m.density))
        fail("expected <cx> <cy> <cz> <radius> <density>");
      if (spec.marker) fail("only one marker is allowed");
      spec.marker = m;
    } else {
      fail("unknown component kind '" + kind + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing tokens");
  }
  return spec;
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Io, "phantom", "cannot open " + path.string());
  return parse_phantom_spec(in);
}

void write_phantom_spec(std::ostream& out, const PhantomSpec& spec) {
  out << std::setprecision(17);
  for (const auto& c : spec.components) {
    out << (c.kind == ShapeKind::Cuboid ? "cuboid" : "ellipsoid");
    for (double v : c.center) out << ' ' << v;
    for (double v : c.semi_axes) out << ' ' << v;
    out << ' ' << c.density << '\n';
  }
  if (spec.marker) {
    const auto& m = *spec.marker;
    out << "marker " << m.center[0] << ' ' << m.center[1] << ' ' << m.center[2] << ' ' << m.radius << ' '
        << m.density << '\n';
  }
}

}  // namespace vamct
