#pragma once

// Shared grid types and resampling primitives.
//
// Conventions used everywhere in the toolkit:
//   * Images and volumes store x fastest, then y, then z (z = axial level).
//   * The rotation axis projects onto detector column c0 = (nu - 1) / 2.
//   * A projection at angle theta integrates along rays perpendicular to
//     (cos theta, sin theta); the detector abscissa of slice point (x, y),
//     measured in pixels from the rotation axis, is s = x cos theta + y sin theta.
//   * Angles are stored in degrees and converted to radians inside kernels.
//   * Axial index 0 is the top row of every projection image.

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vamct {

class Error : public std::runtime_error {
public:
  enum class Kind { InvalidArgument, DimensionMismatch, Rejected, Io };

  Error(Kind kind, std::string stage, const std::string& message)
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

private:
  Kind kind_;
  std::string stage_;
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Column (or row) onto which the rotation axis projects for an n-wide grid.
inline double rotation_center(int n) { return (n - 1) / 2.0; }

/// 2D scalar image with isotropic pixel spacing in micrometers.
struct Image {
  int width = 0;
  int height = 0;
  double spacing = 1.0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, double spacing_um = 1.0)
      : width(w), height(h), spacing(spacing_um),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f) {}

  std::size_t size() const { return data.size(); }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::span<float> row(int y) { return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)}; }
  std::span<const float> row(int y) const {
    return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }
};

using Slice = Image;

/// 3D scalar grid; z is the axial level.
struct Volume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double spacing = 1.0;
  std::vector<float> data;

  Volume() = default;
  Volume(int x, int y, int z, double spacing_um = 1.0)
      : nx(x), ny(y), nz(z), spacing(spacing_um),
        data(static_cast<std::size_t>(x) * y * z, 0.0f) {}

  std::size_t slice_size() const { return static_cast<std::size_t>(nx) * ny; }
  float& at(int x, int y, int z) { return data[z * slice_size() + static_cast<std::size_t>(y) * nx + x]; }
  float at(int x, int y, int z) const { return data[z * slice_size() + static_cast<std::size_t>(y) * nx + x]; }

  std::span<float> slice_span(int z) { return {data.data() + z * slice_size(), slice_size()}; }
  std::span<const float> slice_span(int z) const { return {data.data() + z * slice_size(), slice_size()}; }

  Slice slice(int z) const;
  void set_slice(int z, const Slice& s);
};

/// Throws if dimensions, spacing or values violate the type invariants.
void validate(const Image& image, const char* stage = "core");
void validate(const Volume& volume, const char* stage = "core");

/// Block-average by an integer factor; spacing is multiplied by the factor.
Image rebin(const Image& image, int factor);

/// output(u, v) = bilinear sample of input at (u - du, v - dv), zero outside.
/// Integer shifts are exact pixel permutations.
Image shift_subpixel(const Image& image, double du, double dv);

/// Span form used for frames stored inside larger buffers. `in` and `out`
/// must not alias.
void shift_subpixel(std::span<const float> in, int width, int height, double du, double dv,
                    std::span<float> out);

}  // namespace vamct
