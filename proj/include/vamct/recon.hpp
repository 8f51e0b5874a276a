#pragma once

// Filtered back-projection.

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "vamct/projector.hpp"

namespace vamct {

enum class FilterKind { RamLak, SheppLogan, Hann };

struct FilterSpec {
  FilterKind kind = FilterKind::RamLak;
  double cutoff = 1.0;  // fraction of Nyquist, (0, 1]
};

std::string_view to_string(FilterKind k);
FilterKind parse_filter_kind(std::string_view name);

/// Ramp filter for rows of nu samples. The frequency response is the DFT of
/// the band-limited spatial Ram-Lak kernel (h[0] = 1/4, h[odd k] =
/// -1/(pi k)^2) on a zero-padded length of 2 * next_pow2(nu), times the
/// apodization window, so filtering equals linear convolution with that
/// kernel.
class RampFilter {
public:
  RampFilter(int nu, FilterSpec spec = {});
  ~RampFilter();
  RampFilter(const RampFilter&) = delete;
  RampFilter& operator=(const RampFilter&) = delete;

  int nu() const { return nu_; }
  int padded_length() const { return padded_; }
  /// Real frequency response, padded_length() / 2 + 1 bins.
  const std::vector<double>& response() const { return response_; }

  void apply(std::span<const float> row, std::span<float> out) const;
  /// Full circular convolution over the padded length.
  std::vector<double> apply_padded(std::span<const float> row) const;

private:
  struct Plans;
  int nu_;
  int padded_;
  std::vector<double> response_;
  std::unique_ptr<Plans> plans_;
};

Sinogram ramp_filter(const Sinogram& sino, const FilterSpec& spec = {});

/// Radius (pixels from the rotation axis) of the reconstructable disc.
inline double reconstruction_radius(int n) { return (n - 1) / 2.0; }
bool inside_reconstruction(int x, int y, int n);

/// f(x, y) = pi / n_angles * sum_i q(theta_i, c0 + x cos + y sin), linear
/// interpolation in s; pixels outside the inscribed disc are zero.
Slice backproject(const Sinogram& filtered);

Slice fbp_slice(const Sinogram& sino, const FilterSpec& spec = {});
Volume fbp_volume(const ProjectionSet& set, const FilterSpec& spec = {});

/// Radon transform of a reconstruction for consistency checks.
Sinogram reproject(const Slice& slice, std::span<const double> angles);

}  // namespace vamct
