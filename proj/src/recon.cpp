#include "vamct/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fftw_util.hpp"
#include "vamct/parallel.hpp"
#include "vamct/simd/kernels.hpp"

namespace vamct {

std::string_view to_string(FilterKind k) {
  switch (k) {
    case FilterKind::RamLak: return "ram-lak";
    case FilterKind::SheppLogan: return "shepp-logan";
    case FilterKind::Hann: return "hann";
  }
  return "?";
}

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "ram-lak" || name == "ramlak") return FilterKind::RamLak;
  if (name == "shepp-logan") return FilterKind::SheppLogan;
  if (name == "hann") return FilterKind::Hann;
  throw Error(Error::Kind::InvalidArgument, "recon", "unknown filter '" + std::string(name) + "'");
}

namespace {

using detail::FftwBuffer;
constexpr auto alloc_real = detail::fftw_real;
constexpr auto alloc_complex = detail::fftw_complex_buf;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double window(FilterKind kind, double w, double cutoff) {
  if (w > cutoff) return 0.0;
  switch (kind) {
    case FilterKind::RamLak: return 1.0;
    case FilterKind::SheppLogan: {
      const double x = std::numbers::pi * w / (2.0 * cutoff);
      return x == 0.0 ? 1.0 : std::sin(x) / x;
    }
    case FilterKind::Hann: return 0.5 * (1.0 + std::cos(std::numbers::pi * w / cutoff));
  }
  return 1.0;
}

}  // namespace

struct RampFilter::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

RampFilter::RampFilter(int nu, FilterSpec spec) : nu_(nu), padded_(2 * next_pow2(std::max(nu, 1))) {
  if (nu < 4) throw Error(Error::Kind::InvalidArgument, "recon", "ramp filter needs at least 4 detector columns");
  if (!(spec.cutoff > 0.0 && spec.cutoff <= 1.0))
    throw Error(Error::Kind::InvalidArgument, "recon", "filter cutoff must lie in (0, 1]");
  const int p = padded_;
  const int bins = p / 2 + 1;
  auto real = alloc_real(p);
  auto freq = alloc_complex(bins);
  plans_ = std::make_unique<Plans>();
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_1d(p, real.get(), freq.get(), FFTW_ESTIMATE);
    plans_->inverse = fftw_plan_dft_c2r_1d(p, freq.get(), real.get(), FFTW_ESTIMATE);
  }

  // Spatial Ram-Lak kernel laid out circularly.
  for (int k = 0; k < p; ++k) {
    const int lag = k <= p / 2 ? k : k - p;
    if (lag == 0) real[k] = 0.25;
    else if (lag % 2 != 0) real[k] = -1.0 / (std::numbers::pi * std::numbers::pi * lag * lag);
    else real[k] = 0.0;
  }
  fftw_execute_dft_r2c(plans_->forward, real.get(), freq.get());
  response_.resize(bins);
  for (int k = 0; k < bins; ++k) {
    const double w = static_cast<double>(k) / (p / 2);
    response_[k] = freq[k][0] * window(spec.kind, w, spec.cutoff);
  }
}

RampFilter::~RampFilter() = default;

std::vector<double> RampFilter::apply_padded(std::span<const float> row) const {
  if (static_cast<int>(row.size()) != nu_)
    throw Error(Error::Kind::DimensionMismatch, "recon", "row length does not match the filter");
  const int p = padded_;
  const int bins = p / 2 + 1;
  auto real = alloc_real(p);
  auto freq = alloc_complex(bins);
  std::fill(real.get(), real.get() + p, 0.0);
  std::copy(row.begin(), row.end(), real.get());
  fftw_execute_dft_r2c(plans_->forward, real.get(), freq.get());
  for (int k = 0; k < bins; ++k) {
    freq[k][0] *= response_[k];
    freq[k][1] *= response_[k];
  }
  fftw_execute_dft_c2r(plans_->inverse, freq.get(), real.get());
  std::vector<double> out(real.get(), real.get() + p);
  for (double& v : out) v /= p;
  return out;
}

void RampFilter::apply(std::span<const float> row, std::span<float> out) const {
  const auto full = apply_padded(row);
  for (int i = 0; i < nu_; ++i) out[i] = static_cast<float>(full[i]);
}

Sinogram ramp_filter(const Sinogram& sino, const FilterSpec& spec) {
  const RampFilter filter(sino.nu, spec);
  Sinogram out(sino.angles, sino.nu);
  parallel_for(sino.n_angles(), [&](std::size_t i) { filter.apply(sino.row(i), out.row(i)); });
  return out;
}

bool inside_reconstruction(int x, int y, int n) {
  const double c = rotation_center(n);
  const double r = reconstruction_radius(n);
  const double dx = x - c, dy = y - c;
  return dx * dx + dy * dy <= r * r;
}

namespace {

// Backprojects already-filtered rows into image row j of an n x n slice.
void backproject_row(const std::vector<float>& padded_rows, int nu, std::span<const float> cos_t,
                     std::span<const float> sin_t, int n, int j, float* out) {
  const double c = rotation_center(n);
  const double r = reconstruction_radius(n);
  const double y = j - c;
  const double half = r * r - y * y;
  if (half < 0) return;
  const double span_x = std::sqrt(half);
  const int first = std::max(0, static_cast<int>(std::ceil(c - span_x - 1e-9)));
  const int last = std::min(n - 1, static_cast<int>(std::floor(c + span_x + 1e-9)));
  if (last < first) return;
  const auto& k = simd::active_kernels();
  const float c0 = static_cast<float>(rotation_center(nu));
  const float x0 = static_cast<float>(-c);
  const float yf = static_cast<float>(y);
  const std::size_t stride = static_cast<std::size_t>(nu) + 2 * simd::kPad;
  for (std::size_t i = 0; i < cos_t.size(); ++i) {
    // pos(ix) = c0 + (ix - c) cos + y sin
    const float base = c0 + x0 * cos_t[i] + yf * sin_t[i];
    k.backproject_span(padded_rows.data() + i * stride + simd::kPad, nu, base, cos_t[i], first, last - first + 1, out);
  }
  // Inscribed-disc mask: recompute exactly with the integer test.
  for (int x = first; x <= last; ++x)
    if (!inside_reconstruction(x, j, n)) out[x] = 0.0f;
}

}  // namespace

Slice backproject(const Sinogram& filtered) {
  validate(filtered, "backproject");
  const int nu = filtered.nu;
  const int n = nu;
  const std::size_t na = filtered.n_angles();
  const std::size_t stride = static_cast<std::size_t>(nu) + 2 * simd::kPad;
  std::vector<float> padded(na * stride, 0.0f);
  std::vector<float> cos_t(na), sin_t(na);
  for (std::size_t i = 0; i < na; ++i) {
    auto src = filtered.row(i);
    std::copy(src.begin(), src.end(), padded.begin() + i * stride + simd::kPad);
    const double th = deg_to_rad(filtered.angles[i]);
    cos_t[i] = static_cast<float>(std::cos(th));
    sin_t[i] = static_cast<float>(std::sin(th));
  }
  Slice out(n, n);
  const float scale = static_cast<float>(std::numbers::pi / static_cast<double>(na));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    float* row = out.data.data() + j * n;
    backproject_row(padded, nu, cos_t, sin_t, n, static_cast<int>(j), row);
    for (int x = 0; x < n; ++x) row[x] *= scale;
  });
  return out;
}

Slice fbp_slice(const Sinogram& sino, const FilterSpec& spec) { return backproject(ramp_filter(sino, spec)); }

Volume fbp_volume(const ProjectionSet& set, const FilterSpec& spec) {
  validate(set, "fbp");
  Volume vol(set.nu, set.nu, set.nv, set.spacing);
  // Each axial level is an independent job; fbp_slice parallelizes inside.
  for (int v = 0; v < set.nv; ++v) {
    Slice s = fbp_slice(set.sinogram(v), spec);
    s.spacing = set.spacing;
    vol.set_slice(v, s);
  }
  return vol;
}

Sinogram reproject(const Slice& slice, std::span<const double> angles) { return forward_project_slice(slice, angles); }

}  // namespace vamct
