#include "vamct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "vamct/parallel.hpp"
#include "vamct/simd/kernels.hpp"

namespace vamct {

Image ProjectionSet::image(std::size_t i) const {
  Image img(nu, nv, spacing);
  auto f = frame(i);
  std::copy(f.begin(), f.end(), img.data.begin());
  return img;
}

void ProjectionSet::set_image(std::size_t i, const Image& img) {
  if (img.width != nu || img.height != nv)
    throw Error(Error::Kind::DimensionMismatch, "projector", "image does not match detector size");
  std::copy(img.data.begin(), img.data.end(), frame(i).begin());
}

Sinogram ProjectionSet::sinogram(int v) const {
  if (v < 0 || v >= nv) throw Error(Error::Kind::InvalidArgument, "projector", "sinogram row out of range");
  Sinogram s(angles, nu);
  for (std::size_t i = 0; i < n_angles(); ++i) {
    auto src = frame(i).subspan(static_cast<std::size_t>(v) * nu, nu);
    std::copy(src.begin(), src.end(), s.row(i).begin());
  }
  return s;
}

void validate_angles(std::span<const double> angles, const char* stage) {
  if (angles.empty()) throw Error(Error::Kind::InvalidArgument, stage, "empty angle list");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!std::isfinite(angles[i]) || angles[i] < 0.0 || angles[i] >= 180.0)
      throw Error(Error::Kind::InvalidArgument, stage, "angles must lie in [0, 180)");
    if (i > 0 && !(angles[i] > angles[i - 1]))
      throw Error(Error::Kind::InvalidArgument, stage, "angles must be strictly increasing");
  }
}

void validate(const Sinogram& sino, const char* stage) {
  validate_angles(sino.angles, stage);
  if (sino.angles.size() < 2) throw Error(Error::Kind::InvalidArgument, stage, "sinogram needs at least 2 angles");
  if (sino.nu <= 0 || sino.data.size() != sino.angles.size() * static_cast<std::size_t>(sino.nu))
    throw Error(Error::Kind::DimensionMismatch, stage, "sinogram data length mismatch");
  for (float v : sino.data)
    if (!std::isfinite(v)) throw Error(Error::Kind::InvalidArgument, stage, "non-finite sinogram value");
}

void validate(const ProjectionSet& set, const char* stage) {
  validate_angles(set.angles, stage);
  if (set.nu <= 0 || set.nv <= 0 || set.data.size() != set.n_angles() * set.frame_size())
    throw Error(Error::Kind::DimensionMismatch, stage, "projection set data length mismatch");
  if (!(set.spacing > 0)) throw Error(Error::Kind::InvalidArgument, stage, "spacing must be positive");
  for (float v : set.data)
    if (!std::isfinite(v)) throw Error(Error::Kind::InvalidArgument, stage, "non-finite projection value");
}

std::vector<double> uniform_angles(int count, double step_deg, double start_deg) {
  std::vector<double> a(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) a[i] = start_deg + i * step_deg;
  return a;
}

namespace {

struct PaddedSlice {
  std::vector<float> storage;
  simd::PaddedImage view;
  // Bounding box of nonzero pixels; empty when max < min.
  int bx0 = 0, bx1 = -1, by0 = 0, by1 = -1;
};

PaddedSlice pad_slice(std::span<const float> data, int w, int h) {
  PaddedSlice p;
  const int stride = w + 2 * simd::kPad;
  p.storage.assign(static_cast<std::size_t>(stride) * (h + 2 * simd::kPad), 0.0f);
  p.bx0 = w;
  p.by0 = h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = data[static_cast<std::size_t>(y) * w + x];
      p.storage[static_cast<std::size_t>(y + simd::kPad) * stride + x + simd::kPad] = v;
      if (v != 0.0f) {
        p.bx0 = std::min(p.bx0, x);
        p.bx1 = std::max(p.bx1, x);
        p.by0 = std::min(p.by0, y);
        p.by1 = std::max(p.by1, y);
      }
    }
  }
  p.view = {p.storage.data() + static_cast<std::size_t>(simd::kPad) * stride + simd::kPad, w, h, stride};
  return p;
}

// Clips t so that (x0 + t * dx) stays within [lo, hi]; returns false if empty.
bool clip(double x0, double dx, double lo, double hi, double& tlo, double& thi) {
  if (std::abs(dx) < 1e-12) return x0 >= lo && x0 <= hi;
  double a = (lo - x0) / dx;
  double b = (hi - x0) / dx;
  if (a > b) std::swap(a, b);
  tlo = std::max(tlo, a);
  thi = std::min(thi, b);
  return tlo <= thi;
}

struct AngleGeometry {
  simd::RayFan fan;
  double cos_t, sin_t;
};

AngleGeometry angle_geometry(double angle_deg, int w, int h, int nu) {
  const double th = deg_to_rad(angle_deg);
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double cx = rotation_center(w);
  const double cy = rotation_center(h);
  const double c0 = rotation_center(nu);
  AngleGeometry g;
  g.cos_t = c;
  g.sin_t = s;
  g.fan.x0 = static_cast<float>(cx - c0 * c);
  g.fan.y0 = static_cast<float>(cy - c0 * s);
  g.fan.ray_dx = static_cast<float>(c);
  g.fan.ray_dy = static_cast<float>(s);
  g.fan.step_dx = static_cast<float>(-s);
  g.fan.step_dy = static_cast<float>(c);
  return g;
}

// Projects one padded slice at one angle into `out` (nu values).
void project_one(const PaddedSlice& slice, const AngleGeometry& g, int nu, std::vector<int>& kb,
                 std::vector<int>& ke, float* out) {
  if (slice.bx1 < slice.bx0) {
    std::fill(out, out + nu, 0.0f);
    return;
  }
  // Samples whose bilinear footprint misses the nonzero box read exactly zero,
  // so the step range per ray only needs to cover that box (with margin).
  const double margin = 1.5;
  const double xlo = slice.bx0 - margin, xhi = slice.bx1 + margin;
  const double ylo = slice.by0 - margin, yhi = slice.by1 + margin;
  for (int r = 0; r < nu; ++r) {
    const double xr = static_cast<double>(g.fan.x0) + r * static_cast<double>(g.fan.ray_dx);
    const double yr = static_cast<double>(g.fan.y0) + r * static_cast<double>(g.fan.ray_dy);
    double tlo = -std::numeric_limits<double>::infinity();
    double thi = std::numeric_limits<double>::infinity();
    if (clip(xr, g.fan.step_dx, xlo, xhi, tlo, thi) && clip(yr, g.fan.step_dy, ylo, yhi, tlo, thi)) {
      kb[r] = static_cast<int>(std::ceil(tlo));
      ke[r] = static_cast<int>(std::floor(thi)) + 1;
      if (ke[r] < kb[r]) ke[r] = kb[r];
    } else {
      kb[r] = 0;
      ke[r] = 0;
    }
  }
  simd::active_kernels().project_rays(slice.view, g.fan, 0, nu, kb.data(), ke.data(), out);
}

}  // namespace

Sinogram forward_project_slice(const Slice& slice, std::span<const double> angles) {
  validate_angles(angles, "project");
  validate(slice, "project");
  const int nu = std::max(slice.width, slice.height);
  Sinogram sino(std::vector<double>(angles.begin(), angles.end()), nu);
  const PaddedSlice padded = pad_slice(slice.data, slice.width, slice.height);
  parallel_for_chunks(angles.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<int> kb(nu), ke(nu);
    for (std::size_t i = begin; i < end; ++i) {
      const auto g = angle_geometry(angles[i], slice.width, slice.height, nu);
      project_one(padded, g, nu, kb, ke, sino.row(i).data());
    }
  });
  return sino;
}

ProjectionSet forward_project_volume(const Volume& volume, std::span<const double> angles) {
  validate_angles(angles, "project");
  validate(volume, "project");
  const int nu = std::max(volume.nx, volume.ny);
  ProjectionSet set(std::vector<double>(angles.begin(), angles.end()), nu, volume.nz, volume.spacing);
  std::vector<AngleGeometry> geometry;
  geometry.reserve(angles.size());
  for (double a : angles) geometry.push_back(angle_geometry(a, volume.nx, volume.ny, nu));

  parallel_for_chunks(static_cast<std::size_t>(volume.nz), [&](std::size_t begin, std::size_t end) {
    std::vector<int> kb(nu), ke(nu);
    for (std::size_t z = begin; z < end; ++z) {
      const PaddedSlice padded = pad_slice(volume.slice_span(static_cast<int>(z)), volume.nx, volume.ny);
      for (std::size_t i = 0; i < angles.size(); ++i) {
        float* row = set.frame(i).data() + z * static_cast<std::size_t>(nu);
        project_one(padded, geometry[i], nu, kb, ke, row);
      }
    }
  });
  return set;
}

RawFrameSet simulate_raw(const ProjectionSet& proj, std::span<const double> flat_profile,
                         std::span<const double> dark_level, const RawSimulation& options) {
  validate(proj, "simulate_raw");
  const std::size_t fs = proj.frame_size();
  if (flat_profile.size() != fs || dark_level.size() != fs)
    throw Error(Error::Kind::DimensionMismatch, "simulate_raw", "flat/dark profiles must match the detector size");
  if (options.n_flats < 1 || options.n_darks < 1)
    throw Error(Error::Kind::InvalidArgument, "simulate_raw", "need at least one flat and one dark frame");
  for (std::size_t k = 0; k < fs; ++k) {
    if (!(flat_profile[k] > dark_level[k]))
      throw Error(Error::Kind::InvalidArgument, "simulate_raw", "non-positive gain (flat must exceed dark)");
    if (dark_level[k] < 0) throw Error(Error::Kind::InvalidArgument, "simulate_raw", "negative dark level");
  }

  RawFrameSet raw;
  raw.angles = proj.angles;
  raw.nu = proj.nu;
  raw.nv = proj.nv;
  raw.spacing = proj.spacing;
  raw.projections.resize(proj.data.size());
  for (std::size_t i = 0; i < proj.n_angles(); ++i) {
    auto p = proj.frame(i);
    double* out = raw.projections.data() + i * fs;
    for (std::size_t k = 0; k < fs; ++k) {
      const double t = options.mode == RawMode::Attenuation ? std::exp(-static_cast<double>(p[k])) : p[k];
      out[k] = t * flat_profile[k] + (1.0 - t) * dark_level[k];
    }
  }
  raw.flats.resize(fs * options.n_flats);
  raw.darks.resize(fs * options.n_darks);
  for (int f = 0; f < options.n_flats; ++f) std::copy(flat_profile.begin(), flat_profile.end(), raw.flats.begin() + f * fs);
  for (int d = 0; d < options.n_darks; ++d) std::copy(dark_level.begin(), dark_level.end(), raw.darks.begin() + d * fs);

  if (options.noise_seed) {
    std::mt19937_64 rng(*options.noise_seed);
    auto noisy = [&rng](std::vector<double>& frames) {
      for (double& v : frames) {
        std::poisson_distribution<long long> dist(std::max(v, 0.0));
        v = v > 0 ? static_cast<double>(dist(rng)) : 0.0;
      }
    };
    noisy(raw.projections);
    noisy(raw.flats);
    noisy(raw.darks);
  }
  return raw;
}

FlatFieldResult flat_field_correct(const RawFrameSet& raw) {
  const std::size_t fs = raw.frame_size();
  if (fs == 0 || raw.projections.size() != raw.angles.size() * fs)
    throw Error(Error::Kind::DimensionMismatch, "flatfield", "raw projection stack size mismatch");
  if (raw.flats.empty() || raw.darks.empty() || raw.flats.size() % fs || raw.darks.size() % fs)
    throw Error(Error::Kind::InvalidArgument, "flatfield", "need at least one flat and one dark frame");

  std::vector<double> flat(fs, 0.0), dark(fs, 0.0);
  const std::size_t nf = raw.n_flats(), nd = raw.n_darks();
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t k = 0; k < fs; ++k) flat[k] += raw.flats[f * fs + k];
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t k = 0; k < fs; ++k) dark[k] += raw.darks[d * fs + k];
  for (std::size_t k = 0; k < fs; ++k) {
    flat[k] /= static_cast<double>(nf);
    dark[k] /= static_cast<double>(nd);
  }

  std::vector<double> sorted = flat;
  std::nth_element(sorted.begin(), sorted.begin() + fs / 2, sorted.end());
  const double median = sorted[fs / 2];
  const double eps = std::max(1e-6 * std::abs(median), std::numeric_limits<double>::min());

  FlatFieldResult result;
  std::vector<double> gain(fs);
  std::size_t usable = 0;
  for (std::size_t k = 0; k < fs; ++k) {
    gain[k] = flat[k] - dark[k];
    if (gain[k] < eps) {
      gain[k] = eps;
      ++result.clamped;
    } else {
      ++usable;
    }
  }
  if (usable == 0)
    throw Error(Error::Kind::Rejected, "flatfield", "flat and dark frames are indistinguishable (zero gain everywhere)");

  result.normalized = ProjectionSet(raw.angles, raw.nu, raw.nv, raw.spacing);
  for (std::size_t i = 0; i < raw.angles.size(); ++i) {
    const double* src = raw.projections.data() + i * fs;
    auto out = result.normalized.frame(i);
    for (std::size_t k = 0; k < fs; ++k) out[k] = static_cast<float>((src[k] - dark[k]) / gain[k]);
  }
  return result;
}

AttenuationResult to_attenuation(const ProjectionSet& normalized) {
  AttenuationResult r;
  r.attenuation = normalized;
  for (float& v : r.attenuation.data) {
    double n = v;
    if (!(n >= kTransmissionFloor)) {
      n = kTransmissionFloor;
      ++r.clamped;
    }
    v = static_cast<float>(-std::log(n));
  }
  return r;
}

}  // namespace vamct
