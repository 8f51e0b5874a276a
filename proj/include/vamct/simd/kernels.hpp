#pragma once

// Inner loops of the projector, backprojector and resampler.
//
// Every kernel exists as a scalar reference and, where the target supports
// it, an AVX2 variant picked at runtime. Variants evaluate the same float
// expressions in the same order (one SIMD lane per output element), so on a
// given machine they agree bit for bit; tests hold them to that.

#include <cstddef>
#include <string_view>

namespace vamct::simd {

/// Zero border width around images and detector rows handed to kernels.
inline constexpr int kPad = 2;

/// Read-only view of an image surrounded by kPad zero pixels on every side.
/// `origin` points at pixel (0, 0) of the unpadded image.
struct PaddedImage {
  const float* origin = nullptr;
  int width = 0;
  int height = 0;
  int stride = 0;  // width + 2 * kPad
};

/// A fan of parallel rays in image index coordinates. Ray r, sample k sits at
/// (x0 + r * ray_dx + k * step_dx, y0 + r * ray_dy + k * step_dy).
struct RayFan {
  float x0 = 0, y0 = 0;
  float ray_dx = 0, ray_dy = 0;
  float step_dx = 0, step_dy = 0;
};

struct Kernels {
  const char* name;

  /// out[r] = sum over k in [k_begin[r], k_end[r]) of the bilinear sample of
  /// `image` at ray r, step k, for r in [first, first + count). Samples
  /// outside the image read as zero.
  void (*project_rays)(const PaddedImage& image, const RayFan& fan, int first, int count,
                       const int* k_begin, const int* k_end, float* out);

  /// out[i] += linear sample of `row` at base + i * step, for i in
  /// [first, first + count). `row` has kPad zeros before element 0 and after
  /// element n - 1.
  void (*backproject_span)(const float* row, int n, float base, float step, int first, int count,
                           float* out);

  /// out[i] = wa * a[i] + wb * b[i].
  void (*lerp)(const float* a, const float* b, float wa, float wb, float* out, std::size_t n);
};

const Kernels& scalar_kernels();

/// nullptr when not compiled in or not supported by the running CPU.
const Kernels* avx2_kernels();

/// Kernels used by the library. Chosen once: the environment variable
/// VAMCT_SIMD (scalar | avx2) overrides CPU detection.
const Kernels& active_kernels();

/// Forces a variant by name; returns false if unavailable.
bool select_kernels(std::string_view name);

}  // namespace vamct::simd
