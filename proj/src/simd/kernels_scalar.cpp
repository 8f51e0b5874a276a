#include "vamct/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace vamct::simd {

namespace {

inline float bilinear(const PaddedImage& img, float x, float y) {
  const float fx0 = std::floor(x);
  const float fy0 = std::floor(y);
  const float wx = x - fx0;
  const float wy = y - fy0;
  const int ix = std::clamp(static_cast<int>(fx0), -kPad, img.width);
  const int iy = std::clamp(static_cast<int>(fy0), -kPad, img.height);
  const float* p = img.origin + static_cast<std::ptrdiff_t>(iy) * img.stride + ix;
  const float a = p[0];
  const float b = p[1];
  const float c = p[img.stride];
  const float d = p[img.stride + 1];
  const float top = (1.0f - wx) * a + wx * b;
  const float bottom = (1.0f - wx) * c + wx * d;
  return (1.0f - wy) * top + wy * bottom;
}

void project_rays(const PaddedImage& image, const RayFan& fan, int first, int count,
                  const int* k_begin, const int* k_end, float* out) {
  for (int r = first; r < first + count; ++r) {
    const float rf = static_cast<float>(r);
    const float xr = fan.x0 + rf * fan.ray_dx;
    const float yr = fan.y0 + rf * fan.ray_dy;
    float acc = 0.0f;
    for (int k = k_begin[r]; k < k_end[r]; ++k) {
      const float kf = static_cast<float>(k);
      acc = acc + bilinear(image, xr + kf * fan.step_dx, yr + kf * fan.step_dy);
    }
    out[r] = acc;
  }
}

void backproject_span(const float* row, int n, float base, float step, int first, int count,
                      float* out) {
  for (int i = first; i < first + count; ++i) {
    const float pos = base + static_cast<float>(i) * step;
    const float f0 = std::floor(pos);
    const float w = pos - f0;
    const int i0 = std::clamp(static_cast<int>(f0), -kPad, n);
    out[i] = out[i] + ((1.0f - w) * row[i0] + w * row[i0 + 1]);
  }
}

void lerp(const float* a, const float* b, float wa, float wb, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = wa * a[i] + wb * b[i];
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{"scalar", project_rays, backproject_span, lerp};
  return k;
}

}  // namespace vamct::simd
