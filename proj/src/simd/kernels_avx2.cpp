#include "vamct/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace vamct::simd {

namespace {

inline __m256 bilinear8(const PaddedImage& img, __m256 x, __m256 y) {
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 fx0 = _mm256_floor_ps(x);
  const __m256 fy0 = _mm256_floor_ps(y);
  const __m256 wx = _mm256_sub_ps(x, fx0);
  const __m256 wy = _mm256_sub_ps(y, fy0);
  __m256i ix = _mm256_cvttps_epi32(fx0);
  __m256i iy = _mm256_cvttps_epi32(fy0);
  ix = _mm256_min_epi32(_mm256_max_epi32(ix, _mm256_set1_epi32(-kPad)), _mm256_set1_epi32(img.width));
  iy = _mm256_min_epi32(_mm256_max_epi32(iy, _mm256_set1_epi32(-kPad)), _mm256_set1_epi32(img.height));
  const __m256i idx = _mm256_add_epi32(_mm256_mullo_epi32(iy, _mm256_set1_epi32(img.stride)), ix);
  const __m256i idx_down = _mm256_add_epi32(idx, _mm256_set1_epi32(img.stride));
  const __m256 a = _mm256_i32gather_ps(img.origin, idx, 4);
  const __m256 b = _mm256_i32gather_ps(img.origin + 1, idx, 4);
  const __m256 c = _mm256_i32gather_ps(img.origin, idx_down, 4);
  const __m256 d = _mm256_i32gather_ps(img.origin + 1, idx_down, 4);
  const __m256 wx1 = _mm256_sub_ps(one, wx);
  const __m256 top = _mm256_add_ps(_mm256_mul_ps(wx1, a), _mm256_mul_ps(wx, b));
  const __m256 bottom = _mm256_add_ps(_mm256_mul_ps(wx1, c), _mm256_mul_ps(wx, d));
  return _mm256_add_ps(_mm256_mul_ps(_mm256_sub_ps(one, wy), top), _mm256_mul_ps(wy, bottom));
}

inline float bilinear1(const PaddedImage& img, float x, float y) {
  const float fx0 = std::floor(x);
  const float fy0 = std::floor(y);
  const float wx = x - fx0;
  const float wy = y - fy0;
  const int ix = std::clamp(static_cast<int>(fx0), -kPad, img.width);
  const int iy = std::clamp(static_cast<int>(fy0), -kPad, img.height);
  const float* p = img.origin + static_cast<std::ptrdiff_t>(iy) * img.stride + ix;
  const float top = (1.0f - wx) * p[0] + wx * p[1];
  const float bottom = (1.0f - wx) * p[img.stride] + wx * p[img.stride + 1];
  return (1.0f - wy) * top + wy * bottom;
}

// Not a namespace-scope constant: static init must not execute AVX code.
inline __m256 lane_index() { return _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7); }

void project_rays(const PaddedImage& image, const RayFan& fan, int first, int count,
                  const int* k_begin, const int* k_end, float* out) {
  const int end = first + count;
  int r = first;
  for (; r + 8 <= end; r += 8) {
    const __m256 rf = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(r)), lane_index());
    const __m256 xr = _mm256_add_ps(_mm256_set1_ps(fan.x0), _mm256_mul_ps(rf, _mm256_set1_ps(fan.ray_dx)));
    const __m256 yr = _mm256_add_ps(_mm256_set1_ps(fan.y0), _mm256_mul_ps(rf, _mm256_set1_ps(fan.ray_dy)));
    const __m256i kb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(k_begin + r));
    const __m256i ke = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(k_end + r));
    int lo = k_begin[r];
    int hi = k_end[r];
    for (int j = 1; j < 8; ++j) {
      lo = std::min(lo, k_begin[r + j]);
      hi = std::max(hi, k_end[r + j]);
    }
    const __m256 sdx = _mm256_set1_ps(fan.step_dx);
    const __m256 sdy = _mm256_set1_ps(fan.step_dy);
    __m256 acc = _mm256_setzero_ps();
    for (int k = lo; k < hi; ++k) {
      const __m256 kf = _mm256_set1_ps(static_cast<float>(k));
      const __m256 x = _mm256_add_ps(xr, _mm256_mul_ps(kf, sdx));
      const __m256 y = _mm256_add_ps(yr, _mm256_mul_ps(kf, sdy));
      const __m256 v = bilinear8(image, x, y);
      const __m256i kv = _mm256_set1_epi32(k);
      // lanes with k_begin <= k < k_end
      const __m256i inside = _mm256_andnot_si256(_mm256_cmpgt_epi32(kb, kv), _mm256_cmpgt_epi32(ke, kv));
      acc = _mm256_add_ps(acc, _mm256_and_ps(v, _mm256_castsi256_ps(inside)));
    }
    _mm256_storeu_ps(out + r, acc);
  }
  for (; r < end; ++r) {
    const float rf = static_cast<float>(r);
    const float xr = fan.x0 + rf * fan.ray_dx;
    const float yr = fan.y0 + rf * fan.ray_dy;
    float acc = 0.0f;
    for (int k = k_begin[r]; k < k_end[r]; ++k) {
      const float kf = static_cast<float>(k);
      acc = acc + bilinear1(image, xr + kf * fan.step_dx, yr + kf * fan.step_dy);
    }
    out[r] = acc;
  }
}

void backproject_span(const float* row, int n, float base, float step, int first, int count,
                      float* out) {
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 vbase = _mm256_set1_ps(base);
  const __m256 vstep = _mm256_set1_ps(step);
  const __m256i lo = _mm256_set1_epi32(-kPad);
  const __m256i hi = _mm256_set1_epi32(n);
  const int end = first + count;
  int i = first;
  for (; i + 8 <= end; i += 8) {
    const __m256 fi = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(i)), lane_index());
    const __m256 pos = _mm256_add_ps(vbase, _mm256_mul_ps(fi, vstep));
    const __m256 f0 = _mm256_floor_ps(pos);
    const __m256 w = _mm256_sub_ps(pos, f0);
    __m256i i0 = _mm256_cvttps_epi32(f0);
    i0 = _mm256_min_epi32(_mm256_max_epi32(i0, lo), hi);
    const __m256 a = _mm256_i32gather_ps(row, i0, 4);
    const __m256 b = _mm256_i32gather_ps(row + 1, i0, 4);
    const __m256 v = _mm256_add_ps(_mm256_mul_ps(_mm256_sub_ps(one, w), a), _mm256_mul_ps(w, b));
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(out + i), v));
  }
  for (; i < end; ++i) {
    const float pos = base + static_cast<float>(i) * step;
    const float f0 = std::floor(pos);
    const float w = pos - f0;
    const int i0 = std::clamp(static_cast<int>(f0), -kPad, n);
    out[i] = out[i] + ((1.0f - w) * row[i0] + w * row[i0 + 1]);
  }
}

void lerp(const float* a, const float* b, float wa, float wb, float* out, std::size_t n) {
  const __m256 va = _mm256_set1_ps(wa);
  const __m256 vb = _mm256_set1_ps(wb);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 r = _mm256_add_ps(_mm256_mul_ps(va, _mm256_loadu_ps(a + i)), _mm256_mul_ps(vb, _mm256_loadu_ps(b + i)));
    _mm256_storeu_ps(out + i, r);
  }
  for (; i < n; ++i) out[i] = wa * a[i] + wb * b[i];
}

}  // namespace

const Kernels& avx2_kernels_impl() {
  static const Kernels k{"avx2", project_rays, backproject_span, lerp};
  return k;
}

}  // namespace vamct::simd
