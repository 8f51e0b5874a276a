#pragma once

#include <cmath>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "vamct/core.hpp"
#include "vamct/metrology.hpp"

namespace testing {

inline vamct::Image random_image(int w, int h, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(lo, hi);
  vamct::Image img(w, h);
  for (float& v : img.data) v = d(rng);
  return img;
}

// Bilinear sample with zero outside, evaluated independently of the library.
inline double bilinear(const vamct::Image& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto px = [&](int xx, int yy) -> double {
    return (xx >= 0 && xx < img.width && yy >= 0 && yy < img.height) ? img.at(xx, yy) : 0.0;
  };
  return (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) + (1 - fx) * fy * px(x0, y0 + 1) +
         fx * fy * px(x0 + 1, y0 + 1);
}

// Direct set definitions: a voxel survives erosion when every voxel of its
// box neighbourhood lies in the grid and in the mask; dilation when any
// in-grid neighbour is set. Axes of extent one are not structured.
inline vamct::Mask direct_morph(const vamct::Mask& m, int r, bool erode) {
  vamct::Mask out(m.nx, m.ny, m.nz);
  const int rx = m.nx > 1 ? r : 0, ry = m.ny > 1 ? r : 0, rz = m.nz > 1 ? r : 0;
  for (int z = 0; z < m.nz; ++z)
    for (int y = 0; y < m.ny; ++y)
      for (int x = 0; x < m.nx; ++x) {
        bool all = true, any = false;
        for (int k = -rz; k <= rz; ++k)
          for (int j = -ry; j <= ry; ++j)
            for (int i = -rx; i <= rx; ++i) {
              const int xx = x + i, yy = y + j, zz = z + k;
              const bool in = xx >= 0 && xx < m.nx && yy >= 0 && yy < m.ny && zz >= 0 && zz < m.nz;
              const bool v = in && m.at(xx, yy, zz);
              all = all && v;
              any = any || v;
            }
        out.set(x, y, z, erode ? all : any);
      }
  return out;
}

inline vamct::Mask random_mask(int nx, int ny, int nz, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution d(p);
  vamct::Mask m(nx, ny, nz);
  for (auto& v : m.data) v = d(rng) ? 1 : 0;
  return m;
}

// All pairs over every set voxel, lexicographic tie-break.
inline vamct::Extent brute_diameter(const vamct::Mask& m) {
  std::vector<std::array<int, 3>> pts;
  for (int z = 0; z < m.nz; ++z)
    for (int y = 0; y < m.ny; ++y)
      for (int x = 0; x < m.nx; ++x)
        if (m.at(x, y, z)) pts.push_back({x, y, z});
  std::int64_t best = -1;
  std::array<int, 3> b1{}, b2{};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i; j < pts.size(); ++j) {
      std::int64_t d = 0;
      for (int k = 0; k < 3; ++k) d += static_cast<std::int64_t>(pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
      const auto lo = std::min(pts[i], pts[j]), hi = std::max(pts[i], pts[j]);
      if (d > best || (d == best && std::pair(lo, hi) < std::pair(b1, b2))) {
        best = d;
        b1 = lo;
        b2 = hi;
      }
    }
  return {std::sqrt(static_cast<double>(best)), b1, b2};
}

// Linear convolution with the spatial Ram-Lak kernel, in double.
inline std::vector<double> spatial_ramp(std::span<const float> row) {
  const int n = static_cast<int>(row.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) {
      const int k = i - j;
      double h = 0;
      if (k == 0) h = 0.25;
      else if (k % 2 != 0) h = -1.0 / (std::numbers::pi * std::numbers::pi * k * k);
      s += h * row[j];
    }
    out[i] = s;
  }
  return out;
}


}  // namespace testing
