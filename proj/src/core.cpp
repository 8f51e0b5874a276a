#include "vamct/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vamct/simd/kernels.hpp"

namespace vamct {

Slice Volume::slice(int z) const {
  Slice s(nx, ny, spacing);
  auto src = slice_span(z);
  std::copy(src.begin(), src.end(), s.data.begin());
  return s;
}

void Volume::set_slice(int z, const Slice& s) {
  if (s.width != nx || s.height != ny)
    throw Error(Error::Kind::DimensionMismatch, "core", "slice does not match volume dimensions");
  std::copy(s.data.begin(), s.data.end(), slice_span(z).begin());
}

namespace {

void check_values(std::span<const float> data, const char* stage) {
  for (float v : data) {
    if (!std::isfinite(v)) throw Error(Error::Kind::InvalidArgument, stage, "non-finite density value");
  }
}

}  // namespace

void validate(const Image& image, const char* stage) {
  if (image.width <= 0 || image.height <= 0)
    throw Error(Error::Kind::InvalidArgument, stage, "image dimensions must be positive");
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height)
    throw Error(Error::Kind::DimensionMismatch, stage, "image data length != width * height");
  if (!(image.spacing > 0)) throw Error(Error::Kind::InvalidArgument, stage, "spacing must be positive");
  check_values(image.data, stage);
}

void validate(const Volume& volume, const char* stage) {
  if (volume.nx <= 0 || volume.ny <= 0 || volume.nz <= 0)
    throw Error(Error::Kind::InvalidArgument, stage, "volume dimensions must be positive");
  if (volume.data.size() != static_cast<std::size_t>(volume.nx) * volume.ny * volume.nz)
    throw Error(Error::Kind::DimensionMismatch, stage, "volume data length != nx * ny * nz");
  if (!(volume.spacing > 0)) throw Error(Error::Kind::InvalidArgument, stage, "spacing must be positive");
  check_values(volume.data, stage);
}

Image rebin(const Image& image, int factor) {
  if (factor <= 0) throw Error(Error::Kind::InvalidArgument, "rebin", "factor must be positive");
  if (image.width % factor != 0 || image.height % factor != 0)
    throw Error(Error::Kind::DimensionMismatch, "rebin",
                "factor " + std::to_string(factor) + " does not divide " + std::to_string(image.width) + "x" +
                    std::to_string(image.height));
  Image out(image.width / factor, image.height / factor, image.spacing * factor);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double sum = 0.0;
      for (int j = 0; j < factor; ++j)
        for (int i = 0; i < factor; ++i) sum += image.at(x * factor + i, y * factor + j);
      out.at(x, y) = static_cast<float>(sum * inv);
    }
  }
  return out;
}

void shift_subpixel(std::span<const float> in, int width, int height, double du, double dv,
                    std::span<float> out) {
  const auto& k = simd::active_kernels();
  const double iu_d = std::floor(du);
  const double iv_d = std::floor(dv);
  const float fu = static_cast<float>(du - iu_d);
  const float fv = static_cast<float>(dv - iv_d);
  const long iu = static_cast<long>(iu_d);
  const long iv = static_cast<long>(iv_d);
  const std::size_t w = static_cast<std::size_t>(width);

  std::fill(out.begin(), out.end(), 0.0f);

  // Horizontal pass into `rows`: H(u) = fu * I(u - iu - 1) + (1 - fu) * I(u - iu).
  // Only output columns with at least one in-range source are touched.
  const long u_lo = std::max<long>(0, iu);
  const long u_hi = std::min<long>(width, iu + width + 1);
  std::vector<float> rows(in.size(), 0.0f);
  if (u_lo < u_hi) {
    std::vector<float> padded(w + 2, 0.0f);
    for (int r = 0; r < height; ++r) {
      std::copy_n(in.data() + r * w, w, padded.data() + 1);
      // padded[j + 1] == I(j); output u reads padded[u - iu] and padded[u - iu + 1].
      const float* a = padded.data() + (u_lo - iu);
      k.lerp(a, a + 1, fu, 1.0f - fu, rows.data() + r * w + u_lo, static_cast<std::size_t>(u_hi - u_lo));
    }
  }

  // Vertical pass: out(v) = fv * H(v - iv - 1) + (1 - fv) * H(v - iv).
  const std::vector<float> zeros(w, 0.0f);
  auto hrow = [&](long r) -> const float* {
    return (r >= 0 && r < height) ? rows.data() + r * w : zeros.data();
  };
  for (long v = 0; v < height; ++v) {
    const long r0 = v - iv - 1;
    const long r1 = v - iv;
    if ((r0 < 0 || r0 >= height) && (r1 < 0 || r1 >= height)) continue;
    k.lerp(hrow(r0), hrow(r1), fv, 1.0f - fv, out.data() + v * w, w);
  }
}

Image shift_subpixel(const Image& image, double du, double dv) {
  if (!std::isfinite(du) || !std::isfinite(dv))
    throw Error(Error::Kind::InvalidArgument, "shift", "shift must be finite");
  Image out(image.width, image.height, image.spacing);
  if (du == 0.0 && dv == 0.0) {
    out.data = image.data;
    return out;
  }
  shift_subpixel(image.data, image.width, image.height, du, dv, out.data);
  return out;
}

}  // namespace vamct
