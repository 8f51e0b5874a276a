#include "vamct/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

namespace vamct {

namespace {

class Writer {
public:
  explicit Writer(const char magic[4]) { out_.append(magic, 4); }
  void u32(std::uint32_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void floats(std::span<const float> vals) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.append(reinterpret_cast<const char*>(vals.data()), vals.size() * 4);
    } else {
      for (float v : vals) f32(v);
    }
  }
  std::string take() { return std::move(out_); }

private:
  void put(std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff), static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out_.append(b, 4);
  }
  std::string out_;
};

class Reader {
public:
  Reader(const std::string& bytes, const char magic[4], const char* stage) : b_(bytes), stage_(stage) {
    if (b_.size() < 4 || std::memcmp(b_.data(), magic, 4) != 0)
      throw Error(Error::Kind::Io, stage_, std::string("bad magic, expected ") + std::string(magic, 4));
    pos_ = 4;
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(b_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void floats(std::span<float> out) {
    need(out.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), b_.data() + pos_, out.size() * 4);
      pos_ += out.size() * 4;
    } else {
      for (float& v : out) v = f32();
    }
  }
  void expect_remaining(std::size_t n) {
    if (b_.size() - pos_ != n)
      throw Error(Error::Kind::Io, stage_,
                  "payload is " + std::to_string(b_.size() - pos_) + " bytes, expected " + std::to_string(n));
  }

private:
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) throw Error(Error::Kind::Io, stage_, "truncated file");
  }
  const std::string& b_;
  const char* stage_;
  std::size_t pos_ = 0;
};

void check_finite(std::span<const float> v, const char* stage) {
  if (!std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); }))
    throw Error(Error::Kind::Io, stage, "non-finite value in payload");
}

std::vector<double> read_angles(Reader& r, std::size_t n) {
  std::vector<double> a(n);
  for (auto& x : a) x = r.f32();
  return a;
}

void check_dims(std::initializer_list<std::uint32_t> dims, const char* stage) {
  std::uint64_t total = 1;
  for (auto d : dims) {
    if (d == 0 || d > (1u << 20)) throw Error(Error::Kind::Io, stage, "dimension out of range");
    total *= d;
  }
  if (total > (std::uint64_t{1} << 34)) throw Error(Error::Kind::Io, stage, "payload too large");
}

}  // namespace

std::string encode_volume(const Volume& v) {
  validate(v, "io");
  Writer w("VAMV");
  w.u32(v.nx);
  w.u32(v.ny);
  w.u32(v.nz);
  w.f32(static_cast<float>(v.spacing));
  w.floats(v.data);
  return w.take();
}

std::string encode_sinogram(const Sinogram& s) {
  validate(s, "io");
  Writer w("VAMS");
  w.u32(static_cast<std::uint32_t>(s.n_angles()));
  w.u32(s.nu);
  for (double a : s.angles) w.f32(static_cast<float>(a));
  w.floats(s.data);
  return w.take();
}

std::string encode_projections(const ProjectionSet& p) {
  validate(p, "io");
  Writer w("VAMP");
  w.u32(static_cast<std::uint32_t>(p.n_angles()));
  w.u32(p.nu);
  w.u32(p.nv);
  for (double a : p.angles) w.f32(static_cast<float>(a));
  w.floats(p.data);
  return w.take();
}

Volume decode_volume(const std::string& bytes) {
  Reader r(bytes, "VAMV", "io");
  const auto nx = r.u32(), ny = r.u32(), nz = r.u32();
  check_dims({nx, ny, nz}, "io");
  const float spacing = r.f32();
  if (!(spacing > 0.0f) || !std::isfinite(spacing)) throw Error(Error::Kind::Io, "io", "spacing must be positive");
  r.expect_remaining(static_cast<std::size_t>(nx) * ny * nz * 4);
  Volume v(nx, ny, nz, spacing);
  r.floats(v.data);
  check_finite(v.data, "io");
  return v;
}

Sinogram decode_sinogram(const std::string& bytes) {
  Reader r(bytes, "VAMS", "io");
  const auto na = r.u32(), nu = r.u32();
  check_dims({na, nu}, "io");
  auto angles = read_angles(r, na);
  r.expect_remaining(static_cast<std::size_t>(na) * nu * 4);
  Sinogram s(std::move(angles), nu);
  r.floats(s.data);
  check_finite(s.data, "io");
  validate(s, "io");
  return s;
}

ProjectionSet decode_projections(const std::string& bytes, double spacing_um) {
  Reader r(bytes, "VAMP", "io");
  const auto na = r.u32(), nu = r.u32(), nv = r.u32();
  check_dims({na, nu, nv}, "io");
  auto angles = read_angles(r, na);
  r.expect_remaining(static_cast<std::size_t>(na) * nu * nv * 4);
  ProjectionSet p(std::move(angles), nu, nv, spacing_um);
  r.floats(p.data);
  check_finite(p.data, "io");
  validate(p, "io");
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::Io, "io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Error::Kind::Io, "io", "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error(Error::Kind::Io, "io", "short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(Error::Kind::Io, "io", "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void save_volume(const std::filesystem::path& path, const Volume& v) { write_file_atomic(path, encode_volume(v)); }
void save_sinogram(const std::filesystem::path& path, const Sinogram& s) { write_file_atomic(path, encode_sinogram(s)); }
void save_projections(const std::filesystem::path& path, const ProjectionSet& p) {
  write_file_atomic(path, encode_projections(p));
}
Volume load_volume(const std::filesystem::path& path) { return decode_volume(read_file(path)); }
Sinogram load_sinogram(const std::filesystem::path& path) { return decode_sinogram(read_file(path)); }
ProjectionSet load_projections(const std::filesystem::path& path, double spacing_um) {
  return decode_projections(read_file(path), spacing_um);
}

std::string encode_pgm16(std::span<const float> data, int width, int height, GrayRange* range) {
  if (width <= 0 || height <= 0 || data.size() != static_cast<std::size_t>(width) * height)
    throw Error(Error::Kind::DimensionMismatch, "io", "image size mismatch");
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (range) *range = {lo, hi};
  std::string out = "P5\n" + std::to_string(width) + ' ' + std::to_string(height) + "\n65535\n";
  out.reserve(out.size() + data.size() * 2);
  for (float v : data) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xff));
  }
  return out;
}

void save_pgm16(const std::filesystem::path& path, const Image& image) {
  GrayRange range;
  const std::string bytes = encode_pgm16(image.data, image.width, image.height, &range);
  std::ostringstream side;
  side.precision(9);
  side << "min " << range.min << "\nmax " << range.max << '\n';
  write_file_atomic(path, bytes);
  auto sidecar = path;
  sidecar += ".txt";
  write_file_atomic(sidecar, side.str());
}

}  // namespace vamct
