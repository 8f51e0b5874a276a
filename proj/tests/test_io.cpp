#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <limits>

#include "support.hpp"
#include "vamct/io.hpp"

using namespace vamct;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vamct_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::uint32_t le32(const std::string& b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(b[off + i]);
  return v;
}

ProjectionSet sample_set() {
  ProjectionSet p(std::vector<double>{0.0, 0.5, 1.0}, 5, 4);
  for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = static_cast<float>(i) * 0.25f - 3.0f;
  return p;
}

}  // namespace

TEST_CASE("volume round trip and header layout") {
  Volume v(3, 4, 2, 12.2);
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(i) / 7.0f;
  const std::string b = encode_volume(v);
  CHECK(b.substr(0, 4) == "VAMV");
  CHECK(le32(b, 4) == 3);
  CHECK(le32(b, 8) == 4);
  CHECK(le32(b, 12) == 2);
  CHECK(b.size() == 20 + v.data.size() * 4);
  const Volume r = decode_volume(b);
  CHECK(r.nx == 3);
  CHECK(r.nz == 2);
  CHECK(r.spacing == doctest::Approx(12.2f));
  CHECK(r.data == v.data);
}

TEST_CASE("sinogram and projection round trips") {
  Sinogram s(std::vector<double>{0.0, 45.0, 90.0, 179.5}, 6);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = std::sin(static_cast<float>(i));
  const std::string sb = encode_sinogram(s);
  CHECK(sb.substr(0, 4) == "VAMS");
  CHECK(sb.size() == 12 + 4 * 4 + s.data.size() * 4);
  const Sinogram sr = decode_sinogram(sb);
  CHECK(sr.angles == s.angles);
  CHECK(sr.data == s.data);

  const ProjectionSet p = sample_set();
  const std::string pb = encode_projections(p);
  CHECK(pb.substr(0, 4) == "VAMP");
  CHECK(le32(pb, 12) == 4);
  const ProjectionSet pr = decode_projections(pb, 3.05);
  CHECK(pr.spacing == 3.05);
  CHECK(pr.angles == p.angles);
  CHECK(pr.data == p.data);
  CHECK(encode_projections(pr) == pb);
}

TEST_CASE("angles are stored as f32") {
  ProjectionSet p(std::vector<double>{0.0, 0.1}, 2, 2);
  const ProjectionSet r = decode_projections(encode_projections(p));
  CHECK(r.angles[1] == static_cast<double>(0.1f));
}

TEST_CASE("malformed containers are rejected") {
  const std::string good = encode_projections(sample_set());
  CHECK_THROWS_AS(decode_projections(good.substr(0, good.size() - 1)), Error);
  CHECK_THROWS_AS(decode_projections(good + "x"), Error);
  CHECK_THROWS_AS(decode_projections(good.substr(0, 10)), Error);
  CHECK_THROWS_AS(decode_volume(good), Error);
  std::string bad = good;
  bad[3] = 'X';
  CHECK_THROWS_AS(decode_projections(bad), Error);

  std::string nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 4, &q, 4);
  CHECK_THROWS_AS(decode_projections(nan), Error);

  // Angles out of order.
  std::string order = good;
  const float a = 2.0f;
  std::memcpy(order.data() + 16, &a, 4);
  CHECK_THROWS_AS(decode_projections(order), Error);

  std::string zero = encode_volume(Volume(2, 2, 2));
  zero[4] = 0;
  CHECK_THROWS_AS(decode_volume(zero), Error);
  try {
    decode_volume("VAMQ");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Io);
    CHECK(e.stage() == "io");
  }
}

TEST_CASE("encoders refuse invalid data") {
  Volume v(2, 2, 1);
  v.data[1] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(encode_volume(v), Error);
}

TEST_CASE("files are written atomically") {
  const fs::path path = scratch("set.vamp");
  fs::remove(path);
  save_projections(path, sample_set());
  CHECK(fs::exists(path));
  CHECK_FALSE(fs::exists(fs::path(path.string() + ".partial")));
  CHECK(load_projections(path).data == sample_set().data);
  CHECK_THROWS_AS(load_volume(scratch("missing.vamv")), Error);
  CHECK_THROWS_AS(write_file_atomic(scratch("no/such/dir/x.bin"), "abc"), Error);
}

TEST_CASE("pgm export") {
  const std::vector<float> px{-1.0f, 0.0f, 1.0f, 0.5f, 3.0f, -1.0f};
  GrayRange range;
  const std::string b = encode_pgm16(px, 3, 2, &range);
  const std::string header = "P5\n3 2\n65535\n";
  REQUIRE(b.substr(0, header.size()) == header);
  CHECK(b.size() == header.size() + 12);
  CHECK(range.min == -1.0);
  CHECK(range.max == 3.0);
  auto sample = [&](int i) {
    return static_cast<unsigned>(static_cast<unsigned char>(b[header.size() + 2 * i])) << 8 |
           static_cast<unsigned char>(b[header.size() + 2 * i + 1]);
  };
  CHECK(sample(0) == 0);
  CHECK(sample(4) == 65535);
  CHECK(sample(1) == static_cast<unsigned>(std::lround(0.25 * 65535)));
  CHECK(sample(2) == static_cast<unsigned>(std::lround(0.5 * 65535)));

  const std::vector<float> flat(4, 2.0f);
  const std::string fb = encode_pgm16(flat, 2, 2);
  CHECK(fb.substr(fb.size() - 8) == std::string(8, '\0'));
  CHECK_THROWS_AS(encode_pgm16(px, 4, 2), Error);

  Image img(3, 2);
  img.data = px;
  const fs::path path = scratch("img.pgm");
  save_pgm16(path, img);
  CHECK(read_file(path) == b);
  CHECK(read_file(fs::path(path.string() + ".txt")) == "min -1\nmax 3\n");
}
