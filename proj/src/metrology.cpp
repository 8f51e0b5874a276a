#include "vamct/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "fftw_util.hpp"
#include "vamct/parallel.hpp"

namespace vamct {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

using Point = std::array<int, 3>;

// Runs a 1D box filter of half-width r along `axis`: erosion keeps an element
// when its whole window lies in the grid and is set; dilation when any
// element of the clipped window is set.
Mask box_pass(const Mask& in, int axis, int r, bool erode) {
  const int dims[3] = {in.nx, in.ny, in.nz};
  const int len = dims[axis];
  if (len <= 1 || r <= 0) return in;
  const std::size_t strides[3] = {1, static_cast<std::size_t>(in.nx), static_cast<std::size_t>(in.nx) * in.ny};
  const std::size_t step = strides[axis];
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  const std::size_t lines = static_cast<std::size_t>(dims[a1]) * dims[a2];
  Mask out = in;
  parallel_for(lines, [&](std::size_t line) {
    const int i1 = static_cast<int>(line % dims[a1]);
    const int i2 = static_cast<int>(line / dims[a1]);
    const std::size_t base = i1 * strides[a1] + i2 * strides[a2];
    // prefix[k] = number of set elements among the first k of the line
    std::vector<int> prefix(len + 1, 0);
    for (int k = 0; k < len; ++k) prefix[k + 1] = prefix[k] + in.data[base + k * step];
    for (int k = 0; k < len; ++k) {
      const int lo = k - r, hi = k + r;
      std::uint8_t v;
      if (erode) {
        v = (lo >= 0 && hi < len && prefix[hi + 1] - prefix[lo] == 2 * r + 1) ? 1 : 0;
      } else {
        v = prefix[std::min(hi, len - 1) + 1] - prefix[std::max(lo, 0)] > 0 ? 1 : 0;
      }
      out.data[base + k * step] = v;
    }
  });
  return out;
}

std::int64_t dist2(const Point& a, const Point& b) {
  std::int64_t s = 0;
  for (int k = 0; k < 3; ++k) {
    const std::int64_t d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Dual-tree branch and bound over a median-split tree. Node pairs whose
// bounding-box upper bound falls below the best squared distance are pruned;
// equal bounds are kept so ties reach the lexicographic comparison.
class Diameter {
public:
  explicit Diameter(std::span<const Point> pts) : pts_(pts.begin(), pts.end()) {
    nodes_.reserve(2 * pts_.size() / kLeaf + 2);
    build(0, pts_.size());
  }

  Extent solve() {
    seed();
    visit(0, 0);
    Extent e;
    e.length = std::sqrt(static_cast<double>(best_));
    e.p1 = p1_;
    e.p2 = p2_;
    return e;
  }

private:
  static constexpr std::size_t kLeaf = 32;

  struct Node {
    Point lo, hi;
    std::size_t begin, end;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end) {
    Node n;
    n.begin = begin;
    n.end = end;
    n.lo = n.hi = pts_[begin];
    for (std::size_t i = begin; i < end; ++i)
      for (int k = 0; k < 3; ++k) {
        n.lo[k] = std::min(n.lo[k], pts_[i][k]);
        n.hi[k] = std::max(n.hi[k], pts_[i][k]);
      }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin > kLeaf) {
      int axis = 0;
      for (int k = 1; k < 3; ++k)
        if (n.hi[k] - n.lo[k] > n.hi[axis] - n.lo[axis]) axis = k;
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(pts_.begin() + begin, pts_.begin() + mid, pts_.begin() + end,
                       [axis](const Point& a, const Point& b) { return a[axis] < b[axis]; });
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  static std::int64_t upper(const Node& a, const Node& b) {
    std::int64_t s = 0;
    for (int k = 0; k < 3; ++k) {
      const std::int64_t d = std::max(std::abs(static_cast<std::int64_t>(a.hi[k]) - b.lo[k]),
                                      std::abs(static_cast<std::int64_t>(b.hi[k]) - a.lo[k]));
      s += d * d;
    }
    return s;
  }

  void offer(const Point& a, const Point& b) {
    const std::int64_t d = dist2(a, b);
    if (d < best_) return;
    const Point& lo = std::min(a, b);
    const Point& hi = std::max(a, b);
    if (d > best_ || lo < p1_ || (lo == p1_ && hi < p2_)) {
      best_ = d;
      p1_ = lo;
      p2_ = hi;
    }
  }

  // Double-normal walk gives a strong initial bound.
  void seed() {
    p1_ = p2_ = pts_[0];
    best_ = 0;
    std::size_t from = 0;
    for (int iter = 0; iter < 4; ++iter) {
      std::size_t far = from;
      std::int64_t fd = -1;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        const std::int64_t d = dist2(pts_[from], pts_[i]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      offer(pts_[from], pts_[far]);
      from = far;
    }
    if (pts_.size() == 1) {
      p1_ = p2_ = pts_[0];
      best_ = 0;
    }
  }

  void visit(int ia, int ib) {
    const Node& a = nodes_[ia];
    const Node& b = nodes_[ib];
    if (upper(a, b) < best_) return;
    const bool leaf_a = a.left < 0, leaf_b = b.left < 0;
    if (leaf_a && leaf_b) {
      if (ia == ib) {
        for (std::size_t i = a.begin; i < a.end; ++i)
          for (std::size_t j = i + 1; j < a.end; ++j) offer(pts_[i], pts_[j]);
      } else {
        for (std::size_t i = a.begin; i < a.end; ++i)
          for (std::size_t j = b.begin; j < b.end; ++j) offer(pts_[i], pts_[j]);
      }
      return;
    }
    if (ia == ib) {
      visit(a.left, a.right);
      visit(a.left, a.left);
      visit(a.right, a.right);
      return;
    }
    const bool split_a = !leaf_a && (leaf_b || a.end - a.begin >= b.end - b.begin);
    const int c1 = split_a ? a.left : b.left;
    const int c2 = split_a ? a.right : b.right;
    const int other = split_a ? ib : ia;
    const std::int64_t u1 = upper(nodes_[c1], nodes_[other]);
    const std::int64_t u2 = upper(nodes_[c2], nodes_[other]);
    if (u1 >= u2) {
      visit(c1, other);
      visit(c2, other);
    } else {
      visit(c2, other);
      visit(c1, other);
    }
  }

  std::vector<Point> pts_;
  std::vector<Node> nodes_;
  std::int64_t best_ = -1;
  Point p1_{}, p2_{};
};

Mask threshold(std::span<const float> data, int nx, int ny, int nz, double tau) {
  if (!std::isfinite(tau)) throw Error(Error::Kind::InvalidArgument, "segment", "threshold must be finite");
  Mask m(nx, ny, nz);
  for (std::size_t i = 0; i < data.size(); ++i) m.data[i] = data[i] >= tau ? 1 : 0;
  return m;
}

Mask morphology(Mask m, const Morphology& morph) {
  if (morph.open_radius < 0 || morph.close_radius < 0)
    throw Error(Error::Kind::InvalidArgument, "segment", "morphology radii must be >= 0");
  if (morph.open_radius > 0) m = dilate(erode(m, morph.open_radius), morph.open_radius);
  if (morph.close_radius > 0) m = erode(dilate(m, morph.close_radius), morph.close_radius);
  return m;
}

}  // namespace

Mask erode(const Mask& m, int r) {
  Mask out = m;
  for (int axis = 0; axis < 3; ++axis) out = box_pass(out, axis, r, true);
  return out;
}

Mask dilate(const Mask& m, int r) {
  Mask out = m;
  for (int axis = 0; axis < 3; ++axis) out = box_pass(out, axis, r, false);
  return out;
}

Mask segment_threshold(const Volume& volume, double tau, const Morphology& morph) {
  return morphology(threshold(volume.data, volume.nx, volume.ny, volume.nz, tau), morph);
}

Mask segment_threshold(const Image& image, double tau, const Morphology& morph) {
  return morphology(threshold(image.data, image.width, image.height, 1, tau), morph);
}

std::vector<std::array<int, 3>> boundary_voxels(const Mask& m) {
  std::vector<Point> out;
  const int dims[3] = {m.nx, m.ny, m.nz};
  for (int z = 0; z < m.nz; ++z)
    for (int y = 0; y < m.ny; ++y)
      for (int x = 0; x < m.nx; ++x) {
        if (!m.at(x, y, z)) continue;
        const Point p{x, y, z};
        bool edge = false;
        for (int axis = 0; axis < 3 && !edge; ++axis) {
          if (dims[axis] <= 1) continue;
          for (int d : {-1, 1}) {
            Point q = p;
            q[axis] += d;
            if (q[axis] < 0 || q[axis] >= dims[axis] || !m.at(q[0], q[1], q[2])) {
              edge = true;
              break;
            }
          }
        }
        if (edge) out.push_back(p);
      }
  return out;
}

Extent max_pairwise_distance(std::span<const std::array<int, 3>> points) {
  if (points.empty()) throw Error(Error::Kind::Rejected, "measure", "no points to measure");
  return Diameter(points).solve();
}

Extent max_extent_volume(const Mask& mask) {
  const auto pts = boundary_voxels(mask);
  if (pts.empty()) throw Error(Error::Kind::Rejected, "measure", "empty mask");
  return max_pairwise_distance(pts);
}

ProjectionExtent max_extent_projections(const ProjectionSet& set, double tau) {
  validate(set, "measure");
  std::vector<std::optional<Extent>> per(set.n_angles());
  parallel_for(set.n_angles(), [&](std::size_t i) {
    const auto frame = set.frame(i);
    Mask m(set.nu, set.nv, 1);
    for (std::size_t k = 0; k < frame.size(); ++k) m.data[k] = frame[k] >= tau ? 1 : 0;
    const auto pts = boundary_voxels(m);
    if (!pts.empty()) per[i] = max_pairwise_distance(pts);
  });
  std::optional<ProjectionExtent> best;
  for (std::size_t i = 0; i < per.size(); ++i) {
    if (!per[i]) continue;
    // Exact comparison on squared integer distances.
    const auto sq = [](const Extent& e) { return dist2(e.p1, e.p2); };
    if (!best || sq(*per[i]) > sq(best->extent)) best = ProjectionExtent{*per[i], set.angles[i], i};
  }
  if (!best) throw Error(Error::Kind::Rejected, "measure", "no frame has a pixel at or above the threshold");
  return *best;
}

MeasurementReport compare_extents(const Extent& volume, const ProjectionExtent& projection, double tolerance_px,
                                  double spacing_um) {
  MeasurementReport r;
  r.volume = volume;
  r.projection = projection;
  r.spacing_um = spacing_um;
  r.tolerance = tolerance_px;
  r.difference = std::abs(volume.length - projection.extent.length);
  r.pass = r.difference <= tolerance_px;
  return r;
}

void write_measurement_report(std::ostream& out, const MeasurementReport& r) {
  const auto pt = [&](const std::array<int, 3>& p) {
    return std::to_string(p[0]) + ' ' + std::to_string(p[1]) + ' ' + std::to_string(p[2]);
  };
  out << std::setprecision(10);
  out << "volume_length_px " << r.volume.length << '\n';
  out << "volume_length_um " << r.volume_um() << '\n';
  out << "volume_p1_xyz " << pt(r.volume.p1) << '\n';
  out << "volume_p2_xyz " << pt(r.volume.p2) << '\n';
  out << "projection_length_px " << r.projection.extent.length << '\n';
  out << "projection_length_um " << r.projection_um() << '\n';
  out << "projection_angle_deg " << r.projection.angle_deg << '\n';
  out << "projection_frame " << r.projection.frame << '\n';
  out << "projection_p1_uv " << r.projection.extent.p1[0] << ' ' << r.projection.extent.p1[1] << '\n';
  out << "projection_p2_uv " << r.projection.extent.p2[0] << ' ' << r.projection.extent.p2[1] << '\n';
  out << "difference_px " << r.difference << '\n';
  out << "tolerance_px " << r.tolerance << '\n';
  out << "result " << (r.pass ? "pass" : "fail") << '\n';
}

std::vector<float> density_profile(const Image& image, int u) {
  if (u < 0 || u >= image.width)
    throw Error(Error::Kind::InvalidArgument, "profile",
                "column " + std::to_string(u) + " outside [0, " + std::to_string(image.width) + ")");
  std::vector<float> p(image.height);
  for (int y = 0; y < image.height; ++y) p[y] = image.at(u, y);
  return p;
}

void write_profile_csv(std::ostream& out, std::span<const float> profile) {
  out << "row,value\n" << std::setprecision(9);
  for (std::size_t i = 0; i < profile.size(); ++i) out << i << ',' << profile[i] << '\n';
}

Similarity image_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty())
    throw Error(Error::Kind::DimensionMismatch, "compare", "inputs differ in shape");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0, se = 0.0;
  float bmin = b[0], bmax = b[0];
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
    bmin = std::min(bmin, b[i]);
    bmax = std::max(bmax, b[i]);
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  Similarity s;
  const double rmse = std::sqrt(se / n);
  const double range = static_cast<double>(bmax) - bmin;
  s.nrmse = range > 0.0 ? rmse / range : (rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  if (saa > 0.0 && sbb > 0.0) s.pearson = sab / std::sqrt(saa * sbb);
  return s;
}

Similarity sinogram_similarity(const Sinogram& a, const Sinogram& b) {
  if (a.nu != b.nu || a.n_angles() != b.n_angles())
    throw Error(Error::Kind::DimensionMismatch, "compare", "sinograms differ in shape");
  return image_similarity(a.data, b.data);
}

double relative_rmse(std::span<const float> image, std::span<const float> reference) {
  return image_similarity(image, reference).nrmse;
}

namespace {

bool flat(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [&](float x) { return x == v[0]; });
}

// sum over (x, y) of a(x, y) * b(x + dx, y + dy), in a fixed order.
double correlation_at(const Slice& a, const Slice& b, int dx, int dy) {
  double s = 0.0;
  for (int y = 0; y < a.height; ++y) {
    const int yb = y + dy;
    if (yb < 0 || yb >= b.height) continue;
    for (int x = 0; x < a.width; ++x) {
      const int xb = x + dx;
      if (xb < 0 || xb >= b.width) continue;
      s += static_cast<double>(a.at(x, y)) * b.at(xb, yb);
    }
  }
  return s;
}

double parabola_peak(double cm, double c0, double cp) {
  const double den = cm - 2.0 * c0 + cp;
  if (!(den < 0.0)) return 0.0;
  return std::clamp(0.5 * (cm - cp) / den, -1.0, 1.0);
}

}  // namespace

std::array<double, 2> registration_offset(const Slice& a, const Slice& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(Error::Kind::DimensionMismatch, "register", "images differ in shape");
  if (a.data.empty() || flat(a.data) || flat(b.data))
    throw Error(Error::Kind::Rejected, "register", "cannot register a flat image");
  const int pw = 2 * a.width, ph = 2 * a.height;
  const int bins = pw / 2 + 1;
  const std::size_t nreal = static_cast<std::size_t>(pw) * ph;
  const std::size_t ncomplex = static_cast<std::size_t>(ph) * bins;
  auto ra = detail::fftw_real(nreal);
  auto rb = detail::fftw_real(nreal);
  auto fa = detail::fftw_complex_buf(ncomplex);
  auto fb = detail::fftw_complex_buf(ncomplex);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_2d(ph, pw, ra.get(), fa.get(), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_2d(ph, pw, fa.get(), ra.get(), FFTW_ESTIMATE);
  }
  std::fill(ra.get(), ra.get() + nreal, 0.0);
  std::fill(rb.get(), rb.get() + nreal, 0.0);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      ra[static_cast<std::size_t>(y) * pw + x] = a.at(x, y);
      rb[static_cast<std::size_t>(y) * pw + x] = b.at(x, y);
    }
  fftw_execute_dft_r2c(fwd, ra.get(), fa.get());
  fftw_execute_dft_r2c(fwd, rb.get(), fb.get());
  for (std::size_t k = 0; k < ncomplex; ++k) {
    // conj(A) * B
    const double re = fa[k][0] * fb[k][0] + fa[k][1] * fb[k][1];
    const double im = fa[k][0] * fb[k][1] - fa[k][1] * fb[k][0];
    fa[k][0] = re;
    fa[k][1] = im;
  }
  fftw_execute_dft_c2r(inv, fa.get(), ra.get());
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }

  double best = -std::numeric_limits<double>::infinity();
  int bx = 0, by = 0;
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      const double v = ra[static_cast<std::size_t>(y) * pw + x];
      if (v > best) {
        best = v;
        bx = x < pw / 2 ? x : x - pw;
        by = y < ph / 2 ? y : y - ph;
      }
    }

  // Refinement values are evaluated directly so that the symmetric
  // neighbours of an exact integer shift are bitwise equal.
  const double c0 = correlation_at(a, b, bx, by);
  const double fx = parabola_peak(correlation_at(a, b, bx - 1, by), c0, correlation_at(a, b, bx + 1, by));
  const double fy = parabola_peak(correlation_at(a, b, bx, by - 1), c0, correlation_at(a, b, bx, by + 1));
  return {bx + fx, by + fy};
}

}  // namespace vamct
