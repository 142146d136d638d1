#include "pothole/mbtp.hpp"

#include "pothole/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pothole {

ProjectedRegion::ProjectedRegion(BBox source, PixelGrid grid) : source_(source), grid_(grid) {
  const auto n = static_cast<std::size_t>(grid_.count());
  x_.assign(n, 0.0);
  y_.assign(n, 0.0);
  z_.assign(n, 0.0);
  valid_.assign(n, 0);
}

long ProjectedRegion::valid_count() const noexcept {
  return static_cast<long>(std::count(valid_.begin(), valid_.end(), static_cast<unsigned char>(1)));
}

void ProjectedRegion::set(int i, int j, const Point3& p) noexcept {
  const auto k = index(i, j);
  x_[k] = p.X;
  y_[k] = p.Y;
  z_[k] = p.Z;
  valid_[k] = 1;
}

void ProjectedRegion::set_invalid(int i, int j) noexcept {
  const auto k = index(i, j);
  x_[k] = y_[k] = z_[k] = std::numeric_limits<double>::quiet_NaN();
  valid_[k] = 0;
}

ProjectedRegion project_region(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr) {
  const PixelGrid g = pixel_grid(b, intr);
  if (g.empty()) throw Error(ErrorCode::EmptyRegion, "clipped box covers no pixel");
  if (g.u0 + g.cols > d.width() || g.v0 + g.rows > d.height()) {
    throw Error(ErrorCode::DimensionMismatch, "depth map smaller than the camera image");
  }
  ProjectedRegion region(b, g);
  const double inv_fu = 1.0 / intr.fu;
  const double inv_fv = 1.0 / intr.fv;
  for (int j = 0; j < g.rows; ++j) {
    const int v = g.v0 + j;
    const double yn = (v - intr.pv) * inv_fv;
    for (int i = 0; i < g.cols; ++i) {
      const int u = g.u0 + i;
      const double z = d.raw(u, v);
      if (is_valid_depth(z)) {
        region.set(i, j, {(u - intr.pu) * inv_fu * z, yn * z, z});
      } else {
        region.set_invalid(i, j);
      }
    }
  }
  return region;
}

RectXY bounding_rect(const ProjectedRegion& r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  RectXY rect{inf, -inf, inf, -inf};
  const double* x = r.x_data();
  const double* y = r.y_data();
  const unsigned char* ok = r.valid_data();
  const std::size_t n = static_cast<std::size_t>(r.cols()) * r.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const bool v = ok[k] != 0;
    rect.min_x = std::min(rect.min_x, v ? x[k] : inf);
    rect.max_x = std::max(rect.max_x, v ? x[k] : -inf);
    rect.min_y = std::min(rect.min_y, v ? y[k] : inf);
    rect.max_y = std::max(rect.max_y, v ? y[k] : -inf);
  }
  if (!(rect.min_x <= rect.max_x)) throw Error(ErrorCode::NoValidPoints, "region has no valid projected point");
  return rect;
}

double triangle_area(const Point2& p1, const Point2& p2, const Point2& p3) noexcept {
  return 0.5 * std::abs((p2.x - p1.x) * (p3.y - p1.y) - (p2.y - p1.y) * (p3.x - p1.x));
}

std::optional<double> patch_area(const ProjectedRegion& r, int i, int j) {
  if (i < 0 || j < 0 || i + 1 >= r.cols() || j + 1 >= r.rows()) {
    throw Error(ErrorCode::OutOfRange, "patch anchor outside region grid");
  }
  if (!r.valid(i, j) || !r.valid(i + 1, j) || !r.valid(i, j + 1) || !r.valid(i + 1, j + 1)) {
    return std::nullopt;
  }
  const Point2 p0 = r.xy(i, j);
  const Point2 p1 = r.xy(i + 1, j);
  const Point2 p2 = r.xy(i, j + 1);
  const Point2 p3 = r.xy(i + 1, j + 1);
  return triangle_area(p0, p1, p2) + triangle_area(p0, p2, p3);
}

namespace {

// Patch sum over row-major vertex arrays. `use` is scratch of cols*rows bytes.
PatchSum sum_patches_kernel(const double* x, const double* y, const unsigned char* ok, int cols, int rows,
                            const RectXY& rect, unsigned char* use) {
  PatchSum s;
  if (cols < 2 || rows < 2) return s;
  s.total_patches = static_cast<long>(cols - 1) * (rows - 1);
  // A vertex is usable when its depth is valid and it lies inside `rect`.
  const std::size_t n = static_cast<std::size_t>(cols) * rows;
  for (std::size_t k = 0; k < n; ++k) use[k] = ok[k] && rect.contains(x[k], y[k]);

  double sum = 0.0;
  long count = 0;
  for (int j = 0; j + 1 < rows; ++j) {
    const std::size_t a = static_cast<std::size_t>(j) * cols;
    const std::size_t b = a + cols;
    for (int i = 0; i + 1 < cols; ++i) {
      const std::size_t k0 = a + i, k1 = a + i + 1, k2 = b + i, k3 = b + i + 1;
      if (!(use[k0] & use[k1] & use[k2] & use[k3])) continue;
      // P0 (i,j), P1 (i+1,j), P2 (i,j+1), P3 (i+1,j+1); triangles P0P1P2 and P0P2P3.
      const double ux = x[k1] - x[k0], uy = y[k1] - y[k0];
      const double vx = x[k2] - x[k0], vy = y[k2] - y[k0];
      const double wx = x[k3] - x[k0], wy = y[k3] - y[k0];
      sum += 0.5 * (std::abs(ux * vy - uy * vx) + std::abs(vx * wy - vy * wx));
      ++count;
    }
  }
  s.area_m2 = sum;
  s.valid_patches = count;
  return s;
}

// Reused across calls on one thread so large boxes do not fault in fresh
// pages on every estimate.
struct Workspace {
  std::vector<double> x, y;
  std::vector<unsigned char> ok, use;

  void resize(std::size_t n) {
    if (x.size() < n) {
      x.resize(n);
      y.resize(n);
      ok.resize(n);
      use.resize(n);
    }
  }
};

}  // namespace

PatchSum sum_patches(const ProjectedRegion& r, const RectXY& rect) {
  std::vector<unsigned char> use(static_cast<std::size_t>(r.cols()) * r.rows());
  return sum_patches_kernel(r.x_data(), r.y_data(), r.valid_data(), r.cols(), r.rows(), rect, use.data());
}

AreaEstimate estimate_area(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr,
                           double confidence, long frame) {
  const PixelGrid g = pixel_grid(b, intr);
  if (g.empty()) throw Error(ErrorCode::EmptyRegion, "clipped box covers no pixel");
  if (g.u0 + g.cols > d.width() || g.v0 + g.rows > d.height()) {
    throw Error(ErrorCode::DimensionMismatch, "depth map smaller than the camera image");
  }
  AreaEstimate est;
  est.confidence = confidence;
  est.frame = frame;
  est.distance_m = center_distance(b, d, intr);  // NoValidDepth when nothing is usable

  thread_local Workspace ws;
  ws.resize(static_cast<std::size_t>(g.count()));
  constexpr double inf = std::numeric_limits<double>::infinity();
  RectXY rect{inf, -inf, inf, -inf};
  const double inv_fu = 1.0 / intr.fu;
  const double inv_fv = 1.0 / intr.fv;
  for (int j = 0; j < g.rows; ++j) {
    const int v = g.v0 + j;
    const double yn = (v - intr.pv) * inv_fv;
    const std::size_t row = static_cast<std::size_t>(j) * g.cols;
    for (int i = 0; i < g.cols; ++i) {
      const int u = g.u0 + i;
      const double z = d.raw(u, v);
      const bool valid = is_valid_depth(z);
      const double X = valid ? (u - intr.pu) * inv_fu * z : 0.0;
      const double Y = valid ? yn * z : 0.0;
      ws.x[row + i] = X;
      ws.y[row + i] = Y;
      ws.ok[row + i] = valid;
      rect.min_x = std::min(rect.min_x, valid ? X : inf);
      rect.max_x = std::max(rect.max_x, valid ? X : -inf);
      rect.min_y = std::min(rect.min_y, valid ? Y : inf);
      rect.max_y = std::max(rect.max_y, valid ? Y : -inf);
    }
  }
  const PatchSum s = sum_patches_kernel(ws.x.data(), ws.y.data(), ws.ok.data(), g.cols, g.rows, rect, ws.use.data());
  est.area_m2 = s.area_m2 * kEllipseFactor;
  est.valid_patch_count = s.valid_patches;
  est.total_patch_count = s.total_patches;
  return est;
}

AreaEstimate estimate_area_corner_point(const BBox& b, const DepthMap& d,
                                        const CameraIntrinsics& intr, double confidence,
                                        long frame) {
  const PixelGrid g = pixel_grid(b, intr);
  if (g.empty()) throw Error(ErrorCode::EmptyRegion, "clipped box covers no pixel");
  const int u1 = g.u0 + g.cols - 1;
  const int v1 = g.v0 + g.rows - 1;
  const auto z0 = depth_at(d, g.u0, g.v0);
  const auto z1 = depth_at(d, u1, v1);
  if (!z0 || !z1) throw Error(ErrorCode::NoValidDepth, "corner pixel has no valid depth");
  const Point3 a = backproject(g.u0, g.v0, *z0, intr);
  const Point3 c = backproject(u1, v1, *z1, intr);
  AreaEstimate est;
  est.area_m2 = std::abs(c.X - a.X) * std::abs(c.Y - a.Y);
  est.valid_patch_count = est.total_patch_count =
      (g.cols >= 2 && g.rows >= 2) ? static_cast<long>(g.cols - 1) * (g.rows - 1) : 0;
  est.distance_m = center_distance(b, d, intr);
  est.confidence = confidence;
  est.frame = frame;
  return est;
}

}  // namespace pothole
