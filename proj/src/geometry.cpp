#include "pothole/geometry.hpp"

#include "pothole/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <string>

namespace pothole {

void CameraIntrinsics::validate() const {
  if (!(fu > 0.0) || !(fv > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  if (!(pu >= 0.0 && pu < width) || !(pv >= 0.0 && pv < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside image");
  }
}

DepthMap::DepthMap(int width, int height, float fill)
    : DepthMap(width, height, std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                                     static_cast<std::size_t>(std::max(height, 0)),
                                                 fill)) {}

DepthMap::DepthMap(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 0 || height < 0 ||
      values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "depth values do not match " + std::to_string(width) +
                                                  "x" + std::to_string(height));
  }
}

MotionTransform MotionTransform::translation(double tx, double ty) {
  return affine(1.0, 0.0, tx, 0.0, 1.0, ty);
}

MotionTransform MotionTransform::affine(double a11, double a12, double tx, double a21, double a22,
                                        double ty) {
  MotionTransform t;
  t.m << a11, a12, tx, a21, a22, ty, 0.0, 0.0, 1.0;
  return t;
}

bool MotionTransform::is_invertible() const noexcept {
  const double det2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return std::isfinite(det2) && std::abs(det2) > 1e-9 && std::abs(m.determinant()) > 1e-12;
}

Eigen::Vector2d MotionTransform::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d h = m * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return h.head<2>() / h.z();
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = std::max(a.area(), 0.0) + std::max(b.area(), 0.0) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BBox clip_to_image(const BBox& b, const CameraIntrinsics& intr) noexcept {
  const double max_x = static_cast<double>(intr.width - 1);
  const double max_y = static_cast<double>(intr.height - 1);
  const double left = std::clamp(b.x, 0.0, max_x);
  const double top = std::clamp(b.y, 0.0, max_y);
  const double right = std::clamp(b.right(), 0.0, max_x);
  const double bottom = std::clamp(b.bottom(), 0.0, max_y);
  return {left, top, std::max(right - left, 0.0), std::max(bottom - top, 0.0)};
}

PixelGrid pixel_grid(const BBox& b, const CameraIntrinsics& intr) noexcept {
  const BBox c = clip_to_image(b, intr);
  PixelGrid g;
  g.u0 = static_cast<int>(std::floor(c.x));
  g.v0 = static_cast<int>(std::floor(c.y));
  g.cols = std::max(static_cast<int>(std::ceil(c.right())) - g.u0, 0);
  g.rows = std::max(static_cast<int>(std::ceil(c.bottom())) - g.v0, 0);
  return g;
}

std::optional<double> depth_at(const DepthMap& d, int u, int v) {
  if (u < 0 || v < 0 || u >= d.width() || v >= d.height()) {
    throw Error(ErrorCode::OutOfRange,
                "pixel (" + std::to_string(u) + "," + std::to_string(v) + ") outside depth map");
  }
  const double z = d.raw(u, v);
  if (!is_valid_depth(z)) return std::nullopt;
  return z;
}

}  // namespace pothole
