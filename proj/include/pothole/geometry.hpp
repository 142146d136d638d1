#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace pothole {

// Pinhole intrinsics. Pixel (u, v) has its center at integer coordinates.
struct CameraIntrinsics {
  double fu = 1.0;
  double fv = 1.0;
  double pu = 0.0;
  double pv = 0.0;
  int width = 1;
  int height = 1;

  // Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

// Dense row-major metric depth. Non-finite or non-positive entries are holes.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, float fill = 0.0f);
  DepthMap(int width, int height, std::vector<float> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  float raw(int u, int v) const noexcept { return values_[static_cast<std::size_t>(v) * width_ + u]; }
  float& raw(int u, int v) noexcept { return values_[static_cast<std::size_t>(v) * width_ + u]; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

inline bool is_valid_depth(double z) noexcept { return std::isfinite(z) && z > 0.0; }

// Axis-aligned box in continuous pixel coordinates, corner form.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  double cx() const noexcept { return x + 0.5 * w; }
  double cy() const noexcept { return y + 0.5 * h; }
  double area() const noexcept { return w * h; }

  static BBox from_center(double cx, double cy, double w, double h) noexcept {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class ObjectClass : int { Pothole = 0, Manhole = 1 };

struct Detection {
  BBox bbox;
  double confidence = 0.0;
  int class_id = 0;
  long frame = 0;

  bool is_pothole() const noexcept { return class_id == static_cast<int>(ObjectClass::Pothole); }
};

// 3x3 homogeneous 2D transform in pixel units.
struct MotionTransform {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  static MotionTransform identity() { return {}; }
  static MotionTransform translation(double tx, double ty);
  static MotionTransform affine(double a11, double a12, double tx, double a21, double a22, double ty);

  bool is_invertible() const noexcept;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
};

// Integer pixel grid [u0, u0 + cols) x [v0, v0 + rows) covered by a box.
struct PixelGrid {
  int u0 = 0;
  int v0 = 0;
  int cols = 0;
  int rows = 0;

  bool empty() const noexcept { return cols <= 0 || rows <= 0; }
  long count() const noexcept { return empty() ? 0 : static_cast<long>(cols) * rows; }
};

double iou(const BBox& a, const BBox& b) noexcept;

BBox clip_to_image(const BBox& b, const CameraIntrinsics& intr) noexcept;

// Floor of left/top, ceil of right/bottom, after clipping to the image.
PixelGrid pixel_grid(const BBox& b, const CameraIntrinsics& intr) noexcept;

// Nearest-pixel lookup. Throws OutOfRange for indices outside the map;
// returns nullopt for holes.
std::optional<double> depth_at(const DepthMap& d, int u, int v);

}  // namespace pothole
