#pragma once

#include "pothole/geometry.hpp"

namespace pothole {

// Camera-frame point, meters.
struct Point3 {
  double X = 0.0;
  double Y = 0.0;
  double Z = 0.0;

  double norm() const noexcept { return std::sqrt(X * X + Y * Y + Z * Z); }
};

// Pinhole back-projection of pixel (u, v) at depth Z. Throws InvalidArgument for
// non-positive or non-finite depth.
Point3 backproject(double u, double v, double depth, const CameraIntrinsics& intr);

// Forward pinhole map, used by tests and the synthetic renderer.
inline Eigen::Vector2d project(const Point3& p, const CameraIntrinsics& intr) noexcept {
  return {intr.fu * p.X / p.Z + intr.pu, intr.fv * p.Y / p.Z + intr.pv};
}

// Euclidean camera distance of the box center. Falls back to the median valid
// depth inside the box when the center pixel is a hole; NoValidDepth if the
// box has none.
double center_distance(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr);

}  // namespace pothole
