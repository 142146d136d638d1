#include "pothole/projection.hpp"

#include "pothole/error.hpp"

#include <algorithm>
#include <vector>

namespace pothole {

Point3 backproject(double u, double v, double depth, const CameraIntrinsics& intr) {
  if (!is_valid_depth(depth)) {
    throw Error(ErrorCode::InvalidArgument, "depth must be positive and finite");
  }
  return {(u - intr.pu) / intr.fu * depth, (v - intr.pv) / intr.fv * depth, depth};
}

namespace {

double median_valid_depth(const DepthMap& d, const PixelGrid& g) {
  std::vector<double> zs;
  zs.reserve(static_cast<std::size_t>(g.count()));
  for (int v = g.v0; v < g.v0 + g.rows; ++v) {
    for (int u = g.u0; u < g.u0 + g.cols; ++u) {
      const double z = d.raw(u, v);
      if (is_valid_depth(z)) zs.push_back(z);
    }
  }
  if (zs.empty()) throw Error(ErrorCode::NoValidDepth, "no valid depth inside box");
  const auto mid = zs.begin() + static_cast<std::ptrdiff_t>(zs.size() / 2);
  std::nth_element(zs.begin(), mid, zs.end());
  if (zs.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(zs.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double center_distance(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr) {
  const PixelGrid g = pixel_grid(b, intr);
  if (g.empty()) throw Error(ErrorCode::EmptyRegion, "box does not intersect the image");
  const BBox c = clip_to_image(b, intr);
  const int u = std::clamp(static_cast<int>(std::floor(c.cx() + 0.5)), 0, d.width() - 1);
  const int v = std::clamp(static_cast<int>(std::floor(c.cy() + 0.5)), 0, d.height() - 1);
  const auto z = depth_at(d, u, v);
  const double depth = z ? *z : median_valid_depth(d, g);
  return backproject(u, v, depth, intr).norm();
}

}  // namespace pothole
