#pragma once

// Minimum Bounding Triangulated Pixel (MBTP) area estimation.
//
// Every pixel of the clipped detection box is back-projected through the
// pinhole model. The projected points are bounded by an axis-aligned XY
// rectangle, each 2x2 pixel group contributes the area of two triangles,
// and the accumulated area is scaled by pi/4 for the elliptical shape.

#include "pothole/geometry.hpp"
#include "pothole/projection.hpp"

#include <optional>
#include <vector>

namespace pothole {

struct RectXY {
  double min_x = 0.0;
  double max_x = 0.0;
  double min_y = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const noexcept {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  double area() const noexcept { return (max_x - min_x) * (max_y - min_y); }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Back-projected pixel grid of one box. Index (i, j) is grid column i, row j,
// i.e. image pixel (grid.u0 + i, grid.v0 + j).
class ProjectedRegion {
 public:
  ProjectedRegion(BBox source, PixelGrid grid);

  const BBox& source() const noexcept { return source_; }
  const PixelGrid& grid() const noexcept { return grid_; }
  int cols() const noexcept { return grid_.cols; }
  int rows() const noexcept { return grid_.rows; }

  bool valid(int i, int j) const noexcept { return valid_[index(i, j)] != 0; }
  Point3 point(int i, int j) const noexcept {
    const auto k = index(i, j);
    return {x_[k], y_[k], z_[k]};
  }
  Point2 xy(int i, int j) const noexcept {
    const auto k = index(i, j);
    return {x_[k], y_[k]};
  }
  long valid_count() const noexcept;

  // Row-major (row = image row) storage, cols() values per row.
  const double* x_data() const noexcept { return x_.data(); }
  const double* y_data() const noexcept { return y_.data(); }
  const unsigned char* valid_data() const noexcept { return valid_.data(); }

  void set(int i, int j, const Point3& p) noexcept;
  void set_invalid(int i, int j) noexcept;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.cols) + static_cast<std::size_t>(i);
  }

  BBox source_;
  PixelGrid grid_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> z_;
  std::vector<unsigned char> valid_;
};

struct AreaEstimate {
  double area_m2 = 0.0;
  long valid_patch_count = 0;
  long total_patch_count = 0;
  double distance_m = 0.0;
  double confidence = 0.0;
  long frame = 0;
  std::optional<long> track_id;

  double valid_patch_fraction() const noexcept {
    return total_patch_count > 0 ? static_cast<double>(valid_patch_count) / total_patch_count : 0.0;
  }
};

// Throws EmptyRegion when the clipped box covers no pixel.
ProjectedRegion project_region(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr);

// Throws NoValidPoints when the region has no valid projection.
RectXY bounding_rect(const ProjectedRegion& r);

double triangle_area(const Point2& p1, const Point2& p2, const Point2& p3) noexcept;

// Area of the 2x2 group anchored at grid (i, j): triangles (P0, P1, P2) and
// (P0, P2, P3) with P0 = (i, j), P1 = (i+1, j), P2 = (i, j+1), P3 = (i+1, j+1).
// nullopt when any vertex is invalid.
std::optional<double> patch_area(const ProjectedRegion& r, int i, int j);

// Sum of patch areas whose four vertices lie in `rect`, before the pi/4 factor.
struct PatchSum {
  double area_m2 = 0.0;
  long valid_patches = 0;
  long total_patches = 0;
};
PatchSum sum_patches(const ProjectedRegion& r, const RectXY& rect);

inline constexpr double kEllipseFactor = 0.78539816339744830962;  // pi / 4

AreaEstimate estimate_area(const BBox& b, const DepthMap& d, const CameraIntrinsics& intr,
                           double confidence, long frame = 0);

// Corner-point baseline: treats the box as a flat rectangle spanned by the
// back-projections of its top-left and bottom-right pixels, each at its own
// depth. No ellipse factor is applied.
AreaEstimate estimate_area_corner_point(const BBox& b, const DepthMap& d,
                                        const CameraIntrinsics& intr, double confidence,
                                        long frame = 0);

}  // namespace pothole
