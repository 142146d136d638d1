#pragma once

#include "pothole/geometry.hpp"

#include <cstdint>
#include <vector>

namespace pothole {

// A keypoint seen at `prev` in frame k-1 and at `curr` in frame k.
struct Correspondence {
  Eigen::Vector2d prev;
  Eigen::Vector2d curr;
};

struct RansacOptions {
  double inlier_threshold_px = 3.0;
  int max_iterations = 2000;
  double confidence = 0.999;
};

// Affine T with curr ~ T * prev, chosen by inlier count and refit on the
// inliers by least squares. Identity when fewer than 3 inliers are found.
// Throws TooFewCorrespondences for fewer than 3 pairs.
MotionTransform fit_motion_ransac(const std::vector<Correspondence>& correspondences,
                                  std::uint64_t seed, const RansacOptions& opts = {});

// Least-squares affine fit over all pairs.
MotionTransform fit_affine_least_squares(const std::vector<Correspondence>& correspondences);

// Maps the box center through T^-1; width and height are kept.
// Throws SingularTransform.
BBox compensate(const BBox& b, const MotionTransform& t);

}  // namespace pothole
