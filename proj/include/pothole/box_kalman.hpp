#pragma once

#include "pothole/geometry.hpp"

#include <Eigen/Core>

namespace pothole {

using Vector8d = Eigen::Matrix<double, 8, 1>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;

// Noise standard deviations scale with box size (SORT family heuristic).
struct BoxNoise {
  double position_weight = 0.05;
  double velocity_weight = 0.0125;
  double measurement_weight = 0.05;
};

// Constant-velocity state (x, y, w, h, vx, vy, vw, vh); (x, y) is the box center.
struct TrackState {
  Vector8d mean = Vector8d::Zero();
  Matrix8d covariance = Matrix8d::Identity();

  BBox box() const noexcept { return BBox::from_center(mean(0), mean(1), mean(2), mean(3)); }
  bool covariance_is_psd(double tol = 1e-9) const;
};

TrackState initiate_state(const BBox& z, const BoxNoise& noise = {});

// x <- F x, P <- F P F^T + Q
TrackState predict(const TrackState& s, const BoxNoise& noise = {});

// Linear update on (x, y, w, h).
TrackState kf_update(const TrackState& s, const BBox& z, const BoxNoise& noise = {});

// Re-expresses a state in the coordinates of a new frame after camera motion:
// center and center velocity go through the affine part of T, size is kept.
TrackState warp_state(const TrackState& s, const MotionTransform& t);

}  // namespace pothole
