#include "pothole/box_kalman.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace pothole {

namespace {

Matrix8d transition() {
  Matrix8d f = Matrix8d::Identity();
  for (int k = 0; k < 4; ++k) f(k, k + 4) = 1.0;
  return f;
}

Eigen::Matrix<double, 4, 8> observation() {
  Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
  for (int k = 0; k < 4; ++k) h(k, k) = 1.0;
  return h;
}

double size_scale(double s) { return std::max(std::abs(s), 1.0); }

}  // namespace

bool TrackState::covariance_is_psd(double tol) const {
  if (!covariance.allFinite()) return false;
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    return false;
  }
  return (covariance.diagonal().array() >= 0.0).all();
}

TrackState initiate_state(const BBox& z, const BoxNoise& noise) {
  TrackState s;
  s.mean << z.cx(), z.cy(), z.w, z.h, 0.0, 0.0, 0.0, 0.0;
  const double w = size_scale(z.w);
  const double h = size_scale(z.h);
  Vector8d std;
  std << 2.0 * noise.position_weight * w, 2.0 * noise.position_weight * h,
      2.0 * noise.position_weight * w, 2.0 * noise.position_weight * h,
      10.0 * noise.velocity_weight * w, 10.0 * noise.velocity_weight * h,
      10.0 * noise.velocity_weight * w, 10.0 * noise.velocity_weight * h;
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

TrackState predict(const TrackState& s, const BoxNoise& noise) {
  static const Matrix8d f = transition();
  const double w = size_scale(s.mean(2));
  const double h = size_scale(s.mean(3));
  Vector8d std;
  std << noise.position_weight * w, noise.position_weight * h, noise.position_weight * w,
      noise.position_weight * h, noise.velocity_weight * w, noise.velocity_weight * h,
      noise.velocity_weight * w, noise.velocity_weight * h;
  TrackState out;
  out.mean = f * s.mean;
  out.covariance = f * s.covariance * f.transpose();
  out.covariance.diagonal() += std.array().square().matrix();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

TrackState kf_update(const TrackState& s, const BBox& z, const BoxNoise& noise) {
  static const Eigen::Matrix<double, 4, 8> hm = observation();
  const double w = size_scale(s.mean(2));
  const double h = size_scale(s.mean(3));
  Eigen::Vector4d r_std(noise.measurement_weight * w, noise.measurement_weight * h,
                        noise.measurement_weight * w, noise.measurement_weight * h);
  const Eigen::Matrix4d r = r_std.array().square().matrix().asDiagonal();
  const Eigen::Vector4d meas(z.cx(), z.cy(), z.w, z.h);

  const Eigen::Matrix4d innov_cov = hm * s.covariance * hm.transpose() + r;
  const Eigen::Matrix<double, 8, 4> pht = s.covariance * hm.transpose();
  const Eigen::Matrix<double, 8, 4> gain = innov_cov.ldlt().solve(pht.transpose()).transpose();

  TrackState out;
  out.mean = s.mean + gain * (meas - hm * s.mean);
  // Joseph form keeps the covariance symmetric PSD.
  const Matrix8d ikh = Matrix8d::Identity() - gain * hm;
  out.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

TrackState warp_state(const TrackState& s, const MotionTransform& t) {
  const Eigen::Matrix2d a = t.m.topLeftCorner<2, 2>();
  Matrix8d r = Matrix8d::Identity();
  r.block<2, 2>(0, 0) = a;
  r.block<2, 2>(4, 4) = a;
  TrackState out;
  out.mean = r * s.mean;
  out.mean.head<2>() += t.m.block<2, 1>(0, 2);
  out.covariance = r * s.covariance * r.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

}  // namespace pothole
