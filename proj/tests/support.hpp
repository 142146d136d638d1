#pragma once

#include "pothole/geometry.hpp"

#include <cmath>
#include <random>

namespace pothole::test {

inline CameraIntrinsics intrinsics(double f, int w, int h) {
  return {f, f, w / 2.0, h / 2.0, w, h};
}

inline DepthMap uniform_depth(int w, int h, float z) { return DepthMap(w, h, z); }

inline bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

inline BBox random_box(std::mt19937_64& rng, double max_xy = 100.0, double max_wh = 50.0) {
  std::uniform_real_distribution<double> p(-10.0, max_xy), s(0.0, max_wh);
  return {p(rng), p(rng), s(rng), s(rng)};
}

}  // namespace pothole::test
