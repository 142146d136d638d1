#include "pothole/motion.hpp"

#include "pothole/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace pothole {

namespace {

std::optional<MotionTransform> solve_affine(const std::vector<Correspondence>& c,
                                            const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 6);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& pc = c[idx[static_cast<std::size_t>(k)]];
    a.row(2 * k) << pc.prev.x(), pc.prev.y(), 1.0, 0.0, 0.0, 0.0;
    a.row(2 * k + 1) << 0.0, 0.0, 0.0, pc.prev.x(), pc.prev.y(), 1.0;
    b(2 * k) = pc.curr.x();
    b(2 * k + 1) = pc.curr.y();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 6) return std::nullopt;
  const Eigen::VectorXd x = qr.solve(b);
  if (!x.allFinite()) return std::nullopt;
  auto t = MotionTransform::affine(x(0), x(1), x(2), x(3), x(4), x(5));
  if (!t.is_invertible()) return std::nullopt;
  return t;
}

std::vector<std::size_t> inliers_of(const std::vector<Correspondence>& c, const MotionTransform& t,
                                    double threshold) {
  std::vector<std::size_t> out;
  const double thr2 = threshold * threshold;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if ((t.apply(c[k].prev) - c[k].curr).squaredNorm() < thr2) out.push_back(k);
  }
  return out;
}

}  // namespace

MotionTransform fit_affine_least_squares(const std::vector<Correspondence>& correspondences) {
  if (correspondences.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences");
  }
  std::vector<std::size_t> all(correspondences.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  auto t = solve_affine(correspondences, all);
  return t ? *t : MotionTransform::identity();
}

MotionTransform fit_motion_ransac(const std::vector<Correspondence>& correspondences,
                                  std::uint64_t seed, const RansacOptions& opts) {
  const std::size_t n = correspondences.size();
  if (n < 3) throw Error(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> best_inliers;
  int max_iter = opts.max_iterations;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> sample;
    while (sample.size() < 3) {
      const std::size_t k = pick(rng);
      if (std::find(sample.begin(), sample.end(), k) == sample.end()) sample.push_back(k);
    }
    const auto model = solve_affine(correspondences, sample);
    if (!model) continue;
    auto inl = inliers_of(correspondences, *model, opts.inlier_threshold_px);
    if (inl.size() > best_inliers.size()) {
      best_inliers = std::move(inl);
      const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
      const double miss = 1.0 - w * w * w;
      if (miss <= 0.0) break;
      const double needed = std::log(1.0 - opts.confidence) / std::log(miss);
      max_iter = std::min(opts.max_iterations, static_cast<int>(std::ceil(needed)) + it + 1);
    }
  }
  if (best_inliers.size() < 3) return MotionTransform::identity();

  auto refit = solve_affine(correspondences, best_inliers);
  if (!refit) return MotionTransform::identity();
  // One re-selection pass with the refined model.
  auto inl = inliers_of(correspondences, *refit, opts.inlier_threshold_px);
  if (inl.size() >= best_inliers.size()) {
    if (auto again = solve_affine(correspondences, inl)) return *again;
  }
  return *refit;
}

BBox compensate(const BBox& b, const MotionTransform& t) {
  if (!t.is_invertible()) throw Error(ErrorCode::SingularTransform, "motion transform is singular");
  const Eigen::Vector3d c = t.m.inverse() * Eigen::Vector3d(b.cx(), b.cy(), 1.0);
  return BBox::from_center(c.x() / c.z(), c.y() / c.z(), b.w, b.h);
}

}  // namespace pothole
