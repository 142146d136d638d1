#include "pothole/gaussian_process.hpp"

#include "pothole/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

namespace pothole::bayesopt {

double matern52(double r, double length_scale) noexcept {
  const double s = std::sqrt(5.0) * r / length_scale;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

namespace {

Eigen::MatrixXd correlation(const Eigen::MatrixXd& x, double ell) {
  const auto n = x.rows();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      c(i, j) = c(j, i) = matern52((x.row(i) - x.row(j)).norm(), ell);
    }
  }
  return c;
}

}  // namespace

GaussianProcess GaussianProcess::fit(const std::vector<Eigen::VectorXd>& points,
                                     const std::vector<double>& values) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "GP needs at least one point");
  const auto dim = points.front().size();
  std::vector<std::pair<double, double>> bounds(static_cast<std::size_t>(dim));
  for (Eigen::Index d = 0; d < dim; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
      lo = std::min(lo, p(d));
      hi = std::max(hi, p(d));
    }
    if (!(hi > lo)) hi = lo + 1.0;
    bounds[static_cast<std::size_t>(d)] = {lo, hi};
  }
  return fit(points, values, bounds);
}

GaussianProcess GaussianProcess::fit(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values,
                                     const std::vector<std::pair<double, double>>& bounds) {
  if (points.empty() || points.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "GP needs matching, non-empty points and values");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto dim = points.front().size();
  if (static_cast<std::size_t>(dim) != bounds.size()) {
    throw Error(ErrorCode::InvalidArgument, "bounds dimension mismatch");
  }

  GaussianProcess gp;
  gp.lower_.resize(dim);
  gp.scale_.resize(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const auto [lo, hi] = bounds[static_cast<std::size_t>(d)];
    gp.lower_(d) = lo;
    gp.scale_(d) = hi > lo ? 1.0 / (hi - lo) : 1.0;
  }
  gp.train_.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) gp.train_.row(i) = gp.to_unit(points[static_cast<std::size_t>(i)]).transpose();

  if (n >= 2) {
    bool all_same = true;
    for (Eigen::Index i = 1; i < n && all_same; ++i) {
      all_same = (gp.train_.row(i) - gp.train_.row(0)).norm() == 0.0;
    }
    if (all_same) throw Error(ErrorCode::DegenerateKernel, "all GP training points are identical");
  }

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = values[static_cast<std::size_t>(i)];
  gp.y_mean_ = y.mean();
  const double sd = std::sqrt((y.array() - gp.y_mean_).square().mean());
  gp.y_scale_ = sd > 1e-12 ? sd : 1.0;
  const Eigen::VectorXd ys = (y.array() - gp.y_mean_) / gp.y_scale_;

  double best_ll = -std::numeric_limits<double>::infinity();
  constexpr int kGrid = 16;
  for (int g = 0; g < kGrid; ++g) {
    const double ell = 0.03 * std::pow(100.0, static_cast<double>(g) / (kGrid - 1));  // 0.03 .. 3
    Eigen::MatrixXd c = correlation(gp.train_, ell);
    c.diagonal().array() += kJitter;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd a = llt.solve(ys);
    const double sig2 = std::max(ys.dot(a) / static_cast<double>(n), 1e-6);
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double ll = -0.5 * (ys.dot(a) / sig2 + static_cast<double>(n) * std::log(sig2) + log_det +
                              static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
    if (ll > best_ll) {
      best_ll = ll;
      gp.chol_l_ = l;
      gp.alpha_ = a;
      gp.diag_ = {ell, sig2, ll};
    }
  }
  if (!std::isfinite(best_ll)) throw Error(ErrorCode::DegenerateKernel, "kernel matrix not positive definite");
  return gp;
}

Eigen::VectorXd GaussianProcess::to_unit(const Eigen::VectorXd& x) const {
  return ((x - lower_).array() * scale_.array()).matrix();
}

Eigen::VectorXd GaussianProcess::cross_correlation(const Eigen::VectorXd& unit_x) const {
  Eigen::VectorXd k(train_.rows());
  for (Eigen::Index i = 0; i < train_.rows(); ++i) {
    k(i) = matern52((train_.row(i).transpose() - unit_x).norm(), diag_.length_scale);
  }
  return k;
}

std::pair<double, double> GaussianProcess::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd k = cross_correlation(to_unit(x));
  const double mu = k.dot(alpha_);
  const Eigen::VectorXd v = chol_l_.triangularView<Eigen::Lower>().solve(k);
  const double var = std::max(diag_.signal_variance * (1.0 - v.squaredNorm()), 0.0);
  return {y_mean_ + y_scale_ * mu, var * y_scale_ * y_scale_};
}

double GaussianProcess::mean(const Eigen::VectorXd& x) const { return predict(x).first; }
double GaussianProcess::variance(const Eigen::VectorXd& x) const { return predict(x).second; }

double expected_improvement(double mu, double sigma, double incumbent) noexcept {
  if (!(sigma > 0.0)) return 0.0;
  const double z = (incumbent - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return std::max((incumbent - mu) * cdf + sigma * pdf, 0.0);
}

double expected_improvement(const GaussianProcess& gp, double incumbent, const Eigen::VectorXd& x) {
  const auto [mu, var] = gp.predict(x);
  return expected_improvement(mu, std::sqrt(var), incumbent);
}

}  // namespace pothole::bayesopt
