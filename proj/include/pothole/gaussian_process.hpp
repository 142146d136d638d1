#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace pothole::bayesopt {

// Zero-mean GP with an isotropic Matern-5/2 kernel on unit-box-scaled inputs.
// Targets are standardized internally; the length-scale is chosen by maximum
// likelihood over a fixed grid with the signal variance profiled out.
class GaussianProcess {
 public:
  struct Diagnostics {
    double length_scale = 0.0;
    double signal_variance = 0.0;
    double log_likelihood = 0.0;
  };

  // `bounds` gives (lower, upper) per dimension for input scaling. Throws
  // DegenerateKernel when two or more points are all identical.
  static GaussianProcess fit(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values,
                             const std::vector<std::pair<double, double>>& bounds);

  // Scales by the data's own per-dimension range.
  static GaussianProcess fit(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values);

  double mean(const Eigen::VectorXd& x) const;
  double variance(const Eigen::VectorXd& x) const;
  std::pair<double, double> predict(const Eigen::VectorXd& x) const;  // mean, variance

  const Diagnostics& diagnostics() const noexcept { return diag_; }

  static constexpr double kJitter = 1e-6;

 private:
  GaussianProcess() = default;
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd cross_correlation(const Eigen::VectorXd& unit_x) const;

  Eigen::VectorXd lower_, scale_;
  Eigen::MatrixXd train_;      // n x dim, unit scaled
  Eigen::MatrixXd chol_l_;     // lower Cholesky factor of C + jitter I
  Eigen::VectorXd alpha_;      // (C + jitter I)^-1 y_std
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Diagnostics diag_;
};

double matern52(double r, double length_scale) noexcept;

// Expected improvement for minimization: (inc - mu) Phi(z) + sigma phi(z),
// z = (inc - mu) / sigma; 0 when sigma is 0.
double expected_improvement(double mu, double sigma, double incumbent) noexcept;
double expected_improvement(const GaussianProcess& gp, double incumbent, const Eigen::VectorXd& x);

}  // namespace pothole::bayesopt
