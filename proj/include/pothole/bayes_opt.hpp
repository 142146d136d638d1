#pragma once

#include "pothole/gaussian_process.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace pothole::bayesopt {

struct SearchSpec {
  std::vector<std::pair<double, double>> bounds{{0.0, 2.0}, {0.0, 2.0}};
  int n_init = 5;
  int n_iter = 30;
  std::uint64_t seed = 0;
  int n_candidates = 512;
  int n_refine = 8;

  void validate() const;
};

struct Evaluation {
  Eigen::VectorXd point;
  double value = 0.0;
  bool from_acquisition = false;
};

struct OptResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  std::vector<Evaluation> history;
  GaussianProcess::Diagnostics final_model;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Seeded quasi-random start (shifted Halton), then n_iter rounds of GP fit and
// expected-improvement maximization over random candidates refined by a bounded
// pattern search. Throws ObjectiveNonFinite naming the offending point.
OptResult optimize(const Objective& objective, const SearchSpec& spec);

}  // namespace pothole::bayesopt
