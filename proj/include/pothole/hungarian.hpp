#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace pothole {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

// Minimum-cost one-to-one assignment of min(rows, cols) pairs (Kuhn-Munkres with
// shortest augmenting paths, O(n^2 m)). Costs must be finite.
Assignment hungarian_solve(const Eigen::MatrixXd& cost);

}  // namespace pothole
