#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace martonlab {

struct LpSolution {
  double value;
  /// (column index, weight) for each basic column with positive weight.
  std::vector<std::pair<std::size_t, double>> support;
  std::size_t pivots;
};

/// Revised primal simplex for  max gains . w  s.t.  columns * w = rhs, w >= 0.
/// `initial_basis` must name m columns forming a feasible basis. Dantzig
/// pricing with smallest-index tie-breaking; falls back to Bland's rule after a
/// run of degenerate pivots so it cannot cycle.
LpSolution solve_column_lp(const Eigen::MatrixXd& columns, const Eigen::VectorXd& gains, const Eigen::VectorXd& rhs,
                           std::vector<std::size_t> initial_basis);

}  // namespace martonlab
