#include "martonlab/simplex_lp.hpp"

#include "martonlab/errors.hpp"

#include <cmath>
#include <limits>

namespace martonlab {

LpSolution solve_column_lp(const Eigen::MatrixXd& columns, const Eigen::VectorXd& gains, const Eigen::VectorXd& rhs,
                           std::vector<std::size_t> basis) {
  const auto m = columns.rows();
  const auto n = columns.cols();
  if (gains.size() != n || rhs.size() != m || basis.size() != static_cast<std::size_t>(m))
    throw InputError("solve_column_lp: inconsistent dimensions");

  constexpr double kPriceTol = 1e-12;
  constexpr double kPivotTol = 1e-12;
  constexpr int kDegenerateRunBeforeBland = 50;
  constexpr std::size_t kMaxPivots = 100000;

  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  for (auto j : basis) {
    if (j >= static_cast<std::size_t>(n)) throw InputError("solve_column_lp: basis index out of range");
    in_basis[j] = 1;
  }

  Eigen::MatrixXd B(m, m);
  Eigen::VectorXd g_B(m);
  Eigen::VectorXd x_B;
  int degenerate_run = 0;
  std::size_t pivots = 0;

  while (true) {
    for (Eigen::Index i = 0; i < m; ++i) {
      B.col(i) = columns.col(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)]));
      g_B(i) = gains(static_cast<Eigen::Index>(basis[static_cast<std::size_t>(i)]));
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    x_B = lu.solve(rhs);
    if (x_B.minCoeff() < -1e-9) throw InfeasibleError("solve_column_lp: basis is not feasible");
    const Eigen::VectorXd y = lu.transpose().solve(g_B);

    const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
    Eigen::Index entering = -1;
    double best_cost = kPriceTol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      const double reduced = gains(j) - y.dot(columns.col(j));
      if (reduced > best_cost) {
        entering = j;
        best_cost = reduced;
        if (bland) break;
      }
    }
    if (entering < 0) break;

    const Eigen::VectorXd d = lu.solve(columns.col(entering));
    Eigen::Index leaving = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (d(i) <= kPivotTol) continue;
      const double r = std::max(x_B(i), 0.0) / d(i);
      if (r < ratio - 1e-15 ||
          (std::abs(r - ratio) <= 1e-15 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
        ratio = r;
        leaving = i;
      }
    }
    if (leaving < 0) throw InfeasibleError("solve_column_lp: unbounded");
    degenerate_run = ratio <= 1e-15 ? degenerate_run + 1 : 0;
    in_basis[basis[static_cast<std::size_t>(leaving)]] = 0;
    basis[static_cast<std::size_t>(leaving)] = static_cast<std::size_t>(entering);
    in_basis[static_cast<std::size_t>(entering)] = 1;
    if (++pivots > kMaxPivots) throw InfeasibleError("solve_column_lp: pivot limit reached");
  }

  LpSolution out{g_B.dot(x_B), {}, pivots};
  for (Eigen::Index i = 0; i < m; ++i)
    if (x_B(i) > 1e-14) out.support.emplace_back(basis[static_cast<std::size_t>(i)], x_B(i));
  return out;
}

}  // namespace martonlab
