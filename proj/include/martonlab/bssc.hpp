#pragma once

// Closed-form analysis of the AND map X = U AND V on the skew-symmetric
// channel with crossover 1/2, under weight alpha on I(U;Y).
// Couplings are 2x2 with entry (u, v) = p(U=u, V=v).

#include "martonlab/envelope.hpp"
#include "martonlab/probcore.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace martonlab {

struct FirstOrderResiduals {
  /// p11 p00 / 2 - p10 p01
  double res1;
  /// (1+4x)^alpha / ((1+x)^2 (1+2x)^(2(alpha-1))) - 1
  double res2;
  /// p01 / p00
  double x;
};

FirstOrderResiduals first_order_conditions(const Eigen::Matrix2d& p_uv, double alpha);

/// (1 + 4x) / (4x (1 + x)): the largest weight for which the AND-case
/// curvature condition can hold at ratio x.
double alpha_bound(double x);

/// (1+x)^2/(1+2x)^2 - ((1+4x)/(1+2x)^2)^alpha_bound(x), with g(0) = 0.
/// Values outside [0, 1/2] are still computed.
double g_function(double x);

struct HessianG {
  double g00;
  double g01;
  double g11;
  /// (p00 + p01) p10 / ((p00 + p10) p01 p00), valid when res1 = 0.
  double g00_simplified;

  /// G00 a^2 + 2 G01 a b + G11 b^2 with a = I01, b = I10.
  double form(double i01, double i10) const { return g00 * i01 * i01 + 2.0 * g01 * i01 * i10 + g11 * i10 * i10; }
};

/// Coefficients of the negative Hessian in the free directions (I01, I10);
/// I00 = -I01 - I10 and I11 = 0 from the fiber constraint.
/// Throws InputError unless |res1| <= 1e-9.
HessianG hessian_G(const Eigen::Matrix2d& p_uv, double alpha);

/// Coupling with p01 = x p00 and p11 = 2x p10, which satisfies the first
/// condition; `share` in (0,1) splits mass between the two rows.
Eigen::Matrix2d and_case_coupling(double x, double share);

/// Root in x of alpha log((1+4x)/(1+2x)^2) = 2 log((1+x)/(1+2x)), by
/// bisection on [1e-9, 10] with 200 halvings.
double condition2_root(double alpha);

struct AndCaseRow {
  double alpha;
  double root_x;
  double bound_at_root;
  /// alpha <= alpha_bound(root_x): both conditions hold at once.
  bool admissible;
};

struct AndCaseReport {
  std::vector<AndCaseRow> rows;
  bool any_admissible;
  /// g < 0 at every point of the step-1e-3 grid over [0.001, 0.499].
  bool g_negative_on_grid;
  double g_max_on_grid;
};

AndCaseReport and_case_scan(const std::vector<double>& alpha_grid);

/// (x, g(x)) for x = 0, step, 2 step, ... up to 1/2.
std::vector<std::pair<double, double>> g_scan(double step);
std::string g_scan_csv(const std::vector<std::pair<double, double>>& rows);

/// max alpha R1 + R2 over the inner bound of the crossover-1/2 channel, with
/// the receivers-swapped variant.
WeightedRateResult bssc_weighted_region(double alpha, const RateSearchOptions& opts = {});

}  // namespace martonlab
