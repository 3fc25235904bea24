#include "martonlab/bssc.hpp"

#include "martonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <sstream>

namespace martonlab {
namespace {

void require_positive(const Eigen::Matrix2d& p) {
  if (!(p.minCoeff() > 0.0)) throw InputError("AND-case formulas need a strictly positive p(u,v)");
}

// alpha log((1+4x)/(1+2x)^2) - 2 log((1+x)/(1+2x))
double condition2_log_form(double x, double alpha) {
  const double lhs = alpha * (std::log1p(4.0 * x) - 2.0 * std::log1p(2.0 * x));
  const double rhs = 2.0 * (std::log1p(x) - std::log1p(2.0 * x));
  return lhs - rhs;
}

}  // namespace

FirstOrderResiduals first_order_conditions(const Eigen::Matrix2d& p, double alpha) {
  require_positive(p);
  const double x = p(0, 1) / p(0, 0);
  const double log_ratio =
      alpha * std::log1p(4.0 * x) - 2.0 * std::log1p(x) - 2.0 * (alpha - 1.0) * std::log1p(2.0 * x);
  return {0.5 * p(1, 1) * p(0, 0) - p(1, 0) * p(0, 1), std::expm1(log_ratio), x};
}

double alpha_bound(double x) {
  if (!(x > 0.0)) throw InputError("alpha_bound needs x > 0");
  return (1.0 + 4.0 * x) / (4.0 * x * (1.0 + x));
}

double g_function(double x) {
  if (x == 0.0) return 0.0;
  if (!(x > 0.0)) throw InputError("g is defined for x >= 0");
  const double first = std::pow((1.0 + x) / (1.0 + 2.0 * x), 2.0);
  const double log_base = std::log1p(4.0 * x) - 2.0 * std::log1p(2.0 * x);
  return first - std::exp(alpha_bound(x) * log_base);
}

HessianG hessian_G(const Eigen::Matrix2d& p, double alpha) {
  require_positive(p);
  const double res1 = 0.5 * p(1, 1) * p(0, 0) - p(1, 0) * p(0, 1);
  if (std::abs(res1) > 1e-9) throw InputError("hessian_G needs p11 p00 = 2 p10 p01");
  const double p00 = p(0, 0), p01 = p(0, 1), p10 = p(1, 0), p11 = p(1, 1);
  HessianG g;
  g.g00 = 1.0 / p01 + 1.0 / p00 - 1.0 / (p00 + p10) - 2.0 / (2.0 * p01 + p11);
  g.g01 = 1.0 / p00;
  g.g11 = 1.0 / p10 + 1.0 / p00 - 1.0 / (p00 + p01) + (alpha - 1.0) / (p10 + p11) - alpha / (2.0 * p10) -
          alpha / (2.0 * (p10 + 2.0 * p11));
  g.g00_simplified = (p00 + p01) * p10 / ((p00 + p10) * p01 * p00);
  return g;
}

Eigen::Matrix2d and_case_coupling(double x, double share) {
  if (!(x > 0.0) || !(share > 0.0 && share < 1.0)) throw InputError("and_case_coupling needs x > 0, share in (0,1)");
  // Row 0 holds `share` of the mass, row 1 the rest.
  Eigen::Matrix2d p;
  p(0, 0) = share / (1.0 + x);
  p(0, 1) = share * x / (1.0 + x);
  p(1, 0) = (1.0 - share) / (1.0 + 2.0 * x);
  p(1, 1) = (1.0 - share) * 2.0 * x / (1.0 + 2.0 * x);
  return p;
}

double condition2_root(double alpha) {
  double lo = 1e-9, hi = 10.0;
  if (condition2_log_form(lo, alpha) <= 0.0 || condition2_log_form(hi, alpha) >= 0.0)
    throw InfeasibleError("condition-2 root is not bracketed by [1e-9, 10]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (condition2_log_form(mid, alpha) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

AndCaseReport and_case_scan(const std::vector<double>& alpha_grid) {
  AndCaseReport report{{}, false, true, -std::numeric_limits<double>::infinity()};
  for (double alpha : alpha_grid) {
    if (!(alpha >= 1.0)) throw InputError("and_case_scan: alpha must be >= 1");
    const double root = condition2_root(alpha);
    const double bound = alpha_bound(root);
    const bool admissible = alpha <= bound;
    report.rows.push_back({alpha, root, bound, admissible});
    report.any_admissible = report.any_admissible || admissible;
  }
  for (int k = 1; k <= 499; ++k) {
    const double g = g_function(k * 1e-3);
    report.g_max_on_grid = std::max(report.g_max_on_grid, g);
    if (!(g < 0.0)) report.g_negative_on_grid = false;
  }
  return report;
}

std::vector<std::pair<double, double>> g_scan(double step) {
  if (!(step > 0.0) || step > 0.5) throw InputError("g_scan: step must lie in (0, 1/2]");
  std::vector<std::pair<double, double>> rows;
  const auto count = static_cast<long>(std::floor(0.5 / step + 1e-9));
  for (long k = 0; k <= count; ++k) {
    const double x = static_cast<double>(k) * step;
    rows.emplace_back(x, g_function(x));
  }
  return rows;
}

std::string g_scan_csv(const std::vector<std::pair<double, double>>& rows) {
  std::ostringstream out;
  out << "x,g\n" << std::setprecision(9);
  for (const auto& [x, g] : rows) out << x << ',' << g << '\n';
  return out.str();
}

WeightedRateResult bssc_weighted_region(double alpha, const RateSearchOptions& opts) {
  return weighted_rate_support(bssc_channel(0.5), alpha, opts);
}

}  // namespace martonlab
