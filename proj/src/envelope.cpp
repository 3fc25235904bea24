#include "martonlab/envelope.hpp"

#include "martonlab/errors.hpp"
#include "martonlab/parallel.hpp"
#include "martonlab/simplex_lp.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace martonlab {
namespace {

struct Point2 {
  double x;
  double y;
};

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Upper hull of points sorted by x.
std::vector<Point2> upper_hull(const std::vector<Point2>& pts) {
  std::vector<Point2> hull;
  for (const auto& pt : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), pt) >= 0.0) hull.pop_back();
    hull.push_back(pt);
  }
  return hull;
}

// Index k of the hull segment [k, k+1] containing x (clamped).
std::size_t hull_segment(const std::vector<Point2>& hull, double x) {
  auto it = std::upper_bound(hull.begin(), hull.end(), x, [](double v, const Point2& p) { return v < p.x; });
  std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - hull.begin()) - 1));
  return std::min(k, hull.size() >= 2 ? hull.size() - 2 : 0);
}

double hull_value(const std::vector<Point2>& hull, double x) {
  if (hull.size() == 1) return hull[0].y;
  const std::size_t k = hull_segment(hull, x);
  const auto& a = hull[k];
  const auto& b = hull[k + 1];
  const double t = (x - a.x) / (b.x - a.x);
  return a.y + t * (b.y - a.y);
}

std::vector<double> evaluate_all(const SimplexFunction& g, const std::vector<SimplexVector>& points) {
  std::vector<double> values(points.size());
  parallel_for(points.size(), [&](std::size_t i) { values[i] = g(points[i]); });
  return values;
}

SimplexVector binary_point(double q) { return SimplexVector::binary(std::clamp(q, 0.0, 1.0)); }

EnvelopeResult envelope_binary(const SimplexFunction& g, const SimplexVector& p, const EnvelopeOptions& opts) {
  const std::size_t n = std::max<std::size_t>(opts.grid_points_1d, 2);
  const double target = p[1];
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  xs.push_back(target);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<SimplexVector> points;
  points.reserve(xs.size());
  for (double x : xs) points.push_back(binary_point(x));
  const auto values = evaluate_all(g, points);
  const double base = values[static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), target) - xs.begin())];

  std::vector<Point2> pts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = {xs[i], values[i]};
  const auto hull = upper_hull(pts);

  EnvelopeResult out{base, {{1.0, p}}, base};
  if (hull.size() == 1) return out;
  const std::size_t k = hull_segment(hull, target);
  double lo = hull[k].x, hi = hull[k + 1].x;
  double g_lo = hull[k].y, g_hi = hull[k + 1].y;
  if (target <= lo || target >= hi) {
    const bool at_lo = std::abs(target - lo) <= std::abs(target - hi);
    out.value = std::max(base, at_lo ? g_lo : g_hi);
    return out;
  }

  auto chord = [&](double a, double ga, double b, double gb) { return ((b - target) * ga + (target - a) * gb) / (b - a); };
  double best = chord(lo, g_lo, hi, g_hi);

  if (opts.polish) {
    double step = 1.0 / static_cast<double>(n - 1);
    int budget = 400;
    while (step > 1e-12 && budget > 0) {
      bool moved = false;
      const double cand[4][2] = {{lo - step, hi}, {lo + step, hi}, {lo, hi - step}, {lo, hi + step}};
      for (const auto& c : cand) {
        const double a = std::max(c[0], 0.0), b = std::min(c[1], 1.0);
        if (!(a < target && target < b)) continue;
        const double ga = a == lo ? g_lo : g(binary_point(a));
        const double gb = b == hi ? g_hi : g(binary_point(b));
        --budget;
        const double v = chord(a, ga, b, gb);
        if (v > best + 1e-15) {
          best = v;
          lo = a;
          hi = b;
          g_lo = ga;
          g_hi = gb;
          moved = true;
          break;
        }
      }
      if (!moved) step *= 0.5;
    }
  }

  if (best <= base) return out;
  const double w_lo = (hi - target) / (hi - lo);
  out.value = best;
  out.atoms = {{w_lo, binary_point(lo)}, {1.0 - w_lo, binary_point(hi)}};
  return out;
}

// Weights w with sum_i w_i q_i = p for three atoms; false if the atoms are degenerate.
bool mixture_weights(const std::array<Eigen::Vector3d, 3>& q, const Eigen::Vector3d& p, Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i) m.col(i) = q[static_cast<std::size_t>(i)];
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) return false;
  w = lu.solve(p);
  return (m * w - p).cwiseAbs().maxCoeff() < 1e-12;
}

EnvelopeResult envelope_ternary(const SimplexFunction& g, const SimplexVector& p, const EnvelopeOptions& opts) {
  const std::size_t n = std::max<std::size_t>(opts.simplex_divisions, 1);
  std::vector<SimplexVector> points;
  std::vector<std::size_t> vertices(3);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; i + j <= n; ++j) {
      const std::size_t k = n - i - j;
      if (i == n) vertices[0] = points.size();
      if (j == n) vertices[1] = points.size();
      if (k == n) vertices[2] = points.size();
      const double d = static_cast<double>(n);
      points.push_back(SimplexVector({static_cast<double>(i) / d, static_cast<double>(j) / d, static_cast<double>(k) / d}));
    }
  }
  points.push_back(p);
  const auto values = evaluate_all(g, points);
  const double base = values.back();

  Eigen::MatrixXd columns(3, static_cast<Eigen::Index>(points.size()));
  Eigen::VectorXd gains(static_cast<Eigen::Index>(points.size()));
  for (std::size_t c = 0; c < points.size(); ++c) {
    columns.col(static_cast<Eigen::Index>(c)) = points[c].values();
    gains(static_cast<Eigen::Index>(c)) = values[c];
  }
  const auto lp = solve_column_lp(columns, gains, p.values(), vertices);

  EnvelopeResult out{std::max(lp.value, base), {}, base};
  for (const auto& [idx, w] : lp.support) out.atoms.push_back({w, points[idx]});
  if (lp.value <= base) out.atoms = {{1.0, p}};

  if (opts.polish && out.atoms.size() == 3) {
    std::array<Eigen::Vector3d, 3> q;
    std::array<double, 3> gq;
    for (std::size_t i = 0; i < 3; ++i) {
      q[i] = out.atoms[i].point.values();
      gq[i] = g(out.atoms[i].point);
    }
    Eigen::Vector3d w;
    if (mixture_weights(q, p.values(), w)) {
      double best = w(0) * gq[0] + w(1) * gq[1] + w(2) * gq[2];
      double step = 1.0 / static_cast<double>(n);
      int budget = 600;
      while (step > 1e-9 && budget > 0) {
        bool moved = false;
        for (std::size_t atom = 0; atom < 3 && !moved; ++atom) {
          for (int a = 0; a < 3 && !moved; ++a) {
            for (int b = 0; b < 3 && !moved; ++b) {
              if (a == b) continue;
              auto trial = q;
              trial[atom](a) += step;
              trial[atom](b) -= step;
              if (trial[atom].minCoeff() < 0.0) continue;
              Eigen::Vector3d tw;
              if (!mixture_weights(trial, p.values(), tw) || tw.minCoeff() < 0.0) continue;
              const double g_new = g(SimplexVector(Eigen::VectorXd(trial[atom])));
              --budget;
              double v = 0.0;
              for (std::size_t i = 0; i < 3; ++i) v += tw(static_cast<Eigen::Index>(i)) * (i == atom ? g_new : gq[i]);
              if (v > best + 1e-15) {
                best = v;
                q = trial;
                gq[atom] = g_new;
                w = tw;
                moved = true;
              }
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      if (best > out.value) {
        out.value = best;
        out.atoms.clear();
        for (std::size_t i = 0; i < 3; ++i)
          if (w(static_cast<Eigen::Index>(i)) > 0.0)
            out.atoms.push_back({w(static_cast<Eigen::Index>(i)), SimplexVector(Eigen::VectorXd(q[i]))});
      }
    }
  }
  return out;
}

// -- rate formulas ---

double leg_entropy(const StochasticMatrix& chan, double q) {
  const Eigen::RowVectorXd out = (1.0 - q) * chan.matrix().row(0) + q * chan.matrix().row(1);
  double h = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out(i) > kLogFloor) h -= out(i) * std::log2(out(i));
  return h;
}

RateResult rate_search(const BroadcastChannel& ch, double alpha, const RateSearchOptions& opts) {
  if (ch.x_size() != 2) throw SizeError("binary-input rate formulas need |X| = 2");
  const std::size_t n = std::max<std::size_t>(opts.grid_points, 2);
  const double step = 1.0 / static_cast<double>(n - 1);
  std::vector<double> values(n * n * n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        values[(i * n + j) * n + k] = weighted_rate_objective(ch, alpha, static_cast<double>(i) * step,
                                                              static_cast<double>(j) * step, static_cast<double>(k) * step);
  });
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t starts = std::min(opts.polish_starts, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });

  RateResult best{-std::numeric_limits<double>::infinity(), 0, 0, 0, step};
  for (std::size_t s = 0; s < std::max<std::size_t>(starts, 1); ++s) {
    const std::size_t idx = order[s];
    std::array<double, 3> x{static_cast<double>(idx / (n * n)) * step, static_cast<double>((idx / n) % n) * step,
                            static_cast<double>(idx % n) * step};
    double v = values[idx];
    double h = step;
    int budget = 20000;
    while (h > 1e-11 && budget > 0) {
      // All 26 compass moves: the min{} kink often only yields along diagonals.
      bool moved = false;
      for (int dir = 0; dir < 27 && !moved; ++dir) {
        if (dir == 13) continue;
        const std::array<int, 3> sgn{dir / 9 - 1, (dir / 3) % 3 - 1, dir % 3 - 1};
        auto trial = x;
        for (std::size_t d = 0; d < 3; ++d) trial[d] = std::clamp(trial[d] + sgn[d] * h, 0.0, 1.0);
        if (trial == x) continue;
        const double tv = weighted_rate_objective(ch, alpha, trial[0], trial[1], trial[2]);
        --budget;
        if (tv > v + 1e-15) {
          x = trial;
          v = tv;
          moved = true;
        }
      }
      if (!moved) h *= 0.5;
    }
    if (v > best.value) best = {v, x[0], x[1], x[2], step};
  }
  return best;
}

}  // namespace

EnvelopeResult concave_envelope_eval(const SimplexFunction& g, const SimplexVector& p, const EnvelopeOptions& opts) {
  switch (p.dim()) {
    case 1: {
      const double v = g(p);
      return {v, {{1.0, p}}, v};
    }
    case 2:
      return envelope_binary(g, p, opts);
    case 3:
      return envelope_ternary(g, p, opts);
    default:
      throw SizeError("concave envelopes are supported for |X| <= 3");
  }
}

std::vector<EnvelopeTraceRow> envelope_trace_binary(const SimplexFunction& g, std::size_t points) {
  points = std::max<std::size_t>(points, 2);
  std::vector<SimplexVector> grid;
  for (std::size_t i = 0; i < points; ++i)
    grid.push_back(binary_point(static_cast<double>(i) / static_cast<double>(points - 1)));
  const auto values = evaluate_all(g, grid);
  std::vector<Point2> pts(points);
  for (std::size_t i = 0; i < points; ++i) pts[i] = {grid[i][1], values[i]};
  const auto hull = upper_hull(pts);
  std::vector<EnvelopeTraceRow> rows(points);
  for (std::size_t i = 0; i < points; ++i) rows[i] = {pts[i].x, pts[i].y, hull_value(hull, pts[i].x)};
  return rows;
}

std::string envelope_trace_csv(const std::vector<EnvelopeTraceRow>& rows) {
  std::ostringstream out;
  out << "p,g,envelope\n" << std::setprecision(9);
  for (const auto& r : rows) out << r.p << ',' << r.g << ',' << r.envelope << '\n';
  return out.str();
}

double weighted_rate_objective(const BroadcastChannel& ch, double alpha, double t, double a, double b) {
  const auto& qy = ch.y_chan();
  const auto& qz = ch.z_chan();
  const double hy_x0 = leg_entropy(qy, 0.0), hy_x1 = leg_entropy(qy, 1.0);
  const double hz_x0 = leg_entropy(qz, 0.0), hz_x1 = leg_entropy(qz, 1.0);
  const double q_mix = t * a + (1.0 - t) * b;

  const double hy_w0 = leg_entropy(qy, a), hy_w1 = leg_entropy(qy, b);
  const double hz_w0 = leg_entropy(qz, a), hz_w1 = leg_entropy(qz, b);
  const double i_wy = std::max(0.0, leg_entropy(qy, q_mix) - t * hy_w0 - (1.0 - t) * hy_w1);
  const double i_wz = std::max(0.0, leg_entropy(qz, q_mix) - t * hz_w0 - (1.0 - t) * hz_w1);
  const double i_xy_w0 = std::max(0.0, hy_w0 - (1.0 - a) * hy_x0 - a * hy_x1);
  const double i_xz_w1 = std::max(0.0, hz_w1 - (1.0 - b) * hz_x0 - b * hz_x1);
  return std::min(i_wy, i_wz) + (alpha - 1.0) * i_wy + alpha * t * i_xy_w0 + (1.0 - t) * i_xz_w1;
}

RateResult marton_sum_rate_binary(const BroadcastChannel& ch, const RateSearchOptions& opts) {
  return weighted_rate_support(ch, 1.0, opts).direct;
}

WeightedRateResult weighted_rate_support(const BroadcastChannel& ch, double alpha, const RateSearchOptions& opts) {
  if (!(alpha >= 1.0)) throw InputError("weighted_rate_support needs alpha >= 1");
  return {rate_search(ch, alpha, opts), rate_search(ch.swapped(), alpha, opts)};
}

FactorRhsResult factor_rhs(const BroadcastChannel& ch, const SimplexVector& p_x, double lambda, double alpha,
                           const TFunction& tmax_fn, const EnvelopeOptions& opts) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
  if (!(alpha >= 1.0)) throw InputError("alpha must be >= 1");
  if (p_x.dim() != ch.x_size()) throw InputError("input law and channel disagree on |X|");
  const double lambda_bar = 1.0 - lambda;
  std::atomic<bool> lower{false};
  SimplexFunction functional = [&](const SimplexVector& q) {
    const TValue t = tmax_fn(q);
    if (t.is_lower_bound) lower = true;
    return -(alpha - lambda_bar) * entropy(push_forward(q, ch.y_chan())) -
           lambda_bar * entropy(push_forward(q, ch.z_chan())) + t.value;
  };
  auto env = concave_envelope_eval(functional, p_x, opts);
  return {std::move(env), lower.load()};
}

TFunction max_information_function(const BroadcastChannel& ch, double alpha) {
  const bool exact = ch.x_size() == 2 && alpha == 1.0;
  return [ch, alpha, exact](const SimplexVector& q) {
    return TValue{std::max(alpha * channel_mutual_information(q, ch.y_chan()), channel_mutual_information(q, ch.z_chan())),
                  !exact};
  };
}

}  // namespace martonlab
