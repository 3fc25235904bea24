#include "martonlab/tmax.hpp"

#include "martonlab/errors.hpp"
#include "martonlab/parallel.hpp"
#include "martonlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace martonlab {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kAscentFloor = 1e-12;

double neg_plogp(double a) { return a > kLogFloor ? -a * std::log2(a) : 0.0; }

double entropy_of(const std::vector<double>& v) {
  double h = 0.0;
  for (double a : v) h += neg_plogp(a);
  return h;
}

double floored_log(double a) { return std::log(std::max(a, kAscentFloor)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Value and gradient of the objective on flat row-major p(u,v) buffers, with
// scratch space reused across calls.
class Kernel {
 public:
  Kernel(const DeterministicMap& f, const BroadcastChannel& ch, double alpha)
      : nu_(f.u_size()), nv_(f.v_size()), ny_(ch.y_size()), nz_(ch.z_size()), f_(f.table()), alpha_(alpha),
        qy_(ch.y_chan().matrix()), qz_(ch.z_chan().matrix()),
        pu_(nu_), pv_(nv_), py_(ny_), pz_(nz_), puy_(nu_ * ny_), pvz_(nv_ * nz_) {
    if (ch.x_size() != f.x_size()) throw InputError("map and channel disagree on |X|");
  }

  double value(const std::vector<double>& p) {
    accumulate(p);
    return (alpha_ - 1.0) * entropy_of(pu_) + alpha_ * entropy_of(py_) - alpha_ * entropy_of(puy_) +
           entropy_of(pz_) - entropy_of(pvz_) + entropy_of(p);
  }

  // Assumes accumulate() ran on the same p. Logs floored at 1e-12.
  void gradient(const std::vector<double>& p, std::vector<double>& g) const {
    g.assign(p.size(), 0.0);
    for (std::size_t u = 0; u < nu_; ++u) {
      for (std::size_t v = 0; v < nv_; ++v) {
        const auto x = static_cast<Eigen::Index>(f_[u * nv_ + v]);
        double s = -(alpha_ - 1.0) * floored_log(pu_[u]) - floored_log(p[u * nv_ + v]) - alpha_;
        for (std::size_t y = 0; y < ny_; ++y) {
          const double q = qy_(x, static_cast<Eigen::Index>(y));
          if (q > 0.0) s += alpha_ * q * (floored_log(puy_[u * ny_ + y]) - floored_log(py_[y]));
        }
        for (std::size_t z = 0; z < nz_; ++z) {
          const double q = qz_(x, static_cast<Eigen::Index>(z));
          if (q > 0.0) s += q * (floored_log(pvz_[v * nz_ + z]) - floored_log(pz_[z]));
        }
        g[u * nv_ + v] = s / kLn2;
      }
    }
  }

  void accumulate(const std::vector<double>& p) {
    std::fill(pu_.begin(), pu_.end(), 0.0);
    std::fill(pv_.begin(), pv_.end(), 0.0);
    std::fill(puy_.begin(), puy_.end(), 0.0);
    std::fill(pvz_.begin(), pvz_.end(), 0.0);
    for (std::size_t u = 0; u < nu_; ++u) {
      for (std::size_t v = 0; v < nv_; ++v) {
        const double m = p[u * nv_ + v];
        if (m == 0.0) continue;
        const auto x = static_cast<Eigen::Index>(f_[u * nv_ + v]);
        pu_[u] += m;
        pv_[v] += m;
        for (std::size_t y = 0; y < ny_; ++y) puy_[u * ny_ + y] += m * qy_(x, static_cast<Eigen::Index>(y));
        for (std::size_t z = 0; z < nz_; ++z) pvz_[v * nz_ + z] += m * qz_(x, static_cast<Eigen::Index>(z));
      }
    }
    std::fill(py_.begin(), py_.end(), 0.0);
    std::fill(pz_.begin(), pz_.end(), 0.0);
    for (std::size_t u = 0; u < nu_; ++u)
      for (std::size_t y = 0; y < ny_; ++y) py_[y] += puy_[u * ny_ + y];
    for (std::size_t v = 0; v < nv_; ++v)
      for (std::size_t z = 0; z < nz_; ++z) pz_[z] += pvz_[v * nz_ + z];
  }

 private:
  std::size_t nu_, nv_, ny_, nz_;
  std::vector<int> f_;
  double alpha_;
  Eigen::MatrixXd qy_, qz_;
  std::vector<double> pu_, pv_, py_, pz_, puy_, pvz_;
};

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index u = 0; u < m.rows(); ++u)
    for (Eigen::Index v = 0; v < m.cols(); ++v) out[static_cast<std::size_t>(u * m.cols() + v)] = m(u, v);
  return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& p, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < cols; ++v) m(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = p[u * cols + v];
  return m;
}

// Euclidean projection of the cells listed in `cells` onto {y >= 0, sum y = mass}.
void project_fiber(std::vector<double>& p, const std::vector<std::size_t>& cells, double mass,
                   std::vector<double>& scratch) {
  if (cells.empty()) return;
  if (mass <= 0.0) {
    for (auto c : cells) p[c] = 0.0;
    return;
  }
  if (cells.size() == 1) {
    p[cells[0]] = mass;
    return;
  }
  scratch.clear();
  for (auto c : cells) scratch.push_back(p[c]);
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < scratch.size(); ++k) {
    cumulative += scratch[k];
    const double t = (cumulative - mass) / static_cast<double>(k + 1);
    if (scratch[k] - t > 0.0) theta = t;
  }
  for (auto c : cells) p[c] = std::max(p[c] - theta, 0.0);
}

struct FiberLayout {
  std::vector<std::vector<std::size_t>> cells;
  std::vector<double> mass;
  bool has_freedom = false;
};

FiberLayout layout_for(const DeterministicMap& f, const SimplexVector& p_x) {
  if (p_x.dim() != f.x_size()) throw InputError("input law and map disagree on |X|");
  FiberLayout out{f.fibers(), p_x.to_vector(), false};
  for (std::size_t x = 0; x < out.cells.size(); ++x) {
    if (out.mass[x] > 0.0 && out.cells[x].empty())
      throw InfeasibleError("map " + f.id() + " has an empty fiber over a symbol with positive probability");
    if (out.mass[x] > 0.0 && out.cells[x].size() > 1) out.has_freedom = true;
  }
  return out;
}

std::vector<double> uniform_start(const FiberLayout& layout, std::size_t cells) {
  std::vector<double> p(cells, 0.0);
  for (std::size_t x = 0; x < layout.cells.size(); ++x)
    for (auto c : layout.cells[x]) p[c] = layout.mass[x] / static_cast<double>(layout.cells[x].size());
  return p;
}

std::vector<double> random_start(const FiberLayout& layout, std::size_t cells, Rng& rng) {
  std::vector<double> p(cells, 0.0);
  for (std::size_t x = 0; x < layout.cells.size(); ++x) {
    if (layout.cells[x].empty()) continue;
    const auto w = rng.dirichlet(layout.cells[x].size());
    for (std::size_t k = 0; k < w.size(); ++k) p[layout.cells[x][k]] = layout.mass[x] * w[k];
  }
  return p;
}

// Rescales a user-supplied start onto the fibers; fibers it leaves empty get
// the uniform split.
std::vector<double> feasible_start(const FiberLayout& layout, const Eigen::MatrixXd& start, std::size_t cells) {
  std::vector<double> p = flatten(start);
  if (p.size() != cells) throw InputError("ascent start has the wrong shape");
  for (std::size_t x = 0; x < layout.cells.size(); ++x) {
    double total = 0.0;
    for (auto c : layout.cells[x]) total += std::max(p[c], 0.0);
    for (auto c : layout.cells[x])
      p[c] = total > 0.0 ? layout.mass[x] * std::max(p[c], 0.0) / total
                         : layout.mass[x] / static_cast<double>(layout.cells[x].size());
  }
  return p;
}

double climb(Kernel& kernel, const FiberLayout& layout, std::vector<double>& p, std::size_t iterations,
             double initial_step) {
  std::vector<double> g, candidate, scratch;
  double value = kernel.value(p);
  if (!layout.has_freedom) return value;
  for (std::size_t k = 0; k < iterations; ++k) {
    kernel.gradient(p, g);
    double step = initial_step / std::sqrt(static_cast<double>(k + 1));
    bool accepted = false;
    double next_value = value;
    for (int tries = 0; tries < 40; ++tries) {
      candidate = p;
      for (std::size_t i = 0; i < p.size(); ++i) candidate[i] += step * g[i];
      for (std::size_t x = 0; x < layout.cells.size(); ++x)
        project_fiber(candidate, layout.cells[x], layout.mass[x], scratch);
      next_value = kernel.value(candidate);
      if (next_value >= value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = next_value - value;
    p.swap(candidate);
    value = next_value;
    if (gain <= 1e-15) break;
  }
  return value;
}

}  // namespace

double objective_J_raw(const Eigen::MatrixXd& p_uv, const DeterministicMap& f, const BroadcastChannel& ch,
                       double alpha) {
  Kernel kernel(f, ch, alpha);
  return kernel.value(flatten(p_uv));
}

double objective_J(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x, double alpha) {
  c.require_marginal(p_x);
  return objective_J_raw(c.p_uv(), c.f(), ch, alpha);
}

Eigen::MatrixXd gradient_J_raw(const Eigen::MatrixXd& p_uv, const DeterministicMap& f, const BroadcastChannel& ch,
                               double alpha) {
  Kernel kernel(f, ch, alpha);
  const auto p = flatten(p_uv);
  kernel.accumulate(p);
  std::vector<double> g;
  kernel.gradient(p, g);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] > 0.0)) g[i] = std::numeric_limits<double>::quiet_NaN();
  return unflatten(g, f.u_size(), f.v_size());
}

Eigen::MatrixXd gradient_J(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x,
                           double alpha) {
  c.require_marginal(p_x);
  return gradient_J_raw(c.p_uv(), c.f(), ch, alpha);
}

AscentResult inner_ascent(const DeterministicMap& f, const BroadcastChannel& ch, const SimplexVector& p_x,
                          double alpha, const AscentOptions& opts) {
  const FiberLayout layout = layout_for(f, p_x);
  Kernel kernel(f, ch, alpha);
  const std::size_t cells = f.cells();

  std::vector<std::vector<double>> starts;
  if (opts.start) starts.push_back(feasible_start(layout, *opts.start, cells));
  starts.push_back(uniform_start(layout, cells));
  if (layout.has_freedom) {
    for (std::size_t r = 1; r < opts.restarts; ++r) {
      Rng rng(derive_seed(opts.seed, r));
      starts.push_back(random_start(layout, cells, rng));
    }
  }

  AscentResult best{-std::numeric_limits<double>::infinity(), {}};
  std::vector<double> best_p;
  for (auto& p : starts) {
    const double v = climb(kernel, layout, p, opts.iterations, opts.initial_step);
    if (v > best.value) {
      best.value = v;
      best_p = p;
    }
  }
  best.p_uv = unflatten(best_p, f.u_size(), f.v_size());
  return best;
}

AscentResult inner_ascent(const DeterministicMap& f, const BroadcastChannel& ch, const SimplexVector& p_x,
                          double alpha, std::size_t restarts, std::uint64_t seed) {
  AscentOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  return inner_ascent(f, ch, p_x, alpha, opts);
}

std::vector<DeterministicMap> candidate_maps(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha,
                                             const TmaxOptions& opts, bool* sampled) {
  const std::size_t n = ch.x_size();
  if (n > 4) throw SizeError("tmax supports |X| <= 4");
  if (p_x.dim() != n) throw InputError("input law and channel disagree on |X|");
  // Merging duplicate rows can lower the objective once I(U;Y) carries a
  // weight above one, so repeated rows stay in the search there.
  const bool allow_repeats = alpha > 1.0;
  const bool and_filter = opts.and_pattern_filter && alpha == 1.0 && n > 1 && ch.is_dense(0.0);
  bool any_sampled = false;

  std::set<DeterministicMap> seen;
  std::vector<DeterministicMap> out;
  auto consider = [&](const DeterministicMap& f) {
    if (!f.admissible_for(p_x)) return;
    if (and_filter && !and_pattern_detect(f).empty()) return;
    if (seen.insert(f).second) out.push_back(f);
  };
  consider(DeterministicMap::identity_on_u(n));
  consider(DeterministicMap::identity_on_v(n));
  for (std::size_t u = 1; u <= n; ++u) {
    for (std::size_t v = 1; v <= n; ++v) {
      if (enumeration_candidates(u, v, n, allow_repeats) <= static_cast<double>(opts.enumeration_cap)) {
        EnumerationOptions eo;
        eo.allow_repeated_rows = allow_repeats;
        eo.candidate_cap = opts.enumeration_cap;
        for (const auto& f : enumerate_maps(u, v, n, eo)) consider(f);
      } else {
        any_sampled = true;
        Rng rng(derive_seed(opts.seed, 0x6d6170ULL + 16 * u + v));
        for (const auto& f : sample_maps(u, v, n, opts.map_samples, rng, allow_repeats)) consider(f);
      }
    }
  }
  if (sampled) *sampled = any_sampled;
  return out;
}

TmaxResult tmax_eval(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha, const TmaxOptions& opts) {
  if (!std::isfinite(alpha) || alpha <= 0.0) throw InputError("alpha must be positive");
  bool sampled = false;
  const auto maps = candidate_maps(ch, p_x, alpha, opts, &sampled);
  if (maps.empty()) throw InfeasibleError("no admissible map for this input law");

  auto seed_for = [&](const DeterministicMap& f) { return derive_seed(opts.seed, fnv1a(f.id())); };
  auto base_options = [&](const DeterministicMap& f, std::size_t restarts) {
    AscentOptions ao;
    ao.restarts = restarts;
    ao.iterations = opts.iterations;
    ao.seed = seed_for(f);
    ao.initial_step = opts.initial_step;
    return ao;
  };

  std::vector<AscentResult> results(maps.size());
  const bool screen = maps.size() > opts.refine_top;
  const std::size_t first_restarts = screen ? std::max<std::size_t>(1, opts.screen_restarts) : opts.restarts;
  parallel_for(maps.size(), [&](std::size_t i) {
    results[i] = inner_ascent(maps[i], ch, p_x, alpha, base_options(maps[i], first_restarts));
  });

  if (screen) {
    std::vector<std::size_t> order(maps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (results[a].value != results[b].value) return results[a].value > results[b].value;
      return maps[a].id() < maps[b].id();
    });
    order.resize(std::min(order.size(), opts.refine_top));
    std::vector<AscentResult> refined(order.size());
    parallel_for(order.size(), [&](std::size_t k) {
      const std::size_t i = order[k];
      auto ao = base_options(maps[i], opts.restarts);
      ao.start = results[i].p_uv;
      refined[k] = inner_ascent(maps[i], ch, p_x, alpha, ao);
    });
    for (std::size_t k = 0; k < order.size(); ++k)
      if (refined[k].value > results[order[k]].value) results[order[k]] = refined[k];
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (results[i].value > results[best].value ||
        (results[i].value == results[best].value && maps[i].id() < maps[best].id()))
      best = i;
  }

  std::vector<MapValue> per_map;
  per_map.reserve(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) per_map.push_back({maps[i].id(), results[i].value});

  CouplingWithMap witness(results[best].p_uv, maps[best]);
  const double value = objective_J_raw(witness.p_uv(), witness.f(), ch, alpha);
  const bool exact = ch.x_size() == 2 && alpha == 1.0;
  return TmaxResult{value, std::move(witness), alpha, std::move(per_map), !exact, alpha < 1.0, sampled};
}

// -- Grid oracle ---------------------------------------------------------------------
// Deliberately shares nothing with the ascent code above: raw tables, explicit
// joint matrices and the textbook sum p log p / (p_a p_b).

namespace {

double plain_mi(const Eigen::MatrixXd& joint) {
  const Eigen::VectorXd a = joint.rowwise().sum();
  const Eigen::RowVectorXd b = joint.colwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i)
    for (Eigen::Index j = 0; j < joint.cols(); ++j)
      if (joint(i, j) > 0.0) total += joint(i, j) * std::log2(joint(i, j) / (a(i) * b(j)));
  return total;
}

void compositions(std::size_t parts, long units, std::vector<long>& current, std::vector<std::vector<long>>& out) {
  if (parts == 1) {
    current.push_back(units);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (long k = 0; k <= units; ++k) {
    current.push_back(k);
    compositions(parts - 1, units - k, current, out);
    current.pop_back();
  }
}

}  // namespace

double brute_oracle(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha, double grid_resolution) {
  if (!(grid_resolution > 0.0) || grid_resolution > 0.01 + 1e-15)
    throw InputError("brute_oracle: grid resolution must lie in (0, 1/100]");
  const std::size_t n = ch.x_size();
  if (p_x.dim() != n) throw InputError("brute_oracle: input law and channel disagree on |X|");
  if (n > 4) throw SizeError("brute_oracle: |X| <= 4 only");
  const long units = std::lround(1.0 / grid_resolution);
  if (units > 2000) throw SizeError("brute_oracle: resolution finer than 1/2000");
  const Eigen::MatrixXd& qy = ch.y_chan().matrix();
  const Eigen::MatrixXd& qz = ch.z_chan().matrix();

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t nu = 1; nu <= n; ++nu) {
    for (std::size_t nv = 1; nv <= n && nu * nv <= 4; ++nv) {
      const std::size_t cells = nu * nv;
      std::size_t tables = 1;
      for (std::size_t i = 0; i < cells; ++i) tables *= n;
      for (std::size_t code = 0; code < tables; ++code) {
        std::vector<std::size_t> f(cells);
        std::size_t rest = code;
        for (std::size_t i = 0; i < cells; ++i) {
          f[i] = rest % n;
          rest /= n;
        }
        std::vector<std::vector<std::size_t>> fiber(n);
        for (std::size_t i = 0; i < cells; ++i) fiber[f[i]].push_back(i);
        bool ok = true;
        for (std::size_t x = 0; x < n; ++x) ok = ok && !(p_x[x] > 0.0 && fiber[x].empty());
        if (!ok) continue;

        std::vector<std::vector<std::vector<long>>> grids(n);
        for (std::size_t x = 0; x < n; ++x) {
          std::vector<long> cur;
          if (fiber[x].empty()) grids[x].push_back({});
          else compositions(fiber[x].size(), p_x[x] > 0.0 ? units : 0, cur, grids[x]);
        }
        std::vector<std::size_t> pick(n, 0);
        while (true) {
          Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nv));
          for (std::size_t x = 0; x < n; ++x)
            for (std::size_t k = 0; k < fiber[x].size(); ++k) {
              const std::size_t cell = fiber[x][k];
              p(static_cast<Eigen::Index>(cell / nv), static_cast<Eigen::Index>(cell % nv)) =
                  p_x[x] * static_cast<double>(grids[x][pick[x]][k]) / static_cast<double>(units);
            }
          Eigen::MatrixXd uy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu), qy.cols());
          Eigen::MatrixXd vz = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), qz.cols());
          for (std::size_t i = 0; i < cells; ++i) {
            const auto u = static_cast<Eigen::Index>(i / nv), v = static_cast<Eigen::Index>(i % nv);
            uy.row(u) += p(u, v) * qy.row(static_cast<Eigen::Index>(f[i]));
            vz.row(v) += p(u, v) * qz.row(static_cast<Eigen::Index>(f[i]));
          }
          best = std::max(best, alpha * plain_mi(uy) + plain_mi(vz) - plain_mi(p));

          std::size_t d = 0;
          while (d < n && ++pick[d] == grids[d].size()) pick[d++] = 0;
          if (d == n) break;
        }
      }
    }
  }
  return best;
}

}  // namespace martonlab
