#include "martonlab/factorize.hpp"

#include "martonlab/errors.hpp"
#include "martonlab/parallel.hpp"
#include "martonlab/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace martonlab {
namespace {

double weighted_output_entropy(const BroadcastChannel& ch, const SimplexVector& p, const WeightedObjective& w) {
  return -(w.alpha - w.lambda_bar()) * entropy(push_forward(p, ch.y_chan())) -
         w.lambda_bar() * entropy(push_forward(p, ch.z_chan()));
}

ConjectureVerdictKind classify(double slack, bool rhs_lower, double tolerance) {
  if (slack >= -tolerance) return ConjectureVerdictKind::holds_within_tolerance;
  return rhs_lower ? ConjectureVerdictKind::inconclusive : ConjectureVerdictKind::violation_candidate;
}

struct LetterRhs {
  double value;
  bool lower;
};

LetterRhs letter_rhs(const BroadcastChannel& ch, const SimplexVector& p, const WeightedObjective& w,
                     const ConjectureOptions& opts) {
  const TFunction t = letter_t_function(ch, w.alpha, opts.letter_tmax);
  if (opts.disable_envelope) {
    const TValue tv = t(p);
    return {weighted_output_entropy(ch, p, w) + tv.value, tv.is_lower_bound};
  }
  const FactorRhsResult r = factor_rhs(ch, p, w.lambda, w.alpha, t, opts.envelope);
  return {r.envelope.value, r.is_lower_bound};
}

void require_binary_pair(const BroadcastChannel& ch1, const BroadcastChannel& ch2, const SimplexVector& p) {
  if (ch1.x_size() != 2 || ch2.x_size() != 2) throw SizeError("two-letter checks need binary-input components");
  if (p.dim() != 4) throw InputError("p(x1,x2) must have four entries ordered x1 * 2 + x2");
}

ConjectureVerdict two_letter_with_t(const BroadcastChannel& ch1, const BroadcastChannel& ch2,
                                    const SimplexVector& p, const WeightedObjective& w,
                                    const ConjectureOptions& opts, const TmaxResult& t2, const char* check) {
  const BroadcastChannel pc = product_channel(ch1, ch2);
  ConjectureVerdict v;
  v.lhs = weighted_output_entropy(pc, p, w) + t2.value;
  v.lhs_is_lower_bound = t2.is_lower_bound;
  v.witness = t2.witness;
  const auto [p1, p2] = split_law(p, 2, 2);
  const LetterRhs r1 = letter_rhs(ch1, p1, w, opts);
  const LetterRhs r2 = letter_rhs(ch2, p2, w, opts);
  v.rhs = r1.value + r2.value;
  v.rhs_is_lower_bound = r1.lower || r2.lower;
  v.slack = v.rhs - v.lhs;
  v.verdict = classify(v.slack, v.rhs_is_lower_bound, opts.tolerance);
  v.instance = {check, {ch1, ch2}, p.to_vector(), w.alpha, w.lambda, opts.tmax.seed,
                opts.tmax.restarts, opts.envelope.grid_points_1d, opts.disable_envelope};
  return v;
}

ConjectureOptions options_for(const InstanceDescriptor& d, double tolerance) {
  ConjectureOptions o;
  o.tmax.seed = d.seed;
  o.tmax.restarts = d.restarts;
  o.letter_tmax.seed = d.seed;
  o.letter_tmax.restarts = std::max<std::size_t>(1, d.restarts / 4);
  o.envelope.grid_points_1d = d.envelope_points;
  o.disable_envelope = d.disable_envelope;
  o.tolerance = tolerance;
  return o;
}

double information_gap(const BroadcastChannel& ch, const Eigen::VectorXd& q) {
  const SimplexVector p(q);
  return channel_mutual_information(p, ch.y_chan()) - channel_mutual_information(p, ch.z_chan());
}

}  // namespace

void WeightedObjective::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InputError("alpha must be a finite value >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
}

std::string verdict_kind_name(ConjectureVerdictKind k) {
  switch (k) {
    case ConjectureVerdictKind::holds_within_tolerance: return "holds_within_tolerance";
    case ConjectureVerdictKind::violation_candidate: return "violation_candidate";
    case ConjectureVerdictKind::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

TFunction letter_t_function(const BroadcastChannel& ch, double alpha, const TmaxOptions& opts) {
  if (ch.x_size() == 2 && alpha == 1.0) return max_information_function(ch, 1.0);
  return [ch, alpha, opts](const SimplexVector& q) {
    const TmaxResult r = tmax_eval(ch, q, alpha, opts);
    return TValue{r.value, r.is_lower_bound};
  };
}

ConjectureVerdict conj2_check(const BroadcastChannel& ch1, const BroadcastChannel& ch2, const SimplexVector& p,
                              const WeightedObjective& w, const ConjectureOptions& opts) {
  w.validate();
  require_binary_pair(ch1, ch2, p);
  const TmaxResult t2 = tmax_eval(product_channel(ch1, ch2), p, w.alpha, opts.tmax);
  return two_letter_with_t(ch1, ch2, p, w, opts, t2, "conj2");
}

ConjectureVerdict conj1_check(const BroadcastChannel& ch1, const BroadcastChannel& ch2, const SimplexVector& p,
                              double lambda, const ConjectureOptions& opts) {
  ConjectureVerdict v = conj2_check(ch1, ch2, p, WeightedObjective{1.0, lambda}, opts);
  v.instance.check = "conj1";
  return v;
}

ConjectureVerdict conj3_check(const BroadcastChannel& ch, double lambda, double alpha, const ConjectureOptions& opts) {
  const WeightedObjective w{alpha, lambda};
  w.validate();
  if (ch.x_size() != 2) throw SizeError("the single-letter envelope check needs binary input");
  if (opts.grid_points < 2) throw InputError("grid_points must be at least 2");
  const TFunction rhs_inner = max_information_function(ch, alpha);
  ConjectureVerdict v;
  v.grid.resize(opts.grid_points);
  std::vector<std::optional<CouplingWithMap>> witnesses(opts.grid_points);
  std::vector<char> lhs_lower(opts.grid_points, 0);
  parallel_for(opts.grid_points, [&](std::size_t k) {
    const double q = static_cast<double>(k) / static_cast<double>(opts.grid_points - 1);
    const SimplexVector p = SimplexVector::binary(q);
    const TmaxResult t = tmax_eval(ch, p, alpha, opts.tmax);
    const double lhs = weighted_output_entropy(ch, p, w) + t.value;
    double rhs;
    if (opts.disable_envelope) rhs = weighted_output_entropy(ch, p, w) + rhs_inner(p).value;
    else rhs = factor_rhs(ch, p, lambda, alpha, rhs_inner, opts.envelope).envelope.value;
    v.grid[k] = {q, lhs, rhs, rhs - lhs};
    witnesses[k] = t.witness;
    lhs_lower[k] = t.is_lower_bound ? 1 : 0;
  });
  std::size_t worst = 0;
  for (std::size_t k = 1; k < v.grid.size(); ++k)
    if (v.grid[k].slack < v.grid[worst].slack) worst = k;
  v.lhs = v.grid[worst].lhs;
  v.rhs = v.grid[worst].rhs;
  v.slack = v.grid[worst].slack;
  v.lhs_is_lower_bound = std::any_of(lhs_lower.begin(), lhs_lower.end(), [](char c) { return c != 0; });
  v.rhs_is_lower_bound = false;
  v.witness = witnesses[worst];
  v.verdict = classify(v.slack, false, opts.tolerance);
  v.instance = {"conj3", {ch}, SimplexVector::binary(v.grid[worst].p).to_vector(), alpha, lambda, opts.tmax.seed,
                opts.tmax.restarts, opts.envelope.grid_points_1d, opts.disable_envelope};
  return v;
}

ConjectureVerdict rerun_instance(const InstanceDescriptor& d, double tolerance) {
  ConjectureOptions o = options_for(d, tolerance);
  if (d.check == "conj3") {
    if (d.channels.size() != 1) throw InputError("conj3 descriptor needs one channel");
    o.grid_points = 2;
    const WeightedObjective w{d.alpha, d.lambda};
    w.validate();
    // A single point: rerun only the stored input law.
    const BroadcastChannel& ch = d.channels[0];
    const SimplexVector p(d.p_x);
    const TmaxResult t = tmax_eval(ch, p, d.alpha, o.tmax);
    ConjectureVerdict v;
    v.lhs = weighted_output_entropy(ch, p, w) + t.value;
    const TFunction inner = max_information_function(ch, d.alpha);
    v.rhs = o.disable_envelope ? weighted_output_entropy(ch, p, w) + inner(p).value
                               : factor_rhs(ch, p, d.lambda, d.alpha, inner, o.envelope).envelope.value;
    v.slack = v.rhs - v.lhs;
    v.lhs_is_lower_bound = t.is_lower_bound;
    v.witness = t.witness;
    v.verdict = classify(v.slack, false, tolerance);
    v.instance = d;
    v.grid.push_back({p[1], v.lhs, v.rhs, v.slack});
    return v;
  }
  if (d.channels.size() != 2) throw InputError("two-letter descriptor needs two channels");
  const SimplexVector p(d.p_x);
  if (d.check == "conj1") return conj1_check(d.channels[0], d.channels[1], p, d.lambda, o);
  if (d.check == "conj2") return conj2_check(d.channels[0], d.channels[1], p, {d.alpha, d.lambda}, o);
  throw InputError("unknown check '" + d.check + "'");
}

JointTable claim1_joint(const Eigen::MatrixXd& p_uv_x1, std::size_t u_size, const std::vector<int>& g,
                        const BroadcastChannel& ch1, const BroadcastChannel& ch2) {
  if (u_size == 0 || p_uv_x1.rows() % static_cast<Eigen::Index>(u_size) != 0)
    throw InputError("claim1_joint: rows must be u * |V| + v");
  if (g.size() != u_size) throw InputError("claim1_joint: g needs one entry per u");
  if (static_cast<std::size_t>(p_uv_x1.cols()) != ch1.x_size()) throw InputError("claim1_joint: |X1| mismatch");
  const std::size_t v_size = static_cast<std::size_t>(p_uv_x1.rows()) / u_size;
  const std::size_t x1s = ch1.x_size(), x2s = ch2.x_size();
  for (int x2 : g)
    if (x2 < 0 || static_cast<std::size_t>(x2) >= x2s) throw InputError("claim1_joint: g maps outside X2");
  const std::vector<std::size_t> axes{u_size, v_size, x1s, x2s, ch1.y_size(), ch1.z_size(), ch2.y_size(),
                                      ch2.z_size()};
  std::size_t total = 1;
  for (auto a : axes) total *= a;
  std::vector<double> entries(total, 0.0);
  std::size_t idx = 0;
  for (std::size_t u = 0; u < u_size; ++u)
    for (std::size_t v = 0; v < v_size; ++v)
      for (std::size_t x1 = 0; x1 < x1s; ++x1)
        for (std::size_t x2 = 0; x2 < x2s; ++x2)
          for (std::size_t y1 = 0; y1 < axes[4]; ++y1)
            for (std::size_t z1 = 0; z1 < axes[5]; ++z1)
              for (std::size_t y2 = 0; y2 < axes[6]; ++y2)
                for (std::size_t z2 = 0; z2 < axes[7]; ++z2) {
                  if (static_cast<std::size_t>(g[u]) == x2)
                    entries[idx] = p_uv_x1(static_cast<Eigen::Index>(u * v_size + v), static_cast<Eigen::Index>(x1)) *
                                   ch1.y_chan()(x1, y1) * ch1.z_chan()(x1, z1) * ch2.y_chan()(x2, y2) *
                                   ch2.z_chan()(x2, z2);
                  ++idx;
                }
  return JointTable(axes, std::move(entries));
}

double claim1_identity_check(const JointTable& joint, double alpha) {
  if (joint.rank() != 8) throw InputError("two-letter identity needs axes (U, V, X1, X2, Y1, Z1, Y2, Z2)");
  constexpr std::size_t U = 0, V = 1, X2 = 3, Y1 = 4, Y2 = 6, Z2 = 7;
  const std::array<std::size_t, 2> ux{U, X2};
  const Eigen::MatrixXd pux = joint.marginal(ux).as_matrix();
  for (Eigen::Index u = 0; u < pux.rows(); ++u) {
    const double pu = pux.row(u).sum();
    if (pu <= kLogFloor) continue;
    for (Eigen::Index x = 0; x < pux.cols(); ++x) {
      const double c = pux(u, x) / pu;
      if (c > 1e-12 && c < 1.0 - 1e-12) throw InputError("two-letter identity needs X2 to be a function of U");
    }
  }
  using A = std::vector<std::size_t>;
  auto cmi = [&](const A& a, const A& b, const A& c) { return conditional_mutual_information(joint, a, b, c); };
  const double lhs = alpha * cmi({U}, {Y2}, {Y1}) + cmi({V}, {Z2}, {U, Y1}) - (alpha - 1.0) * cmi({Y1}, {Z2}, {U}) -
                     cmi({Y1}, {Z2}, {U, V});
  return std::abs(lhs - alpha * cmi({X2}, {Y2}, {Y1}));
}

BroadcastChannel random_binary_channel(Rng& rng) {
  auto leg = [&rng]() {
    const std::size_t outs = 2 + rng.index(2);
    std::vector<std::vector<double>> rows;
    for (int x = 0; x < 2; ++x) rows.push_back(rng.dirichlet(outs));
    return StochasticMatrix::from_rows(rows);
  };
  StochasticMatrix y = leg();
  StochasticMatrix z = leg();
  return BroadcastChannel(std::move(y), std::move(z));
}

SearchReport random_search(const SearchConfig& config) {
  if (config.check != "conj1" && config.check != "conj2" && config.check != "conj3")
    throw InputError("search check must be conj1, conj2 or conj3");
  if (config.lambda_grid.empty()) throw InputError("search needs a non-empty lambda grid");
  std::vector<double> alphas = config.check == "conj1" ? std::vector<double>{1.0} : config.alpha_grid;
  if (alphas.empty()) throw InputError("search needs a non-empty alpha grid");

  auto base_options = [&](std::uint64_t seed, std::size_t scale) {
    ConjectureOptions o;
    o.tmax.seed = seed;
    o.tmax.restarts = config.restarts * scale;
    o.letter_tmax.seed = seed;
    o.letter_tmax.restarts = std::max<std::size_t>(1, config.restarts * scale / 4);
    o.envelope.grid_points_1d = 400 * scale + 1;
    o.disable_envelope = config.disable_envelope;
    o.tolerance = config.tolerance;
    return o;
  };

  for (const auto& ch : config.fixture_channels)
    if (ch.x_size() != 2) throw SizeError("search fixtures must have binary input");
  const std::size_t total = config.trials + config.fixture_channels.size();
  std::vector<std::vector<ConjectureVerdict>> per_trial(total);
  parallel_for(total, [&](std::size_t trial) {
    const std::uint64_t seed = derive_seed(config.seed, trial);
    Rng rng(seed);
    const bool fixture = trial >= config.trials;
    const BroadcastChannel ch1 = fixture ? config.fixture_channels[trial - config.trials] : random_binary_channel(rng);
    const BroadcastChannel ch2 = fixture ? ch1 : random_binary_channel(rng);
    const std::vector<double> px = rng.dirichlet(4);
    const ConjectureOptions screen = base_options(seed, 1);
    for (double alpha : alphas) {
      std::optional<TmaxResult> t2;
      if (config.check != "conj3") t2 = tmax_eval(product_channel(ch1, ch2), SimplexVector(px), alpha, screen.tmax);
      for (double lambda : config.lambda_grid) {
        ConjectureVerdict v;
        if (config.check == "conj3") {
          v = conj3_check(ch1, lambda, alpha, screen);
        } else {
          const WeightedObjective w{alpha, lambda};
          w.validate();
          v = two_letter_with_t(ch1, ch2, SimplexVector(px), w, screen, *t2, config.check.c_str());
        }
        if (v.verdict == ConjectureVerdictKind::violation_candidate) {
          ConjectureOptions confirm = base_options(seed, 4);
          confirm.tolerance = config.confirm_tolerance;
          confirm.grid_points = screen.grid_points * 4 - 3;
          if (config.check == "conj3") v = conj3_check(ch1, lambda, alpha, confirm);
          else if (config.check == "conj1") v = conj1_check(ch1, ch2, SimplexVector(px), lambda, confirm);
          else v = conj2_check(ch1, ch2, SimplexVector(px), {alpha, lambda}, confirm);
        }
        per_trial[trial].push_back(std::move(v));
      }
    }
  });

  SearchReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t trial = 0; trial < per_trial.size(); ++trial)
    for (auto& v : per_trial[trial]) {
      if (v.verdict == ConjectureVerdictKind::violation_candidate) {
        ++report.violation_candidates;
        if (v.slack < -config.confirm_tolerance) ++report.confirmed_violations;
      }
      if (v.slack < report.min_slack) {
        report.min_slack = v.slack;
        report.argmin = report.verdicts.size();
      }
      report.trial_index.push_back(trial);
      report.verdicts.push_back(std::move(v));
    }
  if (report.verdicts.empty()) report.min_slack = 0.0;
  return report;
}

MoreCapableResult more_capable_test(const BroadcastChannel& ch, double grid_step) {
  const std::size_t n = ch.x_size();
  if (n < 2 || n > 3) throw SizeError("more_capable_test supports |X| in {2, 3}");
  if (!(grid_step > 0.0 && grid_step <= 0.5)) throw InputError("grid_step must lie in (0, 1/2]");
  const auto divisions = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  Eigen::VectorXd best(n);
  double best_gap = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& q) {
    const double g = information_gap(ch, q);
    if (g < best_gap) {
      best_gap = g;
      best = q;
    }
  };
  for (std::size_t i = 0; i <= divisions; ++i) {
    if (n == 2) {
      Eigen::VectorXd q(2);
      q << 1.0 - double(i) / divisions, double(i) / divisions;
      consider(q);
      continue;
    }
    for (std::size_t j = 0; i + j <= divisions; ++j) {
      Eigen::VectorXd q(3);
      q << double(i) / divisions, double(j) / divisions, double(divisions - i - j) / divisions;
      consider(q);
    }
  }
  // Compass search along e_a - e_b from the worst grid point.
  double h = grid_step;
  while (h > 1e-10) {
    bool moved = false;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        Eigen::VectorXd q = best;
        const double step = std::min(h, q(static_cast<Eigen::Index>(b)));
        if (step <= 0.0) continue;
        q(static_cast<Eigen::Index>(a)) += step;
        q(static_cast<Eigen::Index>(b)) -= step;
        const double g = information_gap(ch, q);
        if (g < best_gap) {
          best_gap = g;
          best = q;
          moved = true;
        }
      }
    if (!moved) h *= 0.5;
  }
  return {best_gap >= -1e-9, best_gap, std::vector<double>(best.data(), best.data() + best.size())};
}

}  // namespace martonlab
