#pragma once

// T_alpha(X) = max over p(u,v|x) of alpha I(U;Y) + I(V;Z) - I(U;V), evaluated
// at a fixed input law through the reduced form X = f(U, V).

#include "martonlab/maps.hpp"
#include "martonlab/probcore.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace martonlab {

/// alpha I(U;Y) + I(V;Z) - I(U;V) in bits. Validates the coupling against p_x.
double objective_J(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x, double alpha);

/// Same objective with no validation, on a possibly unnormalized table. Uses
/// the smooth extension -sum a log a of every entropy term, so it is
/// differentiable in every direction where the entries are positive.
double objective_J_raw(const Eigen::MatrixXd& p_uv, const DeterministicMap& f, const BroadcastChannel& ch,
                       double alpha);

/// dJ/dp(u,v) in bits. Cells with p(u,v) <= 0 are NaN: the gradient is
/// reported on the support only.
Eigen::MatrixXd gradient_J(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x,
                           double alpha);
Eigen::MatrixXd gradient_J_raw(const Eigen::MatrixXd& p_uv, const DeterministicMap& f, const BroadcastChannel& ch,
                               double alpha);

struct AscentOptions {
  std::size_t restarts = 32;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  /// Base step of the eta0 / sqrt(k + 1) schedule, in probability units per bit.
  double initial_step = 1.0;
  /// Extra starting point tried before the random restarts.
  std::optional<Eigen::MatrixXd> start;
};

struct AscentResult {
  double value = 0.0;
  Eigen::MatrixXd p_uv;
};

/// Multi-start projected gradient ascent over {p_uv >= 0, fiber sums = p(x)}.
/// Throws InfeasibleError when some x with p(x) > 0 has an empty fiber.
AscentResult inner_ascent(const DeterministicMap& f, const BroadcastChannel& ch, const SimplexVector& p_x,
                          double alpha, const AscentOptions& opts = {});
AscentResult inner_ascent(const DeterministicMap& f, const BroadcastChannel& ch, const SimplexVector& p_x,
                          double alpha, std::size_t restarts, std::uint64_t seed);

struct TmaxOptions {
  std::size_t restarts = 32;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  double initial_step = 1.0;
  /// Cheap pass over every candidate map before the full search.
  std::size_t screen_restarts = 2;
  /// Maps carried from the screen to the full-restart search.
  std::size_t refine_top = 8;
  /// Map sizes with more row combinations than this are sampled instead.
  std::size_t enumeration_cap = 5000;
  std::size_t map_samples = 64;
  /// Drop maps with a constant row and column sharing one symbol. Only
  /// honored where that exclusion is sound: alpha = 1 and a dense channel.
  bool and_pattern_filter = true;
};

struct MapValue {
  std::string map_id;
  double value;
};

struct TmaxResult {
  double value;
  CouplingWithMap witness;
  double alpha;
  std::vector<MapValue> per_map_values;
  /// False only where the search is exact: binary input with alpha = 1.
  bool is_lower_bound;
  bool outside_alpha_regime;
  /// Some map sizes were sampled rather than enumerated.
  bool maps_sampled;
};

/// The candidate maps tmax_eval searches for this channel, input law and weight.
std::vector<DeterministicMap> candidate_maps(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha,
                                             const TmaxOptions& opts, bool* sampled = nullptr);

TmaxResult tmax_eval(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha, const TmaxOptions& opts = {});

/// Exhaustive grid search over every raw map with |U| |V| <= 4 and the
/// fiber-constrained p(u,v) lattice of the given resolution. A lower bound on
/// T_alpha, written independently of the ascent code.
double brute_oracle(const BroadcastChannel& ch, const SimplexVector& p_x, double alpha, double grid_resolution);

}  // namespace martonlab
