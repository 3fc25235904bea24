#pragma once

// Two-letter factorization checks for the weighted functional
//   -(alpha - lambda_bar) H(Y) - lambda_bar H(Z) + T_alpha(X),
// the single-letter envelope comparison for binary input, and a seeded
// random search for violations.

#include "martonlab/envelope.hpp"
#include "martonlab/maps.hpp"
#include "martonlab/probcore.hpp"
#include "martonlab/tmax.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace martonlab {

struct WeightedObjective {
  double alpha = 1.0;
  double lambda = 0.0;

  double lambda_bar() const { return 1.0 - lambda; }
  /// Throws InputError unless alpha >= 1 and lambda in [0, 1].
  void validate() const;
};

enum class ConjectureVerdictKind { holds_within_tolerance, violation_candidate, inconclusive };
std::string verdict_kind_name(ConjectureVerdictKind k);

/// Everything needed to rerun a check.
struct InstanceDescriptor {
  std::string check;  ///< "conj1", "conj2" or "conj3"
  std::vector<BroadcastChannel> channels;
  std::vector<double> p_x;
  double alpha = 1.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 32;
  std::size_t envelope_points = 401;
  bool disable_envelope = false;
};

struct GridSlack {
  double p;  ///< P(X = 1)
  double lhs;
  double rhs;
  double slack;
};

struct ConjectureVerdict {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  ///< rhs - lhs
  bool lhs_is_lower_bound = false;
  /// The per-letter T came from a search, so rhs may sit below its true value.
  bool rhs_is_lower_bound = false;
  InstanceDescriptor instance;
  ConjectureVerdictKind verdict = ConjectureVerdictKind::inconclusive;
  /// Coupling achieving the two-letter (or single-letter) lhs.
  std::optional<CouplingWithMap> witness;
  /// Per-point slacks of the single-letter check; empty otherwise.
  std::vector<GridSlack> grid;
};

struct ConjectureOptions {
  /// Two-letter T on the product channel.
  TmaxOptions tmax{};
  /// Per-letter T where it has to be searched (alpha > 1).
  TmaxOptions letter_tmax{8, 200, 0, 1.0, 2, 8, 5000, 64, true};
  EnvelopeOptions envelope{401, 150, true};
  double tolerance = 1e-6;
  /// Mutation switch: use the functional at p(x) in place of its envelope.
  bool disable_envelope = false;
  /// Grid points over P(X = 1) for the single-letter check.
  std::size_t grid_points = 21;
};

/// T_alpha per letter: exact max information for binary input at alpha = 1,
/// otherwise a tmax search (lower bound).
TFunction letter_t_function(const BroadcastChannel& ch, double alpha, const TmaxOptions& opts);

/// The two-letter inequality at weights (1, lambda). Identical to
/// conj2_check with alpha = 1.
ConjectureVerdict conj1_check(const BroadcastChannel& ch1, const BroadcastChannel& ch2, const SimplexVector& p_x1x2,
                              double lambda, const ConjectureOptions& opts = {});

/// Throws SizeError unless both components have binary input.
ConjectureVerdict conj2_check(const BroadcastChannel& ch1, const BroadcastChannel& ch2, const SimplexVector& p_x1x2,
                              const WeightedObjective& w, const ConjectureOptions& opts = {});

/// Single-letter comparison over a grid of binary input laws; the reported
/// lhs/rhs/slack belong to the grid point with the smallest slack.
ConjectureVerdict conj3_check(const BroadcastChannel& ch, double lambda, double alpha,
                              const ConjectureOptions& opts = {});

/// Reruns the check a descriptor records, with the seed, restarts and
/// envelope grid it carries.
ConjectureVerdict rerun_instance(const InstanceDescriptor& d, double tolerance = 1e-6);

/// |alpha I(U;Y2|Y1) + I(V;Z2|U,Y1) - (alpha-1) I(Y1;Z2|U) - I(Y1;Z2|U,V)
///  - alpha I(X2;Y2|Y1)| on a joint with axes (U, V, X1, X2, Y1, Z1, Y2, Z2).
/// Throws InputError unless X2 is a deterministic function of U.
double claim1_identity_check(const JointTable& joint, double alpha);

/// Joint over (U, V, X1, X2, Y1, Z1, Y2, Z2) from p(u, v, x1) (rows u * |V| + v,
/// columns x1), X2 = g(u), and the two component channels with Y and Z
/// conditionally independent given X.
JointTable claim1_joint(const Eigen::MatrixXd& p_uv_x1, std::size_t u_size, const std::vector<int>& g,
                        const BroadcastChannel& ch1, const BroadcastChannel& ch2);

struct SearchConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 20;
  std::string check = "conj1";
  std::vector<double> lambda_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> alpha_grid{1.0};
  double tolerance = 1e-6;
  double confirm_tolerance = 1e-8;
  bool disable_envelope = false;
  /// Restarts of the screening pass; confirmation uses four times as many.
  std::size_t restarts = 8;
  /// Fixed channels run as extra trials after the random ones. Two-letter
  /// checks pair each with itself under a random p(x1, x2).
  std::vector<BroadcastChannel> fixture_channels;
};

struct SearchReport {
  std::vector<ConjectureVerdict> verdicts;  ///< trial-major, then alpha, then lambda
  std::vector<std::size_t> trial_index;  ///< fixtures follow the random trials
  std::size_t violation_candidates = 0;
  std::size_t confirmed_violations = 0;
  double min_slack = 0.0;
  std::size_t argmin = 0;
};

/// Random binary-input channels with rows drawn from Dirichlet(1) and output
/// sizes in {2, 3}. Screening runs at `tolerance`; each candidate is rerun with
/// 4x restarts and a 4x finer envelope grid and kept only if it survives at
/// `confirm_tolerance`.
SearchReport random_search(const SearchConfig& config);

/// Random binary-input channel from the search family.
BroadcastChannel random_binary_channel(Rng& rng);

struct MoreCapableResult {
  bool more_capable;
  double min_gap;  ///< min of I(X;Y) - I(X;Z)
  std::vector<double> argmin;
};

/// Grid check of I(X;Y) >= I(X;Z) - 1e-9 over the simplex (|X| <= 3), polished
/// from the worst grid point.
MoreCapableResult more_capable_test(const BroadcastChannel& ch, double grid_step = 0.01);

}  // namespace martonlab
