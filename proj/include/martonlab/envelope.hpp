#pragma once

// Upper concave envelopes on the probability simplex and the binary-input
// rate formulas built on them.

#include "martonlab/probcore.hpp"

#include <functional>
#include <string>
#include <vector>

namespace martonlab {

using SimplexFunction = std::function<double(const SimplexVector&)>;

struct EnvelopeOptions {
  /// Grid on the binary simplex (points, endpoints included).
  std::size_t grid_points_1d = 2001;
  /// The 2-simplex is gridded at step 1 / simplex_divisions.
  std::size_t simplex_divisions = 150;
  bool polish = true;
};

struct EnvelopeAtom {
  double weight;
  SimplexVector point;
};

struct EnvelopeResult {
  double value;
  std::vector<EnvelopeAtom> atoms;
  /// g at the query point.
  double base_value;
};

/// max sum_i w_i g(q_i) over mixtures sum_i w_i q_i = p, for |X| <= 3.
EnvelopeResult concave_envelope_eval(const SimplexFunction& g, const SimplexVector& p,
                                     const EnvelopeOptions& opts = {});

struct EnvelopeTraceRow {
  double p;  ///< P(X = 1)
  double g;
  double envelope;
};

/// Grid trace of g and its upper hull on the binary simplex.
std::vector<EnvelopeTraceRow> envelope_trace_binary(const SimplexFunction& g, std::size_t points);
std::string envelope_trace_csv(const std::vector<EnvelopeTraceRow>& rows);

// -- Binary-input rate formulas, |W| = 2 ---------------------------------------------

struct RateSearchOptions {
  /// Grid points per parameter (P(W=0), P(X=1|W=0), P(X=1|W=1)).
  std::size_t grid_points = 61;
  /// Best grid points polished by pattern search.
  std::size_t polish_starts = 6;
};

struct RateResult {
  double value;
  double p_w0;         ///< P(W = 0)
  double p_x1_w0;      ///< P(X = 1 | W = 0)
  double p_x1_w1;      ///< P(X = 1 | W = 1)
  double grid_step;    ///< spacing of the grid the polish started from
};

/// min{I(W;Y), I(W;Z)} + (alpha - 1) I(W;Y) + alpha P(W=0) I(X;Y|W=0)
///   + P(W=1) I(X;Z|W=1) at the given parameters.
double weighted_rate_objective(const BroadcastChannel& ch, double alpha, double p_w0, double p_x1_w0,
                               double p_x1_w1);

/// Max of the sum-rate formula over p(w, x). Same search as
/// weighted_rate_support at alpha = 1.
RateResult marton_sum_rate_binary(const BroadcastChannel& ch, const RateSearchOptions& opts = {});

struct WeightedRateResult {
  RateResult direct;
  /// The same search with the receivers interchanged.
  RateResult swapped;
};

WeightedRateResult weighted_rate_support(const BroadcastChannel& ch, double alpha,
                                         const RateSearchOptions& opts = {});

// -- Envelope of the factorization functional --------------------------------------

struct TValue {
  double value;
  bool is_lower_bound;
};
using TFunction = std::function<TValue(const SimplexVector&)>;

struct FactorRhsResult {
  EnvelopeResult envelope;
  bool is_lower_bound;
};

/// Envelope at p_x of  -(alpha - (1 - lambda)) H(Y) - (1 - lambda) H(Z) + T(X).
FactorRhsResult factor_rhs(const BroadcastChannel& ch, const SimplexVector& p_x, double lambda, double alpha,
                           const TFunction& tmax_fn, const EnvelopeOptions& opts = {});

/// q -> max{alpha I(X;Y), I(X;Z)}. This is T_alpha itself for binary input at
/// alpha = 1 (flagged exact there) and the degenerate-choice floor elsewhere.
TFunction max_information_function(const BroadcastChannel& ch, double alpha);

}  // namespace martonlab
