#include "martonlab/envelope.hpp"
#include "martonlab/errors.hpp"
#include "martonlab/simplex_lp.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace martonlab;
using testing_support::Gen;

TEST(ColumnLp, SolvesSmallProgram) {
  // max 3a + 2b + 0s1 + 0s2  s.t. a + b + s1 = 4, a + 3b + s2 = 6
  Eigen::MatrixXd cols(2, 4);
  cols << 1, 1, 1, 0, 1, 3, 0, 1;
  Eigen::VectorXd gains(4);
  gains << 3, 2, 0, 0;
  Eigen::VectorXd rhs(2);
  rhs << 4, 6;
  const auto sol = solve_column_lp(cols, gains, rhs, {2, 3});
  EXPECT_NEAR(sol.value, 12.0, 1e-12);
  double total = 0.0;
  for (const auto& [j, w] : sol.support) total += w * gains(static_cast<Eigen::Index>(j));
  EXPECT_NEAR(total, 12.0, 1e-12);
}

TEST(Envelope, ConcaveFunctionIsItsOwnEnvelope) {
  const SimplexFunction h = [](const SimplexVector& p) { return entropy(p); };
  for (double q : {0.1, 0.37, 0.5, 0.9}) {
    const auto r = concave_envelope_eval(h, SimplexVector::binary(q));
    EXPECT_NEAR(r.value, entropy(SimplexVector::binary(q)), 1e-9);
  }
  const auto r3 = concave_envelope_eval(h, SimplexVector{0.2, 0.3, 0.5});
  EXPECT_NEAR(r3.value, entropy(SimplexVector{0.2, 0.3, 0.5}), 1e-9);
}

TEST(Envelope, ConvexFunctionIsChordThroughVertices) {
  const SimplexFunction neg_h = [](const SimplexVector& p) { return -entropy(p); };
  const auto r = concave_envelope_eval(neg_h, SimplexVector::binary(0.3));
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  double mass = 0.0, mean = 0.0;
  for (const auto& a : r.atoms) {
    mass += a.weight;
    mean += a.weight * a.point[1];
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_NEAR(mean, 0.3, 1e-12);
  const auto r3 = concave_envelope_eval(neg_h, SimplexVector{0.2, 0.3, 0.5});
  EXPECT_NEAR(r3.value, 0.0, 1e-9);
}

TEST(Envelope, DominatesRandomWavyFunctions) {
  Gen g(31);
  for (int t = 0; t < 20; ++t) {
    const double a = g.uniform(1, 20), b = g.uniform(0, 6);
    const SimplexFunction f = [a, b](const SimplexVector& p) { return std::sin(a * p[1] + b) + p[0] * p[1]; };
    const auto p = SimplexVector::binary(g.uniform());
    const auto r = concave_envelope_eval(f, p);
    EXPECT_GE(r.value, f(p) - 1e-12);
    double combo = 0.0;
    for (const auto& at : r.atoms) combo += at.weight * f(at.point);
    EXPECT_NEAR(combo, r.value, 1e-9);
  }
}

TEST(Envelope, TraceIsConcaveAboveFunction) {
  const SimplexFunction f = [](const SimplexVector& p) { return std::cos(9 * p[1]); };
  const auto rows = envelope_trace_binary(f, 101);
  ASSERT_EQ(rows.size(), 101u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].envelope, rows[i].g - 1e-12);
    if (i > 0 && i + 1 < rows.size())
      EXPECT_GE(2 * rows[i].envelope, rows[i - 1].envelope + rows[i + 1].envelope - 1e-9);
  }
  EXPECT_EQ(envelope_trace_csv(rows).substr(0, 12), "p,g,envelope");
}

TEST(Envelope, RejectsLargeAlphabets) {
  const SimplexFunction f = [](const SimplexVector&) { return 0.0; };
  EXPECT_THROW(concave_envelope_eval(f, SimplexVector::uniform(4)), SizeError);
}

TEST(SumRate, SkewSymmetricChannelValue) {
  const auto r = marton_sum_rate_binary(bssc_channel(0.5));
  EXPECT_NEAR(r.value, 0.361642884, 1e-6);
  EXPECT_NEAR(weighted_rate_objective(bssc_channel(0.5), 1.0, r.p_w0, r.p_x1_w0, r.p_x1_w1), r.value, 1e-12);
}

TEST(SumRate, AtLeastBestSingleUserRate) {
  Gen g(32);
  for (int t = 0; t < 5; ++t) {
    const auto ch = g.channel(2, 2, 2);
    const auto r = marton_sum_rate_binary(ch, RateSearchOptions{31, 4});
    double best = 0.0;
    for (int k = 0; k <= 200; ++k)
      best = std::max(best, testing_support::max_information(ch, SimplexVector::binary(k / 200.0).values()));
    EXPECT_GE(r.value, best - 1e-4);
  }
}

TEST(FactorRhs, EnvelopeDominatesFunctional) {
  const auto ch = bssc_channel(0.4);
  for (double lambda : {0.0, 0.5, 1.0}) {
    const auto t = max_information_function(ch, 1.0);
    const auto px = SimplexVector::binary(0.35);
    const auto r = factor_rhs(ch, px, lambda, 1.0, t);
    const double direct = -(1.0 - (1.0 - lambda)) * entropy(push_forward(px, ch.y_chan())) -
                          (1.0 - lambda) * entropy(push_forward(px, ch.z_chan())) + t(px).value;
    EXPECT_GE(r.envelope.value, direct - 1e-9);
    EXPECT_FALSE(r.is_lower_bound);
  }
}
