#include "martonlab/errors.hpp"
#include "martonlab/factorize.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace martonlab;
using testing_support::Gen;

namespace {

ConjectureOptions quick_options() {
  ConjectureOptions o;
  o.tmax.restarts = 6;
  o.tmax.map_samples = 32;
  return o;
}

}  // namespace

TEST(WeightedObjective, Validation) {
  EXPECT_THROW((WeightedObjective{0.5, 0.0}.validate()), InputError);
  EXPECT_THROW((WeightedObjective{1.0, 1.5}.validate()), InputError);
  EXPECT_NO_THROW((WeightedObjective{2.0, 0.3}.validate()));
  EXPECT_DOUBLE_EQ((WeightedObjective{1.0, 0.3}.lambda_bar()), 0.7);
}

TEST(Factorization, UnitWeightReducesToFirstCheck) {
  Rng rng(61);
  const auto a = random_binary_channel(rng), b = random_binary_channel(rng);
  const SimplexVector p(rng.dirichlet(4));
  const auto opts = quick_options();
  const auto v1 = conj1_check(a, b, p, 0.5, opts);
  const auto v2 = conj2_check(a, b, p, {1.0, 0.5}, opts);
  EXPECT_EQ(v1.lhs, v2.lhs);
  EXPECT_EQ(v1.rhs, v2.rhs);
  EXPECT_EQ(v1.instance.check, "conj1");
  EXPECT_EQ(v1.verdict, ConjectureVerdictKind::holds_within_tolerance);
  EXPECT_TRUE(v1.lhs_is_lower_bound);
}

TEST(Factorization, NonBinaryComponentsRejected) {
  const auto b = builtin_channel("blackwell").channel;
  EXPECT_THROW(conj2_check(b, b, SimplexVector::uniform(9), {1.0, 0.5}), SizeError);
}

TEST(Factorization, DeterminismAndRerun) {
  Rng rng(62);
  const auto a = random_binary_channel(rng);
  const SimplexVector p(rng.dirichlet(4));
  const auto opts = quick_options();
  const auto v1 = conj1_check(a, a, p, 0.25, opts);
  const auto v2 = conj1_check(a, a, p, 0.25, opts);
  EXPECT_EQ(v1.lhs, v2.lhs);
  EXPECT_EQ(v1.slack, v2.slack);
}

TEST(Factorization, SingleLetterCheckReportsGrid) {
  const auto v = conj3_check(bssc_channel(0.5), 0.3, 2.0);
  EXPECT_EQ(v.grid.size(), 21u);
  EXPECT_EQ(v.verdict, ConjectureVerdictKind::holds_within_tolerance);
  for (const auto& g : v.grid) EXPECT_NEAR(g.slack, g.rhs - g.lhs, 1e-15);
}

TEST(Factorization, SingleLetterCheckSeesPointwiseFailureOnlyWithoutEnvelope) {
  const auto ab = builtin_channel("appendix_b").channel;
  const double alpha = 3.4295167;
  const auto normal = conj3_check(ab, 0.5, alpha);
  EXPECT_NE(normal.verdict, ConjectureVerdictKind::violation_candidate);
  ConjectureOptions mutant;
  mutant.disable_envelope = true;
  const auto broken = conj3_check(ab, 0.5, alpha, mutant);
  EXPECT_LT(broken.slack, -1e-3);
  EXPECT_NE(broken.verdict, ConjectureVerdictKind::holds_within_tolerance);
}

TEST(TwoLetterIdentity, IdentityResidualVanishes) {
  Gen g(63);
  for (int t = 0; t < 10; ++t) {
    const auto a = g.channel(2, 2, 3), b = g.channel(2, 3, 2);
    const auto j = claim1_joint(g.joint(8, 2), 4, {0, 1, 1, 0}, a, b);
    EXPECT_LT(claim1_identity_check(j, g.uniform(1.0, 4.0)), 1e-9);
  }
}

TEST(TwoLetterIdentity, ConstantAuxiliaryGivesZero) {
  Gen g(64);
  const auto a = g.channel(2, 2, 2), b = g.channel(2, 2, 2);
  const auto j = claim1_joint(g.joint(2, 2), 1, {1}, a, b);
  EXPECT_LT(claim1_identity_check(j, 2.0), 1e-12);
}

TEST(TwoLetterIdentity, NonDeterministicSecondInputRejected) {
  std::vector<std::size_t> axes{2, 1, 2, 2, 2, 2, 2, 2};
  JointTable j(axes, std::vector<double>(128, 1.0 / 128));
  EXPECT_THROW(claim1_identity_check(j, 1.0), InputError);
}

TEST(Search, ReproducibleAndClean) {
  SearchConfig cfg;
  cfg.seed = 9;
  cfg.trials = 2;
  cfg.lambda_grid = {0.0, 1.0};
  const auto r1 = random_search(cfg);
  const auto r2 = random_search(cfg);
  ASSERT_EQ(r1.verdicts.size(), 4u);
  for (std::size_t i = 0; i < r1.verdicts.size(); ++i) EXPECT_EQ(r1.verdicts[i].slack, r2.verdicts[i].slack);
  EXPECT_EQ(r1.confirmed_violations, 0u);
  EXPECT_EQ(r1.min_slack, r2.min_slack);
}

TEST(Search, BrokenEnvelopeIsDetected) {
  SearchConfig cfg;
  cfg.check = "conj3";
  cfg.trials = 0;
  cfg.lambda_grid = {0.5};
  cfg.alpha_grid = {3.4295167};
  cfg.fixture_channels = {builtin_channel("appendix_b").channel};
  EXPECT_EQ(random_search(cfg).confirmed_violations, 0u);
  cfg.disable_envelope = true;
  EXPECT_GT(random_search(cfg).confirmed_violations, 0u);
}

TEST(MoreCapable, KnownCases) {
  const auto bssc = more_capable_test(bssc_channel(0.5));
  EXPECT_FALSE(bssc.more_capable);
  EXPECT_LT(bssc.min_gap, 0.0);
  const BroadcastChannel same(StochasticMatrix::from_rows({{0.8, 0.2}, {0.3, 0.7}}),
                              StochasticMatrix::from_rows({{0.8, 0.2}, {0.3, 0.7}}));
  const auto s = more_capable_test(same);
  EXPECT_TRUE(s.more_capable);
  EXPECT_NEAR(s.min_gap, 0.0, 1e-12);
  Gen g(65);
  const StochasticMatrix y(g.stochastic(2, 3));
  const StochasticMatrix degrade(g.stochastic(3, 2));
  const BroadcastChannel deg(y, StochasticMatrix(y.matrix() * degrade.matrix()));
  EXPECT_TRUE(more_capable_test(deg).more_capable);
}
