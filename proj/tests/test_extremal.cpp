#include "martonlab/bssc.hpp"
#include "martonlab/errors.hpp"
#include "martonlab/extremal.hpp"
#include "martonlab/tmax.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace martonlab;
using testing_support::Gen;

namespace {

double fd_curvature(const Eigen::MatrixXd& p, const DeterministicMap& f, const BroadcastChannel& ch,
                    const Eigen::MatrixXd& dir, double alpha, double h = 1e-4) {
  const double d2 = (objective_J_raw(p + h * dir, f, ch, alpha) - 2 * objective_J_raw(p, f, ch, alpha) +
                     objective_J_raw(p - h * dir, f, ch, alpha)) /
                    (h * h);
  return -std::log(2.0) * d2;
}

const DeterministicMap kAnd = DeterministicMap::from_rows({{0, 0}, {0, 1}}, 2);

}  // namespace

TEST(Extremal, AndPerturbationPreservesFibers) {
  Gen g(41);
  for (int t = 0; t < 20; ++t) {
    CouplingWithMap c(g.joint(2, 2, 0.05), kAnd);
    const auto pert = theorem2_perturbation(c, 0, 0);
    EXPECT_LT(fiber_sums(pert, kAnd).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Extremal, AndPerturbationNeedsPositiveRowAndColumn) {
  Eigen::MatrixXd p(2, 2);
  p << 0.4, 0.0, 0.3, 0.3;
  EXPECT_THROW(theorem2_perturbation(CouplingWithMap(p, kAnd), 0, 0), DegeneracyError);
}

TEST(Extremal, CurvatureFormsAgreeWithFiniteDifferences) {
  Gen g(42);
  for (int t = 0; t < 20; ++t) {
    const auto ch = g.channel(2, 2 + g.below(2), 2 + g.below(2), 0.02);
    const Eigen::MatrixXd p = g.joint(2, 2, 0.1);
    CouplingWithMap c(p, kAnd);
    const SimplexVector px(c.induced_px());
    const auto form = hessian_form(c, ch, px);
    const auto pert = theorem2_perturbation(c, 0, 0);
    const double q = form.evaluate(pert);
    const double e = curvature_expectation_form(c, ch, pert);
    const double fd = fd_curvature(p, kAnd, ch, pert.i_table, 1.0);
    EXPECT_NEAR(q, e, 1e-10 * std::max(1.0, std::abs(q)));
    EXPECT_NEAR(q, fd, 1e-3 * std::max(1e-3, std::abs(fd)));
  }
}

TEST(Extremal, ProjectedEigenvalueBoundsTheForm) {
  Gen g(43);
  const auto f = DeterministicMap::from_rows({{0, 1}, {1, 2}, {2, 0}}, 3);
  const auto ch = g.channel(3, 3, 2, 0.05);
  CouplingWithMap c(g.joint(3, 2, 0.1), f);
  const auto form = hessian_form(c, ch, SimplexVector(c.induced_px()));
  const double lam = form.min_eig_projected();
  const auto& basis = form.constraint_basis;
  ASSERT_GT(basis.cols(), 0);
  EXPECT_LT((basis.transpose() * basis - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).norm(), 1e-12);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd coef(basis.cols());
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef(i) = g.uniform(-1, 1);
    coef.normalize();
    const Eigen::VectorXd v = basis * coef;
    EXPECT_GE(v.dot(form.q_matrix * v), lam - 1e-10);
  }
}

TEST(Extremal, IdentityCouplingIsCertified) {
  const auto ch = BroadcastChannel(StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}),
                                   StochasticMatrix::from_rows({{0.7, 0.3}, {0.4, 0.6}}));
  const SimplexVector px{0.4, 0.6};
  Eigen::MatrixXd p(2, 1);
  p << 0.4, 0.6;
  const auto rep = certify_local_max(CouplingWithMap(p, DeterministicMap::identity_on_u(2)), ch, px);
  EXPECT_EQ(rep.verdict, Verdict::certified_local_max) << rep.reason;
}

TEST(Extremal, AndCouplingOnDenseChannelIsRefuted) {
  Gen g(44);
  for (int t = 0; t < 10; ++t) {
    const auto ch = g.channel(2, 2, 2, 0.05);
    CouplingWithMap c(g.joint(2, 2, 0.1), kAnd);
    const auto rep = certify_local_max(c, ch, SimplexVector(c.induced_px()));
    EXPECT_EQ(rep.verdict, Verdict::refuted);
    ASSERT_TRUE(rep.witness.has_value());
    EXPECT_FALSE(rep.and_patterns.empty());
  }
}

TEST(Extremal, DegenerateCouplingIsInconclusive) {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 1e-12, 0.2, 0.3 - 1e-12;
  CouplingWithMap c(p, kAnd);
  const auto rep = certify_local_max(c, bssc_channel(0.3), SimplexVector(c.induced_px()));
  EXPECT_EQ(rep.verdict, Verdict::inconclusive);
}

TEST(Extremal, ReduceMapNeverLowersObjective) {
  Gen g(45);
  for (int t = 0; t < 30; ++t) {
    const auto ch = g.channel(3, 2, 3);
    const Eigen::MatrixXd p = g.joint(3, 2);
    CouplingWithMap c(p, DeterministicMap::from_rows({{0, 1}, {0, 1}, {2, 0}}, 3));
    const auto red = reduce_map(c);
    EXPECT_EQ(red.u_size(), 2u);
    EXPECT_GE(objective_J_raw(red.p_uv(), red.f(), ch, 1.0), objective_J_raw(p, c.f(), ch, 1.0) - 1e-12);
    EXPECT_NEAR(red.induced_px()(2), c.induced_px()(2), 1e-15);
  }
}

TEST(Extremal, ReduceMapMergesColumnsLikeRows) {
  Gen g(47);
  const auto ch = g.channel(3, 2, 3);
  const Eigen::MatrixXd p = g.joint(3, 2);
  CouplingWithMap c(p, DeterministicMap::from_rows({{0, 1}, {0, 1}, {2, 0}}, 3));
  CouplingWithMap ct(p.transpose(), c.f().transposed());
  const auto a = reduce_map(c);
  const auto b = reduce_map(ct);
  EXPECT_NEAR(objective_J_raw(a.p_uv(), a.f(), ch, 1.0),
              objective_J_raw(b.p_uv(), b.f(), ch.swapped(), 1.0), 1e-12);
}

TEST(Extremal, ReducedMapIsFixedPoint) {
  Eigen::MatrixXd p(2, 2);
  p << 0.1, 0.2, 0.3, 0.4;
  CouplingWithMap c(p, kAnd);
  const auto r = reduce_map(c);
  EXPECT_EQ(r.f(), c.f());
  EXPECT_EQ(r.p_uv(), c.p_uv());
}

TEST(Extremal, StationarityResidualVanishesAtAscentOptimum) {
  const auto ch = bssc_channel(0.2);
  const SimplexVector px{0.5, 0.5};
  Eigen::MatrixXd p(2, 1);
  p << 0.5, 0.5;
  EXPECT_LT(stationarity_residuals(CouplingWithMap(p, DeterministicMap::identity_on_u(2)), ch, px), 1e-12);
}

TEST(FirstDerivativeInequality, SlackIsDifferenceOfSides) {
  Gen g(46);
  const auto ch = g.channel(2, 3, 2, 0.05);
  CouplingWithMap c(g.joint(2, 2, 0.1), kAnd);
  const auto r = lemma2_check(c, ch, 0, 1, 0);
  EXPECT_NEAR(r.slack, r.lhs - r.rhs, 1e-15);
  EXPECT_EQ(r.holds, r.slack >= -1e-9);
}

// -- AND case on the skew-symmetric channel -----------------------------------

TEST(AndCase, GFunctionShape) {
  EXPECT_EQ(g_function(0.0), 0.0);
  for (int k = 1; k <= 499; ++k) EXPECT_LT(g_function(k / 1000.0), 0.0) << k;
  EXPECT_NEAR(alpha_bound(0.5), 1.0, 1e-15);
}

TEST(AndCase, UnitWeightRootHasClosedForm) {
  // At alpha = 1 the second condition reads 1 + 4x = (1 + x)^2.
  EXPECT_NEAR(condition2_root(1.0), 2.0, 1e-9);
}

TEST(AndCase, ConstructedCouplingSatisfiesFirstOrderConditions) {
  for (double a : {1.0, 2.5, 6.0}) {
    const double x = condition2_root(a);
    const auto p = and_case_coupling(x, 0.4);
    const auto r = first_order_conditions(p, a);
    EXPECT_NEAR(r.res1, 0.0, 1e-12);
    EXPECT_NEAR(r.res2, 0.0, 1e-9);
    EXPECT_NEAR(r.x, x, 1e-12);
    CouplingWithMap c(p, kAnd);
    EXPECT_LT(stationarity_residuals(c, bssc_channel(0.5), SimplexVector(c.induced_px()), a), 1e-8);
  }
}

TEST(AndCase, HessianCoefficientsMatchExpectationForm) {
  for (double a : {1.0, 2.5}) {
    const auto p = and_case_coupling(condition2_root(a), 0.4);
    const auto hg = hessian_G(p, a);
    EXPECT_NEAR(hg.g00, hg.g00_simplified, 1e-10);
    const double i01 = 0.3, i10 = -0.7;
    Eigen::MatrixXd dir(2, 2);
    dir << -i01 - i10, i01, i10, 0.0;
    CouplingWithMap c(p, kAnd);
    const double e = curvature_expectation_form(c, bssc_channel(0.5), Perturbation{dir}, a);
    EXPECT_NEAR(hg.form(i01, i10), e, 1e-9);
    EXPECT_NEAR(hg.form(i01, i10), fd_curvature(p, kAnd, bssc_channel(0.5), dir, a, 1e-5), 1e-4);
  }
}

TEST(AndCase, FreeDirectionsSpanFiberNullSpace) {
  // I00 = -I01 - I10 and I11 = 0 keeps both fiber sums of the AND map at zero.
  const double i01 = 0.37, i10 = -0.21;
  Eigen::MatrixXd dir(2, 2);
  dir << -i01 - i10, i01, i10, 0.0;
  EXPECT_LT(fiber_sums(Perturbation{dir}, kAnd).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(fiber_constraint_basis(kAnd).cols(), 2);
}

TEST(AndCase, HessianRequiresFirstCondition) {
  Eigen::Matrix2d p;
  p << 0.25, 0.25, 0.25, 0.25;
  EXPECT_THROW(hessian_G(p, 1.0), InputError);
}

TEST(AndCase, ScanFindsNoAdmissibleWeight) {
  std::vector<double> alphas;
  for (int k = 1; k <= 50; ++k) alphas.push_back(1.0 + 7.0 * k / 50.0);
  const auto rep = and_case_scan(alphas);
  EXPECT_FALSE(rep.any_admissible);
  EXPECT_TRUE(rep.g_negative_on_grid);
  EXPECT_EQ(rep.rows.size(), 50u);
  const auto rows = g_scan(0.001);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().first, 0.0);
  EXPECT_EQ(rows.front().second, 0.0);
}
