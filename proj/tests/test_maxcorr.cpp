#include "martonlab/errors.hpp"
#include "martonlab/maxcorr.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace martonlab;
using testing_support::Gen;

TEST(MaxCorrelation, BinarySymmetricChannel) {
  Eigen::MatrixXd j(2, 2);
  j << 0.45, 0.05, 0.05, 0.45;
  EXPECT_NEAR(maximal_correlation_sq(j).c_prime, 0.64, 1e-9);
}

TEST(MaxCorrelation, IdentityAndIndependence) {
  EXPECT_NEAR(maximal_correlation_sq(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3) / 3.0)).c_prime, 1.0, 1e-9);
  Eigen::MatrixXd ind(2, 3);
  ind << 0.1, 0.15, 0.25, 0.1, 0.15, 0.25;
  EXPECT_NEAR(maximal_correlation_sq(ind).c_prime, 0.0, 1e-9);
}

TEST(MaxCorrelation, MethodsAgreeAndWitnessAttains) {
  Gen g(51);
  for (int t = 0; t < 40; ++t) {
    const auto j = g.joint(2 + g.below(3), 2 + g.below(3));
    const auto r = maximal_correlation_sq(j);
    EXPECT_NEAR(r.c_prime_alternating, r.c_prime_power, 1e-9);
    EXPECT_GE(r.c_prime, 0.0);
    EXPECT_LE(r.c_prime, 1.0);
    // E[T(U) L(X)]^2 with unit-variance witnesses reproduces c'.
    const Eigen::VectorXd pu = j.rowwise().sum();
    const Eigen::VectorXd px = j.colwise().sum().transpose();
    EXPECT_NEAR(pu.dot(r.witness_t), 0.0, 1e-9);
    EXPECT_NEAR(px.dot(r.witness_l), 0.0, 1e-9);
    EXPECT_NEAR(pu.dot(r.witness_t.cwiseAbs2()), 1.0, 1e-9);
    const double corr = r.witness_t.dot(j * r.witness_l);
    EXPECT_NEAR(corr * corr, r.c_prime, 1e-8);
  }
}

TEST(MaxCorrelation, MatchesDenseSingularValues) {
  Gen g(56);
  for (int t = 0; t < 20; ++t) {
    const auto j = g.joint(2 + g.below(3), 2 + g.below(3));
    const Eigen::VectorXd pu = j.rowwise().sum();
    const Eigen::VectorXd px = j.colwise().sum().transpose();
    const Eigen::MatrixXd b = pu.cwiseSqrt().cwiseInverse().asDiagonal() * j * px.cwiseSqrt().cwiseInverse().asDiagonal();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    const double s2 = svd.singularValues()(1);
    EXPECT_NEAR(maximal_correlation_sq(j).c_prime, s2 * s2, 1e-10);
  }
}

TEST(MaxCorrelation, ZeroMarginalRejected) {
  Eigen::MatrixXd j(2, 2);
  j << 0.5, 0.5, 0.0, 0.0;
  EXPECT_THROW(maximal_correlation_sq(j), InputError);
}

TEST(EnvelopeCoefficient, Extremes) {
  EXPECT_NEAR(c_envelope_binary(StochasticMatrix::identity(2), SimplexVector{0.3, 0.7}), 1.0, 1e-9);
  const auto indep = StochasticMatrix::from_rows({{0.2, 0.8}, {0.2, 0.8}});
  EXPECT_NEAR(c_envelope_binary(indep, SimplexVector{0.3, 0.7}), 0.0, 1e-9);
  EXPECT_EQ(c_envelope_binary(StochasticMatrix::identity(2), SimplexVector{1.0, 0.0}), 0.0);
  EXPECT_THROW(c_envelope_binary(StochasticMatrix::identity(3), SimplexVector::uniform(3)), SizeError);
}

TEST(EnvelopeCoefficient, XorAuxiliaryWithinBound) {
  Gen g(52);
  for (int t = 0; t < 15; ++t) {
    const Eigen::Matrix2d p = g.joint(2, 2, 0.05);
    const auto [w, px] = xor_auxiliary(p);
    EXPECT_LE(c_envelope_binary(w, px), xor_bounds(p).bound_u + 1e-6);
  }
}

TEST(Xor, BoundsSumToAtMostOne) {
  Gen g(53);
  for (int t = 0; t < 2000; ++t) {
    const Eigen::Matrix2d p = g.joint(2, 2);
    const auto b = xor_bounds(p);
    EXPECT_LE(b.bound_u + b.bound_v, 1.0 + 1e-15);
  }
  Eigen::Matrix2d bad;
  bad << 0.0, 0.5, 0.5, 0.0;
  EXPECT_THROW(xor_bounds(bad), InputError);
}

TEST(Xor, ConvexityOnGrid) {
  for (int i = 0; i <= 10; ++i)
    for (int k = 0; k <= 10; ++k)
      for (int m = 1; m < 10; ++m) EXPECT_GE(convexity_second_derivative(i / 10.0, k / 10.0, m / 10.0), -1e-12);
  EXPECT_THROW(convexity_second_derivative(0.5, 0.5, 0.0), InputError);
  EXPECT_THROW(convexity_second_derivative(1.5, 0.5, 0.5), InputError);
}

TEST(Xor, AuxiliaryChannelMatchesCoupling) {
  Gen g(54);
  const Eigen::Matrix2d p = g.joint(2, 2);
  const auto [w, px] = xor_auxiliary(p);
  EXPECT_NEAR(px[0], p(0, 0) + p(1, 1), 1e-15);
  EXPECT_NEAR(w(0, 0), p(0, 0) / (p(0, 0) + p(1, 1)), 1e-15);
}

TEST(Xor, InformationInequalityHolds) {
  Gen g(55);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Matrix2d p = g.joint(2, 2);
    const auto ch = g.channel(2, 2 + g.below(2), 2 + g.below(2));
    const auto r = xor_mi_inequality_check(p, ch);
    EXPECT_TRUE(r.holds);
    EXPECT_LE(r.lhs, r.chain + 1e-9);
    EXPECT_LE(r.chain, r.rhs + 1e-9);
    EXPECT_LE(r.i_uy, xor_bounds(p).bound_u * r.i_xy + 1e-9);
  }
}
