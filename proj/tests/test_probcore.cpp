#include "martonlab/errors.hpp"
#include "martonlab/probcore.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace martonlab;
using testing_support::Gen;

TEST(SimplexVector, RenormalizesSmallDrift) {
  SimplexVector p({0.5, 0.5 + 5e-10});
  EXPECT_NEAR(p.values().sum(), 1.0, 1e-15);
}

TEST(SimplexVector, RejectsBadInput) {
  EXPECT_THROW(SimplexVector({0.5, 0.6}), InputError);
  EXPECT_THROW(SimplexVector({1.2, -0.2}), InputError);
  EXPECT_THROW(SimplexVector(std::vector<double>{}), InputError);
  EXPECT_THROW(SimplexVector({NAN, 1.0}), InputError);
}

TEST(SimplexVector, Factories) {
  EXPECT_DOUBLE_EQ(SimplexVector::uniform(4)[2], 0.25);
  EXPECT_DOUBLE_EQ(SimplexVector::point_mass(3, 1)[1], 1.0);
  EXPECT_DOUBLE_EQ(SimplexVector::binary(0.3)[1], 0.3);
}

TEST(StochasticMatrix, RejectsNonStochasticRows) {
  EXPECT_THROW(StochasticMatrix::from_rows({{0.5, 0.5}, {0.3, 0.3}}), InputError);
  EXPECT_NO_THROW(StochasticMatrix::identity(3));
}

TEST(BroadcastChannel, RejectsMismatchedInputs) {
  EXPECT_THROW(BroadcastChannel(StochasticMatrix::identity(2), StochasticMatrix::identity(3)), InputError);
}

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(entropy(SimplexVector::uniform(8)), 3.0, 1e-14);
  EXPECT_NEAR(entropy(SimplexVector::point_mass(5, 2)), 0.0, 1e-15);
  EXPECT_NEAR(entropy(SimplexVector::binary(0.11)), testing_support::binary_entropy(0.11), 1e-14);
}

TEST(Entropy, TinyMassesCountAsZero) {
  const std::array<double, 2> m{1.0, 1e-16};
  EXPECT_EQ(entropy_bits(std::span<const double>(m)), 0.0);
}

TEST(MutualInformation, MatchesDirectSumOnRandomJoints) {
  Gen g(11);
  for (int t = 0; t < 200; ++t) {
    const auto j = g.joint(1 + g.below(4), 1 + g.below(4));
    EXPECT_NEAR(mutual_information(j), testing_support::oracle_mi(j), 1e-12);
  }
}

TEST(MutualInformation, IndependentIsZeroAndNeverNegative) {
  Gen g(12);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(g.simplex(3).data(), 3);
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(g.simplex(4).data(), 4);
    const Eigen::MatrixXd j = a * b.transpose();
    const double mi = mutual_information(j);
    EXPECT_GE(mi, 0.0);
    EXPECT_LT(mi, 1e-12);
  }
}

TEST(MutualInformation, ChannelFormMatchesJointForm) {
  Gen g(13);
  for (int t = 0; t < 50; ++t) {
    const StochasticMatrix w(g.stochastic(3, 2));
    const SimplexVector p(g.simplex(3));
    EXPECT_NEAR(channel_mutual_information(p, w), testing_support::oracle_channel_mi(p.values(), w.matrix()), 1e-12);
  }
}

TEST(JointTable, MarginalAndChainRule) {
  Gen g(14);
  for (int t = 0; t < 30; ++t) {
    const std::vector<std::size_t> axes{2, 3, 2};
    JointTable j(axes, g.simplex(12));
    const std::array<std::size_t, 1> a{0}, b{1}, c{2};
    const std::array<std::size_t, 2> bc{1, 2};
    const std::array<std::size_t, 0> none{};
    // I(A; B, C) = I(A; C) + I(A; B | C)
    const double lhs = conditional_mutual_information(j, a, bc, none);
    const double rhs = conditional_mutual_information(j, a, c, none) + conditional_mutual_information(j, a, b, c);
    EXPECT_NEAR(lhs, rhs, 1e-12);
    const std::array<std::size_t, 2> keep{2, 0};
    const auto m = j.marginal(keep);
    EXPECT_EQ(m.axes(), (std::vector<std::size_t>{2, 2}));
    const std::array<std::size_t, 2> idx{1, 0};
    double direct = 0.0;
    for (std::size_t v = 0; v < 3; ++v) {
      const std::array<std::size_t, 3> full{0, v, 1};
      direct += j.at(full);
    }
    EXPECT_NEAR(m.at(idx), direct, 1e-15);
  }
}

TEST(ProductChannel, InformationAddsOnProductLaws) {
  Gen g(15);
  for (int t = 0; t < 30; ++t) {
    const auto a = g.channel(2, 2, 3);
    const auto b = g.channel(2, 3, 2);
    const SimplexVector pa(g.simplex(2)), pb(g.simplex(2));
    const auto prod = product_channel(a, b);
    const auto p = product_law(pa, pb);
    EXPECT_NEAR(channel_mutual_information(p, prod.y_chan()),
                channel_mutual_information(pa, a.y_chan()) + channel_mutual_information(pb, b.y_chan()), 1e-12);
    const auto [m1, m2] = split_law(p, 2, 2);
    EXPECT_NEAR(m1[1], pa[1], 1e-15);
    EXPECT_NEAR(m2[0], pb[0], 1e-15);
  }
}

TEST(Erasure, ScalesInformationByOneMinusEps) {
  Gen g(16);
  for (int t = 0; t < 50; ++t) {
    const StochasticMatrix w(g.stochastic(3, 3));
    const SimplexVector p(g.simplex(3));
    const double eps = g.uniform();
    EXPECT_NEAR(channel_mutual_information(p, erasure_wrap(w, eps)), (1.0 - eps) * channel_mutual_information(p, w),
                1e-12);
  }
  EXPECT_THROW(erasure_wrap(StochasticMatrix::identity(2), 1.5), InputError);
}

TEST(Fixtures, BuiltinsLoad) {
  for (const auto& name : builtin_channel_names()) EXPECT_NO_THROW(builtin_channel(name)) << name;
  EXPECT_THROW(builtin_channel("nope"), InputError);
  const auto b = bssc_channel(0.5);
  EXPECT_DOUBLE_EQ(b.y_chan()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(b.z_chan()(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(b.y_chan()(1, 1), 1.0);
}
