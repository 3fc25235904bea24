#pragma once

// Correlation coefficients attached to an auxiliary channel p(u|x): the squared
// maximal correlation c' and, for binary X, the envelope-match coefficient c.
// Also the bounds and the mutual-information inequality for X = U xor V.

#include "martonlab/probcore.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <utility>

namespace martonlab {

struct CorrelationResult {
  /// Squared maximal correlation, in [0, 1].
  double c_prime;
  /// Zero-mean, unit-variance function of X attaining it.
  Eigen::VectorXd witness_l;
  /// Zero-mean, unit-variance function of U attaining it.
  Eigen::VectorXd witness_t;
  /// The two independent computations; c_prime is the alternating one.
  double c_prime_alternating;
  double c_prime_power;
  std::size_t alternating_sweeps;
  std::size_t power_sweeps;
};

/// `joint` has rows indexed by U and columns by X. Throws InputError on a zero
/// marginal and DegeneracyError if the two computations differ by more than 1e-9.
CorrelationResult maximal_correlation_sq(const Eigen::MatrixXd& joint);
CorrelationResult maximal_correlation_sq(const JointTable& joint);

/// Alternating conditional expectations over L(X), T(U).
double maximal_correlation_alternating(const Eigen::MatrixXd& joint, Eigen::VectorXd* l_out = nullptr,
                                       Eigen::VectorXd* t_out = nullptr, std::size_t* sweeps = nullptr);
/// Second singular value squared of p(u,x)/sqrt(p(u)p(x)) by deflated power iteration.
double maximal_correlation_power(const Eigen::MatrixXd& joint, std::size_t* sweeps = nullptr);

/// Smallest c in [0, 1] with q -> H(U) - c H(X) touching its lower convex
/// envelope at p_x, for binary X. p_u_given_x is |X| x |U|.
double c_envelope_binary(const StochasticMatrix& p_u_given_x, const SimplexVector& p_x);

struct XorBounds {
  double a_xor;  ///< p00 / (p00 + p11)
  double b_xor;  ///< p01 / (p01 + p10)
  double bound_u;  ///< |a - b|
  double bound_v;  ///< |a + b - 1|
};

/// Throws InputError when p00 + p11 or p01 + p10 vanishes.
XorBounds xor_bounds(const Eigen::Matrix2d& p_uv);

/// d^2/dx^2 of h(a x + b (1 - x)) - |a - b| h(x), in nats. Throws InputError
/// outside x in (0, 1) or a, b in [0, 1].
double convexity_second_derivative(double a, double b, double x);

/// p(u|x) and p(x) for X = U xor V, with rows of the stochastic matrix on X.
/// Symbols of X without mass get the uniform row.
std::pair<StochasticMatrix, SimplexVector> xor_auxiliary(const Eigen::Matrix2d& p_uv, bool v_side = false);

struct XorMiCheck {
  double lhs;  ///< I(U;Y) + I(V;Z)
  double rhs;  ///< max(I(X;Y), I(X;Z))
  /// bound_u I(X;Y) + bound_v I(X;Z), which sits between lhs and rhs.
  double chain;
  double i_uy;
  double i_vz;
  double i_xy;
  double i_xz;
  bool holds;  ///< lhs <= rhs + 1e-9
};

XorMiCheck xor_mi_inequality_check(const Eigen::Matrix2d& p_uv, const BroadcastChannel& ch);

}  // namespace martonlab
