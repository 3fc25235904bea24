#pragma once

// Local-maximum conditions for T(X) at a reduced coupling X = f(U, V):
// stationarity inside fibers, the first-derivative inequality, the AND-pattern
// perturbation and the second-derivative form on the fiber-preserving subspace.
// Quadratic forms here are in nats; objectives elsewhere are in bits.

#include "martonlab/maps.hpp"
#include "martonlab/probcore.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace martonlab {

/// Densities below this make the certificate inconclusive.
inline constexpr double kDensityThreshold = 1e-9;

/// Direction I(u,v) = p(u,v) L(u,v) in coupling space.
struct Perturbation {
  Eigen::MatrixXd i_table;
};

/// Total of the perturbation over each fiber f^{-1}(x).
Eigen::VectorXd fiber_sums(const Perturbation& pert, const DeterministicMap& f);

/// max over fibers of (max - min) of dJ/dp(u,v) on the support, in bits.
/// Throws InfeasibleError when a symbol with positive mass has an empty fiber.
double stationarity_residuals(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x,
                              double alpha = 1.0);

struct Lemma2Result {
  bool holds;
  double slack;  ///< lhs - rhs
  double lhs;
  double rhs;
  /// |slack| <= 1e-10: the case where p(y|x) must equal p(y|u1) and p(y|u2).
  bool equality;
};

/// sum_y p(y|x)^2 / p(u2,y)  >=  p(u1,v) / (p(u2,v) p(u1))  for f(u1,v) = f(u2,v) = x.
Lemma2Result lemma2_check(const CouplingWithMap& c, const BroadcastChannel& ch, std::size_t u1, std::size_t u2,
                          std::size_t v);

/// The row/column perturbation attached to an AND pattern at (u0, v0).
/// Throws DegeneracyError when row u0 or column v0 has a zero entry.
Perturbation theorem2_perturbation(const CouplingWithMap& c, std::size_t u0, std::size_t v0);

struct HessianForm {
  /// Symmetric form over cells u * |V| + v.
  Eigen::MatrixXd q_matrix;
  /// t_u[u](x1, x2) = sum_y q(y|x1) q(y|x2) / p(u,y); t_v likewise with Z.
  std::vector<Eigen::MatrixXd> t_u;
  std::vector<Eigen::MatrixXd> t_v;
  /// Orthonormal columns spanning {I : every fiber sum is zero}.
  Eigen::MatrixXd constraint_basis;

  double evaluate(const Perturbation& pert) const;
  /// Smallest eigenvalue of the form restricted to the constraint subspace;
  /// 0 when the subspace is trivial.
  double min_eig_projected() const;
  Eigen::VectorXd min_eigvector_projected() const;
};

/// Q(I) = sum I^2/p - sum_u sum_{v1,v2} T_u I I - sum_v sum_{u1,u2} T_v I I,
/// equal to -ln 2 times the second derivative of J (bits, alpha = 1) along I
/// for fiber-preserving I. Throws DegeneracyError on zero joint entries.
HessianForm hessian_form(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x);

/// (alpha - 1) E[E(L|U)^2] + E[L^2] - alpha E[E(L|U,Y)^2] - E[E(L|V,Z)^2] with
/// L = I / p, built from the explicit joint p(u, v, y, z). At alpha = 1 this is
/// the same number as HessianForm::evaluate, computed a different way.
double curvature_expectation_form(const CouplingWithMap& c, const BroadcastChannel& ch, const Perturbation& pert,
                                  double alpha = 1.0);

/// Basis of the fiber-sum-zero subspace for a map (orthonormal columns).
Eigen::MatrixXd fiber_constraint_basis(const DeterministicMap& f);

enum class Verdict { certified_local_max, refuted, inconclusive };
std::string verdict_name(Verdict v);

struct Lemma2Entry {
  char side;  ///< 'u': rows u1, u2 share column v;  'v': columns share a row
  std::size_t first;
  std::size_t second;
  std::size_t shared;
  double slack;
};

struct AndPatternFinding {
  AndPattern pattern;
  /// dJ along the perturbation (bits per unit step).
  double directional_derivative;
  /// Q of the perturbation (nats); negative means J curves upward along it.
  double curvature;
  bool refutes;
};

struct CertificateWitness {
  std::string kind;
  std::string description;
  Eigen::MatrixXd direction;
};

struct CertificateReport {
  double stationarity_residual = 0.0;
  std::vector<Lemma2Entry> lemma2_slacks;
  std::vector<AndPattern> and_patterns;
  std::vector<AndPatternFinding> and_findings;
  double min_eig_projected = 0.0;
  std::size_t constraint_dimension = 0;
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
  std::optional<CertificateWitness> witness;
};

/// Runs every check at alpha = 1. Certified iff residual < 1e-5, every slack
/// >= -1e-9 and the projected minimum eigenvalue >= -1e-8. Refutations always
/// carry a witness. Couplings below the density threshold are inconclusive.
CertificateReport certify_local_max(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x);

/// Merges duplicate rows, then duplicate columns, of f by pooling their mass.
CouplingWithMap reduce_map(const CouplingWithMap& c);

}  // namespace martonlab
