#pragma once

// Deterministic maps X = f(U, V) and the coupling p(u, v) that rides on them.

#include "martonlab/probcore.hpp"
#include "martonlab/random.hpp"

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace martonlab {

/// Total map f: U x V -> X stored row-major (u fastest-varying last).
class DeterministicMap {
 public:
  DeterministicMap(std::size_t u_size, std::size_t v_size, std::size_t x_size, std::vector<int> table);
  static DeterministicMap from_rows(const std::vector<std::vector<int>>& rows, std::size_t x_size);
  /// U = X with V constant.
  static DeterministicMap identity_on_u(std::size_t x_size);
  /// V = X with U constant.
  static DeterministicMap identity_on_v(std::size_t x_size);

  std::size_t u_size() const { return u_size_; }
  std::size_t v_size() const { return v_size_; }
  std::size_t x_size() const { return x_size_; }
  std::size_t cells() const { return table_.size(); }
  int operator()(std::size_t u, std::size_t v) const { return table_[u * v_size_ + v]; }
  const std::vector<int>& table() const { return table_; }

  /// Stable textual id, e.g. "2x2:00|01".
  std::string id() const;
  std::vector<std::vector<int>> rows() const;

  bool has_distinct_rows() const;
  bool has_distinct_columns() const;
  /// Cell indices u * |V| + v grouped by image symbol.
  std::vector<std::vector<std::size_t>> fibers() const;
  /// Every symbol with positive probability has a non-empty fiber.
  bool admissible_for(const SimplexVector& p_x) const;

  /// Lexicographically smallest table over relabelings of U and V.
  DeterministicMap canonical() const;
  DeterministicMap transposed() const;

  auto operator<=>(const DeterministicMap&) const = default;

 private:
  std::size_t u_size_;
  std::size_t v_size_;
  std::size_t x_size_;
  std::vector<int> table_;
};

/// A joint law p(u, v) together with the map carrying it onto X.
class CouplingWithMap {
 public:
  /// Validates shape, non-negativity, unit mass (renormalized within 1e-9)
  /// and the cardinality reduction |U|, |V| <= |X|.
  CouplingWithMap(Eigen::MatrixXd p_uv, DeterministicMap f);

  const Eigen::MatrixXd& p_uv() const { return p_uv_; }
  const DeterministicMap& f() const { return f_; }
  std::size_t u_size() const { return f_.u_size(); }
  std::size_t v_size() const { return f_.v_size(); }
  std::size_t x_size() const { return f_.x_size(); }

  Eigen::VectorXd induced_px() const;
  /// Joint p(u, x) and p(v, x) induced through f.
  Eigen::MatrixXd u_x_joint() const;
  Eigen::MatrixXd v_x_joint() const;
  /// Throws InputError unless the induced X-marginal matches p_x within tol.
  void require_marginal(const SimplexVector& p_x, double tol = 1e-9) const;

 private:
  Eigen::MatrixXd p_uv_;
  DeterministicMap f_;
};

struct AndPattern {
  int x0;
  std::size_t u0;
  std::size_t v0;
  auto operator<=>(const AndPattern&) const = default;
};

/// All (x0, u0, v0) with row u0 and column v0 of f constantly equal to x0.
std::vector<AndPattern> and_pattern_detect(const DeterministicMap& f);

struct EnumerationOptions {
  /// Keep maps with repeated rows (repeated columns are always dropped).
  bool allow_repeated_rows = false;
  /// Upper bound on row-combination candidates before SizeError.
  std::size_t candidate_cap = 200000;
};

/// Number of row combinations enumerate_maps would scan for these sizes.
double enumeration_candidates(std::size_t u_size, std::size_t v_size, std::size_t x_size,
                              bool allow_repeated_rows = false);

/// All maps with pairwise-distinct rows (unless allowed otherwise) and
/// pairwise-distinct columns, one representative per U/V relabeling class.
/// X labels are never permuted.
std::vector<DeterministicMap> enumerate_maps(std::size_t u_size, std::size_t v_size, std::size_t x_size,
                                             const EnumerationOptions& opts = {});

/// Random canonical maps with the same filters, for sizes too large to enumerate.
std::vector<DeterministicMap> sample_maps(std::size_t u_size, std::size_t v_size, std::size_t x_size,
                                          std::size_t count, Rng& rng, bool allow_repeated_rows = false);

}  // namespace martonlab
