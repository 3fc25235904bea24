#pragma once

// Probability core: distributions, channels, joints and the entropy and
// mutual-information functionals everything else is built from. All
// information quantities are in bits.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace martonlab {

inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;
/// Entries below this are exact zeros inside log terms.
inline constexpr double kLogFloor = 1e-15;
/// Tiny negative information values down to this are clamped to zero.
inline constexpr double kClampTolerance = 1e-12;

/// A finite probability vector. Construction validates and renormalizes
/// inputs whose mass is within 1e-9 of one; anything else is rejected.
class SimplexVector {
 public:
  explicit SimplexVector(const Eigen::VectorXd& probs);
  explicit SimplexVector(const std::vector<double>& probs);
  SimplexVector(std::initializer_list<double> probs);

  static SimplexVector uniform(std::size_t dim);
  static SimplexVector point_mass(std::size_t dim, std::size_t index);
  /// The binary law (1 - q, q).
  static SimplexVector binary(double q);

  std::size_t dim() const { return static_cast<std::size_t>(probs_.size()); }
  double operator[](std::size_t i) const { return probs_(static_cast<Eigen::Index>(i)); }
  const Eigen::VectorXd& values() const { return probs_; }
  std::vector<double> to_vector() const;

 private:
  Eigen::VectorXd probs_;
};

/// Row-stochastic matrix q(out | in); every row is a SimplexVector.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(const Eigen::MatrixXd& entries);
  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static StochasticMatrix identity(std::size_t n);

  std::size_t rows() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(entries_.cols()); }
  double operator()(std::size_t in, std::size_t out) const {
    return entries_(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  SimplexVector row(std::size_t in) const;
  std::vector<std::vector<double>> to_rows() const;

 private:
  Eigen::MatrixXd entries_;
};

/// The channel pair (q(y|x), q(z|x)). Only the marginals are modeled; every
/// quantity in this library depends on q(y,z|x) through them alone.
class BroadcastChannel {
 public:
  BroadcastChannel(StochasticMatrix y_given_x, StochasticMatrix z_given_x);

  std::size_t x_size() const { return y_.rows(); }
  std::size_t y_size() const { return y_.cols(); }
  std::size_t z_size() const { return z_.cols(); }
  const StochasticMatrix& y_chan() const { return y_; }
  const StochasticMatrix& z_chan() const { return z_; }

  /// The same channel with the receivers interchanged.
  BroadcastChannel swapped() const { return BroadcastChannel(z_, y_); }
  /// True when every transition probability exceeds `threshold`.
  bool is_dense(double threshold = 0.0) const;

 private:
  StochasticMatrix y_;
  StochasticMatrix z_;
};

/// Multi-axis joint law, row-major (last axis fastest).
class JointTable {
 public:
  JointTable(std::vector<std::size_t> axes, std::vector<double> entries);
  static JointTable from_matrix(const Eigen::MatrixXd& joint);

  std::size_t rank() const { return axes_.size(); }
  const std::vector<std::size_t>& axes() const { return axes_; }
  const std::vector<double>& entries() const { return entries_; }
  double at(std::span<const std::size_t> index) const;

  /// Marginal over `keep`, with the result's axes in the order given.
  JointTable marginal(std::span<const std::size_t> keep) const;
  Eigen::MatrixXd as_matrix() const;

 private:
  std::vector<std::size_t> axes_;
  std::vector<double> entries_;
};

// -- Raw helpers: no validation, used in inner loops. ------------------------

/// -sum a log2 a over entries above kLogFloor. No normalization is applied,
/// so this is also the smooth extension used for unnormalized tables.
double entropy_bits(std::span<const double> masses);
double entropy_bits(const Eigen::MatrixXd& masses);
/// H(A) + H(B) - H(A,B) for a 2-D joint matrix, without clamping.
double mutual_information_raw(const Eigen::MatrixXd& joint);

// -- Functionals -------------------------------------------------------------

double entropy(const SimplexVector& p);
double entropy(const JointTable& joint);
double mutual_information(const JointTable& joint);
/// Validating overload for a 2-D joint matrix.
double mutual_information(const Eigen::MatrixXd& joint);
double conditional_mutual_information(const JointTable& joint,
                                      std::span<const std::size_t> a_axes,
                                      std::span<const std::size_t> b_axes,
                                      std::span<const std::size_t> c_axes);

SimplexVector push_forward(const SimplexVector& p, const StochasticMatrix& chan);
/// The joint p(x, out) = p(x) q(out|x).
Eigen::MatrixXd input_output_joint(const SimplexVector& p, const StochasticMatrix& chan);
/// I(X; out) for input law p through chan.
double channel_mutual_information(const SimplexVector& p, const StochasticMatrix& chan);

StochasticMatrix kronecker(const StochasticMatrix& a, const StochasticMatrix& b);
/// Parallel non-interfering use of two channels; inputs indexed (x1, x2)
/// row-major, i.e. x = x1 * |X2| + x2, and likewise for outputs.
BroadcastChannel product_channel(const BroadcastChannel& first, const BroadcastChannel& second);
/// Independent product law p(x1) p(x2) in the same index order.
SimplexVector product_law(const SimplexVector& first, const SimplexVector& second);
/// Marginal laws of a joint input law on |X1| * |X2| symbols.
std::pair<SimplexVector, SimplexVector> split_law(const SimplexVector& joint, std::size_t first_size,
                                                  std::size_t second_size);

/// Appends an erasure symbol hit with probability eps.
StochasticMatrix erasure_wrap(const StochasticMatrix& chan, double eps);

// -- Fixtures ----------------------------------------------------------------

struct ChannelFixture {
  std::string name;
  BroadcastChannel channel;
  std::optional<SimplexVector> default_px;
};

/// Binary skew-symmetric channel with crossover p: the Y leg turns input 0
/// into 1 with probability p, the Z leg turns input 1 into 0 with probability p.
BroadcastChannel bssc_channel(double p);
/// Known names: "bssc_half", "blackwell", "appendix_b".
ChannelFixture builtin_channel(std::string_view name);
std::vector<std::string> builtin_channel_names();

}  // namespace martonlab
