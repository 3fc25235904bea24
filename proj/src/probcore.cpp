#include "martonlab/probcore.hpp"

#include "martonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace martonlab {
namespace {

Eigen::VectorXd validated_simplex(Eigen::VectorXd p, const char* what) {
  if (p.size() == 0) throw InputError(std::string(what) + ": empty probability vector");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i))) throw InputError(std::string(what) + ": non-finite entry");
    if (p(i) < 0.0) {
      if (p(i) < -kMassTolerance) {
        std::ostringstream msg;
        msg << what << ": negative entry " << p(i) << " at index " << i;
        throw InputError(msg.str());
      }
      p(i) = 0.0;
    }
  }
  const double total = p.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    std::ostringstream msg;
    msg.precision(12);
    msg << what << ": mass " << total << " is not 1 within " << kRenormalizeTolerance;
    throw InputError(msg.str());
  }
  return p / total;
}

double log2_term(double a) { return a > kLogFloor ? a * std::log2(a) : 0.0; }

double clamp_information(double value) {
  if (value < 0.0 && value >= -kClampTolerance) return 0.0;
  return value;
}

}  // namespace

// -- SimplexVector -------------------------------------------------------------

SimplexVector::SimplexVector(const Eigen::VectorXd& probs)
    : probs_(validated_simplex(probs, "SimplexVector")) {}

SimplexVector::SimplexVector(const std::vector<double>& probs)
    : SimplexVector(Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()))) {}

SimplexVector::SimplexVector(std::initializer_list<double> probs)
    : SimplexVector(std::vector<double>(probs)) {}

SimplexVector SimplexVector::uniform(std::size_t dim) {
  if (dim == 0) throw InputError("SimplexVector::uniform: dimension must be positive");
  return SimplexVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), 1.0 / static_cast<double>(dim)));
}

SimplexVector SimplexVector::point_mass(std::size_t dim, std::size_t index) {
  if (index >= dim) throw InputError("SimplexVector::point_mass: index out of range");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  p(static_cast<Eigen::Index>(index)) = 1.0;
  return SimplexVector(p);
}

SimplexVector SimplexVector::binary(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("SimplexVector::binary: q outside [0,1]");
  return SimplexVector({1.0 - q, q});
}

std::vector<double> SimplexVector::to_vector() const {
  return std::vector<double>(probs_.data(), probs_.data() + probs_.size());
}

// -- StochasticMatrix ----------------------------------------------------------

StochasticMatrix::StochasticMatrix(const Eigen::MatrixXd& entries) : entries_(entries) {
  if (entries_.rows() == 0 || entries_.cols() == 0) throw InputError("StochasticMatrix: empty matrix");
  for (Eigen::Index r = 0; r < entries_.rows(); ++r) {
    try {
      entries_.row(r) = validated_simplex(entries_.row(r).transpose(), "StochasticMatrix row").transpose();
    } catch (const InputError& e) {
      throw InputError(std::string(e.what()) + " (row " + std::to_string(r) + ")");
    }
  }
}

StochasticMatrix StochasticMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InputError("StochasticMatrix: no rows");
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw InputError("StochasticMatrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return StochasticMatrix(m);
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  return StochasticMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

SimplexVector StochasticMatrix::row(std::size_t in) const {
  return SimplexVector(Eigen::VectorXd(entries_.row(static_cast<Eigen::Index>(in)).transpose()));
}

std::vector<std::vector<double>> StochasticMatrix::to_rows() const {
  std::vector<std::vector<double>> out(rows(), std::vector<double>(cols()));
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c) out[r][c] = (*this)(r, c);
  return out;
}

// -- BroadcastChannel ------------------------------------------------------------

BroadcastChannel::BroadcastChannel(StochasticMatrix y_given_x, StochasticMatrix z_given_x)
    : y_(std::move(y_given_x)), z_(std::move(z_given_x)) {
  if (y_.rows() != z_.rows()) throw InputError("BroadcastChannel: y and z channels disagree on |X|");
}

bool BroadcastChannel::is_dense(double threshold) const {
  return y_.matrix().minCoeff() > threshold && z_.matrix().minCoeff() > threshold;
}

// -- JointTable ------------------------------------------------------------------

JointTable::JointTable(std::vector<std::size_t> axes, std::vector<double> entries)
    : axes_(std::move(axes)), entries_(std::move(entries)) {
  if (axes_.empty()) throw InputError("JointTable: no axes");
  std::size_t total = 1;
  for (auto a : axes_) {
    if (a == 0) throw InputError("JointTable: zero-sized axis");
    total *= a;
  }
  if (total != entries_.size()) throw InputError("JointTable: entry count does not match axes");
  Eigen::Map<Eigen::VectorXd> view(entries_.data(), static_cast<Eigen::Index>(entries_.size()));
  view = validated_simplex(view, "JointTable");
}

JointTable JointTable::from_matrix(const Eigen::MatrixXd& joint) {
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(joint.size()));
  for (Eigen::Index r = 0; r < joint.rows(); ++r)
    for (Eigen::Index c = 0; c < joint.cols(); ++c) entries.push_back(joint(r, c));
  return JointTable({static_cast<std::size_t>(joint.rows()), static_cast<std::size_t>(joint.cols())},
                    std::move(entries));
}

double JointTable::at(std::span<const std::size_t> index) const {
  if (index.size() != axes_.size()) throw InputError("JointTable::at: wrong index arity");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    if (index[k] >= axes_[k]) throw InputError("JointTable::at: index out of range");
    flat = flat * axes_[k] + index[k];
  }
  return entries_[flat];
}

JointTable JointTable::marginal(std::span<const std::size_t> keep) const {
  std::vector<bool> seen(axes_.size(), false);
  std::vector<std::size_t> out_axes;
  for (auto k : keep) {
    if (k >= axes_.size()) throw InputError("JointTable::marginal: axis out of range");
    if (seen[k]) throw InputError("JointTable::marginal: repeated axis");
    seen[k] = true;
    out_axes.push_back(axes_[k]);
  }
  if (keep.empty()) return JointTable({1}, {1.0});

  std::size_t out_total = 1;
  for (auto a : out_axes) out_total *= a;
  std::vector<double> out(out_total, 0.0);
  std::vector<std::size_t> idx(axes_.size(), 0);
  for (double mass : entries_) {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < keep.size(); ++j) flat = flat * out_axes[j] + idx[keep[j]];
    out[flat] += mass;
    for (std::size_t k = axes_.size(); k-- > 0;) {
      if (++idx[k] < axes_[k]) break;
      idx[k] = 0;
    }
  }
  return JointTable(std::move(out_axes), std::move(out));
}

Eigen::MatrixXd JointTable::as_matrix() const {
  if (axes_.size() != 2) throw InputError("JointTable::as_matrix: table is not 2-D");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(axes_[0]), static_cast<Eigen::Index>(axes_[1]));
  for (std::size_t r = 0; r < axes_[0]; ++r)
    for (std::size_t c = 0; c < axes_[1]; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entries_[r * axes_[1] + c];
  return m;
}

// -- Functionals -------------------------------------------------------------------

double entropy_bits(std::span<const double> masses) {
  double h = 0.0;
  for (double a : masses) h -= log2_term(a);
  return h;
}

double entropy_bits(const Eigen::MatrixXd& masses) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < masses.size(); ++i) h -= log2_term(masses.data()[i]);
  return h;
}

double mutual_information_raw(const Eigen::MatrixXd& joint) {
  const Eigen::VectorXd rows = joint.rowwise().sum();
  const Eigen::RowVectorXd cols = joint.colwise().sum();
  return entropy_bits(Eigen::MatrixXd(rows)) + entropy_bits(Eigen::MatrixXd(cols)) - entropy_bits(joint);
}

double entropy(const SimplexVector& p) { return entropy_bits(Eigen::MatrixXd(p.values())); }

double entropy(const JointTable& joint) { return entropy_bits(std::span<const double>(joint.entries())); }

double mutual_information(const JointTable& joint) {
  if (joint.rank() != 2) throw InputError("mutual_information: expected a 2-axis joint table");
  return clamp_information(mutual_information_raw(joint.as_matrix()));
}

double mutual_information(const Eigen::MatrixXd& joint) {
  return mutual_information(JointTable::from_matrix(joint));
}

double conditional_mutual_information(const JointTable& joint, std::span<const std::size_t> a_axes,
                                      std::span<const std::size_t> b_axes,
                                      std::span<const std::size_t> c_axes) {
  std::vector<int> owner(joint.rank(), -1);
  auto claim = [&](std::span<const std::size_t> group, int id) {
    for (auto k : group) {
      if (k >= joint.rank()) throw InputError("conditional_mutual_information: axis out of range");
      if (owner[k] != -1) throw InputError("conditional_mutual_information: axis groups overlap");
      owner[k] = id;
    }
  };
  claim(a_axes, 0);
  claim(b_axes, 1);
  claim(c_axes, 2);
  if (a_axes.empty() || b_axes.empty()) throw InputError("conditional_mutual_information: empty axis group");

  auto concat = [](std::span<const std::size_t> x, std::span<const std::size_t> y) {
    std::vector<std::size_t> out(x.begin(), x.end());
    out.insert(out.end(), y.begin(), y.end());
    return out;
  };
  const auto ac = concat(a_axes, c_axes);
  const auto bc = concat(b_axes, c_axes);
  const auto abc = concat(concat(a_axes, b_axes), c_axes);
  const std::vector<std::size_t> c(c_axes.begin(), c_axes.end());
  const double value = entropy(joint.marginal(ac)) + entropy(joint.marginal(bc)) -
                       entropy(joint.marginal(abc)) - (c.empty() ? 0.0 : entropy(joint.marginal(c)));
  return clamp_information(value);
}

SimplexVector push_forward(const SimplexVector& p, const StochasticMatrix& chan) {
  if (p.dim() != chan.rows()) throw InputError("push_forward: input dimension does not match channel");
  return SimplexVector(Eigen::VectorXd(chan.matrix().transpose() * p.values()));
}

Eigen::MatrixXd input_output_joint(const SimplexVector& p, const StochasticMatrix& chan) {
  if (p.dim() != chan.rows()) throw InputError("input_output_joint: input dimension does not match channel");
  return p.values().asDiagonal() * chan.matrix();
}

double channel_mutual_information(const SimplexVector& p, const StochasticMatrix& chan) {
  return clamp_information(mutual_information_raw(input_output_joint(p, chan)));
}

StochasticMatrix kronecker(const StochasticMatrix& a, const StochasticMatrix& b) {
  const Eigen::MatrixXd& A = a.matrix();
  const Eigen::MatrixXd& B = b.matrix();
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return StochasticMatrix(out);
}

BroadcastChannel product_channel(const BroadcastChannel& first, const BroadcastChannel& second) {
  return BroadcastChannel(kronecker(first.y_chan(), second.y_chan()), kronecker(first.z_chan(), second.z_chan()));
}

SimplexVector product_law(const SimplexVector& first, const SimplexVector& second) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(first.dim() * second.dim()));
  for (std::size_t i = 0; i < first.dim(); ++i)
    for (std::size_t j = 0; j < second.dim(); ++j)
      out(static_cast<Eigen::Index>(i * second.dim() + j)) = first[i] * second[j];
  return SimplexVector(out);
}

std::pair<SimplexVector, SimplexVector> split_law(const SimplexVector& joint, std::size_t first_size,
                                                  std::size_t second_size) {
  if (joint.dim() != first_size * second_size) throw InputError("split_law: dimension mismatch");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(first_size));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(second_size));
  for (std::size_t i = 0; i < first_size; ++i)
    for (std::size_t j = 0; j < second_size; ++j) {
      const double m = joint[i * second_size + j];
      a(static_cast<Eigen::Index>(i)) += m;
      b(static_cast<Eigen::Index>(j)) += m;
    }
  return {SimplexVector(a), SimplexVector(b)};
}

StochasticMatrix erasure_wrap(const StochasticMatrix& chan, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("erasure_wrap: eps outside [0,1]");
  Eigen::MatrixXd out(chan.matrix().rows(), chan.matrix().cols() + 1);
  out.leftCols(chan.matrix().cols()) = (1.0 - eps) * chan.matrix();
  out.col(chan.matrix().cols()).setConstant(eps);
  return StochasticMatrix(out);
}

// -- Fixtures ----------------------------------------------------------------------

BroadcastChannel bssc_channel(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("bssc_channel: crossover outside [0,1]");
  auto y = StochasticMatrix::from_rows({{1.0 - p, p}, {0.0, 1.0}});
  auto z = StochasticMatrix::from_rows({{1.0, 0.0}, {p, 1.0 - p}});
  return BroadcastChannel(y, z);
}

ChannelFixture builtin_channel(std::string_view name) {
  if (name == "bssc_half") return {"bssc_half", bssc_channel(0.5), std::nullopt};
  if (name == "blackwell") {
    // 0 -> (0,0), 1 -> (0,1), 2 -> (1,1)
    auto y = StochasticMatrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
    auto z = StochasticMatrix::from_rows({{1, 0}, {0, 1}, {0, 1}});
    return {"blackwell", BroadcastChannel(y, z), SimplexVector::uniform(3)};
  }
  if (name == "appendix_b") {
    auto y = StochasticMatrix::from_rows({{0.5, 0.5}, {0.0, 1.0}});
    auto z = StochasticMatrix::from_rows({{1.0, 0.0}, {0.1, 0.9}});
    return {"appendix_b", BroadcastChannel(y, z), SimplexVector({0.8, 0.2})};
  }
  throw InputError("unknown builtin channel '" + std::string(name) + "'");
}

std::vector<std::string> builtin_channel_names() { return {"bssc_half", "blackwell", "appendix_b"}; }

}  // namespace martonlab
