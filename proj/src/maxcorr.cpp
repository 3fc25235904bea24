#include "martonlab/maxcorr.hpp"

#include "martonlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace martonlab {
namespace {

constexpr std::size_t kMaxSweeps = 10000;
constexpr double kSweepTolerance = 1e-15;

struct Marginals {
  Eigen::VectorXd p_u;
  Eigen::VectorXd p_x;
};

Marginals checked_marginals(const Eigen::MatrixXd& joint) {
  if (joint.size() == 0) throw InputError("maximal correlation: empty joint");
  if (!joint.allFinite() || joint.minCoeff() < 0.0) throw InputError("maximal correlation: negative or non-finite entry");
  const double total = joint.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) throw InputError("maximal correlation: joint does not sum to one");
  Marginals m{joint.rowwise().sum() / total, joint.colwise().sum().transpose() / total};
  if (!(m.p_u.minCoeff() > 0.0) || !(m.p_x.minCoeff() > 0.0))
    throw InputError("maximal correlation: marginals must be strictly positive");
  return m;
}

Eigen::VectorXd start_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sin(2.3999632 * static_cast<double>(i) + 0.5) + 0.01 * static_cast<double>(i);
  return v;
}

// Centers f under w and scales to unit variance; false if f is constant.
bool standardize(Eigen::VectorXd& f, const Eigen::VectorXd& w) {
  f.array() -= w.dot(f);
  const double var = w.dot(f.cwiseProduct(f));
  if (!(var > 1e-28)) return false;
  f /= std::sqrt(var);
  return true;
}

double binary_entropy_nats(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log1p(-q);
  return h;
}

}  // namespace

double maximal_correlation_alternating(const Eigen::MatrixXd& joint_in, Eigen::VectorXd* l_out,
                                       Eigen::VectorXd* t_out, std::size_t* sweeps) {
  const Marginals m = checked_marginals(joint_in);
  const Eigen::MatrixXd joint = joint_in / joint_in.sum();
  Eigen::VectorXd l = start_vector(joint.cols());
  Eigen::VectorXd t = Eigen::VectorXd::Zero(joint.rows());
  double rho = 0.0;
  std::size_t k = 0;
  bool degenerate = !standardize(l, m.p_x);
  while (!degenerate && k < kMaxSweeps) {
    ++k;
    t = (joint * l).cwiseQuotient(m.p_u);
    if (!standardize(t, m.p_u)) {
      degenerate = true;
      break;
    }
    l = (joint.transpose() * t).cwiseQuotient(m.p_x);
    if (!standardize(l, m.p_x)) {
      degenerate = true;
      break;
    }
    const double next = t.dot(joint * l);
    const bool done = k > 2 && std::abs(next * next - rho * rho) < kSweepTolerance;
    rho = next;
    if (done) break;
  }
  if (sweeps) *sweeps = k;
  if (degenerate) {
    rho = 0.0;
    l.setZero();
    t.setZero();
    // Any standardized pair is a witness of zero correlation.
    if (joint.cols() > 1) {
      l = start_vector(joint.cols());
      standardize(l, m.p_x);
    }
    if (joint.rows() > 1) {
      t = start_vector(joint.rows());
      standardize(t, m.p_u);
    }
  }
  if (l_out) *l_out = l;
  if (t_out) *t_out = t;
  return std::clamp(rho * rho, 0.0, 1.0);
}

double maximal_correlation_power(const Eigen::MatrixXd& joint_in, std::size_t* sweeps) {
  const Marginals m = checked_marginals(joint_in);
  const Eigen::MatrixXd joint = joint_in / joint_in.sum();
  const Eigen::VectorXd su = m.p_u.cwiseSqrt();
  const Eigen::VectorXd sx = m.p_x.cwiseSqrt();
  const Eigen::MatrixXd b = su.cwiseInverse().asDiagonal() * joint * sx.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd gram = b.transpose() * b;
  Eigen::VectorXd v = start_vector(joint.cols());
  double lambda = 0.0;
  std::size_t k = 0;
  auto deflate = [&](Eigen::VectorXd& w) {
    w -= sx.dot(w) * sx;
    return w.norm();
  };
  double norm = deflate(v);
  if (norm > 1e-14) {
    v /= norm;
    while (k < kMaxSweeps) {
      ++k;
      Eigen::VectorXd w = gram * v;
      norm = deflate(w);
      if (!(norm > 1e-14)) {
        lambda = 0.0;
        break;
      }
      v = w / norm;
      const double next = v.dot(gram * v);
      const bool done = k > 2 && std::abs(next - lambda) < kSweepTolerance;
      lambda = next;
      if (done) break;
    }
  }
  if (sweeps) *sweeps = k;
  return std::clamp(lambda, 0.0, 1.0);
}

CorrelationResult maximal_correlation_sq(const Eigen::MatrixXd& joint) {
  CorrelationResult r;
  r.c_prime_alternating = maximal_correlation_alternating(joint, &r.witness_l, &r.witness_t, &r.alternating_sweeps);
  r.c_prime_power = maximal_correlation_power(joint, &r.power_sweeps);
  if (std::abs(r.c_prime_alternating - r.c_prime_power) > 1e-9)
    throw DegeneracyError("maximal correlation: alternating and power iterations disagree");
  r.c_prime = r.c_prime_alternating;
  return r;
}

CorrelationResult maximal_correlation_sq(const JointTable& joint) {
  if (joint.rank() != 2) throw InputError("maximal correlation needs a two-axis joint");
  return maximal_correlation_sq(joint.as_matrix());
}

double c_envelope_binary(const StochasticMatrix& p_u_given_x, const SimplexVector& p_x) {
  if (p_u_given_x.rows() != 2 || p_x.dim() != 2) throw SizeError("c_envelope_binary needs binary X");
  const Eigen::VectorXd r0 = p_u_given_x.matrix().row(0).transpose();
  const Eigen::VectorXd r1 = p_u_given_x.matrix().row(1).transpose();
  const Eigen::VectorXd delta = r1 - r0;
  const double p = p_x[1];
  // Extreme points of the simplex always lie on the envelope.
  if (p <= 0.0 || p >= 1.0) return 0.0;

  auto h_u = [&](double q) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < r0.size(); ++i) {
      const double m = (1.0 - q) * r0(i) + q * r1(i);
      if (m > kLogFloor) h -= m * std::log(m);
    }
    return h;
  };
  const double h_u_p = h_u(p);
  double dh_u_p = 0.0;
  for (Eigen::Index i = 0; i < r0.size(); ++i) {
    const double m = (1.0 - p) * r0(i) + p * r1(i);
    if (m > kLogFloor) dh_u_p -= delta(i) * std::log(m);
  }
  const double h_x_p = binary_entropy_nats(p);
  const double dh_x_p = std::log((1.0 - p) / p);

  auto touches = [&](double c) {
    const double slope = dh_u_p - c * dh_x_p;
    const double base = h_u_p - c * h_x_p;
    auto gap = [&](double q) { return h_u(q) - c * binary_entropy_nats(q) - base - slope * (q - p); };
    constexpr int kGrid = 2001;
    int worst = 0;
    double worst_gap = gap(0.0);
    for (int i = 1; i < kGrid; ++i) {
      const double g = gap(static_cast<double>(i) / (kGrid - 1));
      if (g < worst_gap) {
        worst_gap = g;
        worst = i;
      }
    }
    // Golden-section refinement in the cells around the worst grid point.
    double lo = std::max(0, worst - 1) / double(kGrid - 1);
    double hi = std::min(kGrid - 1, worst + 1) / double(kGrid - 1);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
      const double a = hi - ratio * (hi - lo);
      const double b = lo + ratio * (hi - lo);
      if (gap(a) < gap(b)) hi = b;
      else lo = a;
    }
    worst_gap = std::min(worst_gap, gap(0.5 * (lo + hi)));
    return worst_gap >= -1e-13;
  };

  if (touches(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (touches(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

XorBounds xor_bounds(const Eigen::Matrix2d& p) {
  if (p.minCoeff() < 0.0) throw InputError("xor_bounds: negative entry");
  const double d0 = p(0, 0) + p(1, 1);
  const double d1 = p(0, 1) + p(1, 0);
  if (!(d0 > 0.0) || !(d1 > 0.0)) throw InputError("xor_bounds: both values of X need positive mass");
  XorBounds b;
  b.a_xor = p(0, 0) / d0;
  b.b_xor = p(0, 1) / d1;
  b.bound_u = std::abs(b.a_xor - b.b_xor);
  b.bound_v = std::abs(b.a_xor + b.b_xor - 1.0);
  return b;
}

double convexity_second_derivative(double a, double b, double x) {
  if (!(x > 0.0 && x < 1.0)) throw InputError("convexity_second_derivative: x must lie in (0,1)");
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
    throw InputError("convexity_second_derivative: a and b must lie in [0,1]");
  const double gap = std::abs(a - b);
  if (gap == 0.0) return 0.0;
  const double m = a * x + b * (1.0 - x);
  return -gap * gap / (m * (1.0 - m)) + gap / (x * (1.0 - x));
}

std::pair<StochasticMatrix, SimplexVector> xor_auxiliary(const Eigen::Matrix2d& p_uv, bool v_side) {
  if (p_uv.minCoeff() < 0.0 || std::abs(p_uv.sum() - 1.0) > kRenormalizeTolerance)
    throw InputError("xor_auxiliary: p(u,v) must be a probability table");
  Eigen::Matrix2d joint = Eigen::Matrix2d::Zero();  // (x, aux)
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) joint(u ^ v, v_side ? v : u) += p_uv(u, v);
  const Eigen::Vector2d px = joint.rowwise().sum();
  Eigen::Matrix2d rows;
  for (int x = 0; x < 2; ++x) {
    if (px(x) > 0.0) rows.row(x) = joint.row(x) / px(x);
    else rows.row(x).setConstant(0.5);
  }
  return {StochasticMatrix(rows), SimplexVector(Eigen::VectorXd(px / px.sum()))};
}

XorMiCheck xor_mi_inequality_check(const Eigen::Matrix2d& p_uv, const BroadcastChannel& ch) {
  if (ch.x_size() != 2) throw SizeError("xor_mi_inequality_check needs a binary-input channel");
  const auto [u_given_x, px] = xor_auxiliary(p_uv, false);
  const auto [v_given_x, px_v] = xor_auxiliary(p_uv, true);
  (void)px_v;
  const Eigen::MatrixXd pxu = px.values().asDiagonal() * u_given_x.matrix();
  const Eigen::MatrixXd pxv = px.values().asDiagonal() * v_given_x.matrix();
  // p(u, y) = sum_x p(x, u) q(y|x)
  const Eigen::MatrixXd puy = pxu.transpose() * ch.y_chan().matrix();
  const Eigen::MatrixXd pvz = pxv.transpose() * ch.z_chan().matrix();
  XorMiCheck r;
  r.i_uy = std::max(0.0, mutual_information_raw(puy));
  r.i_vz = std::max(0.0, mutual_information_raw(pvz));
  r.i_xy = channel_mutual_information(px, ch.y_chan());
  r.i_xz = channel_mutual_information(px, ch.z_chan());
  r.lhs = r.i_uy + r.i_vz;
  r.rhs = std::max(r.i_xy, r.i_xz);
  const XorBounds b = xor_bounds(p_uv);
  r.chain = b.bound_u * r.i_xy + b.bound_v * r.i_xz;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

}  // namespace martonlab
