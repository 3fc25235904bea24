#include "martonlab/extremal.hpp"

#include "martonlab/errors.hpp"
#include "martonlab/tmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace martonlab {
namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

void require_fibers(const DeterministicMap& f, const SimplexVector& p_x) {
  if (p_x.dim() != f.x_size()) throw InputError("input law and map disagree on |X|");
  const auto fib = f.fibers();
  for (std::size_t x = 0; x < fib.size(); ++x)
    if (p_x[x] > 0.0 && fib[x].empty())
      throw InfeasibleError("map " + f.id() + " has an empty fiber over a symbol with positive probability");
}

CouplingWithMap transpose(const CouplingWithMap& c) {
  return CouplingWithMap(c.p_uv().transpose(), c.f().transposed());
}

Eigen::MatrixXd as_matrix(const Eigen::VectorXd& flat, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd m(ix(rows), ix(cols));
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < cols; ++v) m(ix(u), ix(v)) = flat(ix(u * cols + v));
  return m;
}

Eigen::VectorXd as_flat(const Eigen::MatrixXd& m) {
  Eigen::VectorXd flat(m.size());
  for (Idx u = 0; u < m.rows(); ++u)
    for (Idx v = 0; v < m.cols(); ++v) flat(u * m.cols() + v) = m(u, v);
  return flat;
}

// T(x1, x2) = sum_y q(y|x1) q(y|x2) / joint(row, y) for one row of a joint.
Eigen::MatrixXd t_coefficients(const Eigen::MatrixXd& chan, const Eigen::RowVectorXd& joint_row) {
  const Idx n = chan.rows();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Idx a = 0; a < n; ++a)
    for (Idx b = 0; b < n; ++b)
      for (Idx y = 0; y < chan.cols(); ++y) {
        const double num = chan(a, y) * chan(b, y);
        if (num > 0.0) t(a, b) += num / joint_row(y);
      }
  return t;
}

}  // namespace

Eigen::VectorXd fiber_sums(const Perturbation& pert, const DeterministicMap& f) {
  if (static_cast<std::size_t>(pert.i_table.rows()) != f.u_size() ||
      static_cast<std::size_t>(pert.i_table.cols()) != f.v_size())
    throw InputError("perturbation shape does not match the map");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(ix(f.x_size()));
  for (std::size_t u = 0; u < f.u_size(); ++u)
    for (std::size_t v = 0; v < f.v_size(); ++v) sums(f(u, v)) += pert.i_table(ix(u), ix(v));
  return sums;
}

double stationarity_residuals(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x,
                              double alpha) {
  require_fibers(c.f(), p_x);
  const Eigen::MatrixXd g = gradient_J(c, ch, p_x, alpha);
  double residual = 0.0;
  for (const auto& cells : c.f().fibers()) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto cell : cells) {
      const double d = g(ix(cell / c.v_size()), ix(cell % c.v_size()));
      if (std::isnan(d)) continue;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (hi >= lo) residual = std::max(residual, hi - lo);
  }
  return residual;
}

Lemma2Result lemma2_check(const CouplingWithMap& c, const BroadcastChannel& ch, std::size_t u1, std::size_t u2,
                          std::size_t v) {
  const auto& f = c.f();
  if (u1 >= f.u_size() || u2 >= f.u_size() || v >= f.v_size()) throw InputError("lemma2_check: index out of range");
  if (u1 == u2) throw InputError("lemma2_check: u1 and u2 must differ");
  if (f(u1, v) != f(u2, v)) throw InputError("lemma2_check: f(u1, v) and f(u2, v) differ");
  if (ch.x_size() != f.x_size()) throw InputError("lemma2_check: channel and map disagree on |X|");
  const auto x = static_cast<Idx>(f(u1, v));
  const Eigen::MatrixXd& qy = ch.y_chan().matrix();
  const Eigen::MatrixXd& p = c.p_uv();

  Eigen::RowVectorXd p_u2y = Eigen::RowVectorXd::Zero(qy.cols());
  for (std::size_t w = 0; w < f.v_size(); ++w) p_u2y += p(ix(u2), ix(w)) * qy.row(f(u2, w));
  const double p_u1 = p.row(ix(u1)).sum();
  if (!(p(ix(u2), ix(v)) > 0.0) || !(p_u1 > 0.0)) throw DegeneracyError("lemma2_check: zero mass in the inequality");

  double lhs = 0.0;
  for (Idx y = 0; y < qy.cols(); ++y)
    if (qy(x, y) > 0.0) lhs += qy(x, y) * qy(x, y) / p_u2y(y);
  const double rhs = p(ix(u1), ix(v)) / (p(ix(u2), ix(v)) * p_u1);
  const double slack = lhs - rhs;
  return {slack >= -1e-9, slack, lhs, rhs, std::abs(slack) <= 1e-10};
}

Perturbation theorem2_perturbation(const CouplingWithMap& c, std::size_t u0, std::size_t v0) {
  const Eigen::MatrixXd& p = c.p_uv();
  if (u0 >= c.u_size() || v0 >= c.v_size()) throw InputError("theorem2_perturbation: index out of range");
  if (p.row(ix(u0)).minCoeff() <= 0.0 || p.col(ix(v0)).minCoeff() <= 0.0)
    throw DegeneracyError("theorem2_perturbation: row u0 and column v0 must be strictly positive");
  const double p_u0 = p.row(ix(u0)).sum();
  const double p_v0 = p.col(ix(v0)).sum();
  Eigen::MatrixXd i = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  for (Idx v = 0; v < p.cols(); ++v)
    if (v != ix(v0)) i(ix(u0), v) = p(ix(u0), v) * p_v0;
  for (Idx u = 0; u < p.rows(); ++u)
    if (u != ix(u0)) i(u, ix(v0)) = -p(u, ix(v0)) * p_u0;
  i(ix(u0), ix(v0)) = p(ix(u0), ix(v0)) * (p_v0 - p_u0);
  return {i};
}

Eigen::MatrixXd fiber_constraint_basis(const DeterministicMap& f) {
  std::vector<Eigen::VectorXd> columns;
  for (const auto& cells : f.fibers()) {
    // Helmert contrasts within the fiber.
    for (std::size_t j = 1; j < cells.size(); ++j) {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(ix(f.cells()));
      const double scale = 1.0 / std::sqrt(static_cast<double>(j * (j + 1)));
      for (std::size_t k = 0; k < j; ++k) col(ix(cells[k])) = scale;
      col(ix(cells[j])) = -static_cast<double>(j) * scale;
      columns.push_back(std::move(col));
    }
  }
  Eigen::MatrixXd basis(ix(f.cells()), ix(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) basis.col(ix(k)) = columns[k];
  return basis;
}

double HessianForm::evaluate(const Perturbation& pert) const {
  const Eigen::VectorXd flat = as_flat(pert.i_table);
  if (flat.size() != q_matrix.rows()) throw InputError("perturbation shape does not match the form");
  return flat.dot(q_matrix * flat);
}

double HessianForm::min_eig_projected() const {
  if (constraint_basis.cols() == 0) return 0.0;
  const Eigen::MatrixXd reduced = constraint_basis.transpose() * q_matrix * constraint_basis;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (reduced + reduced.transpose())).eigenvalues()(0);
}

Eigen::VectorXd HessianForm::min_eigvector_projected() const {
  if (constraint_basis.cols() == 0) return Eigen::VectorXd::Zero(q_matrix.rows());
  const Eigen::MatrixXd reduced = constraint_basis.transpose() * q_matrix * constraint_basis;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (reduced + reduced.transpose()));
  return constraint_basis * eig.eigenvectors().col(0);
}

HessianForm hessian_form(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x) {
  require_fibers(c.f(), p_x);
  c.require_marginal(p_x);
  if (ch.x_size() != c.x_size()) throw InputError("hessian_form: channel and map disagree on |X|");
  const Eigen::MatrixXd& p = c.p_uv();
  if (p.minCoeff() <= 0.0) throw DegeneracyError("hessian_form: p(u,v) must be strictly positive");
  const auto& f = c.f();
  const std::size_t nu = f.u_size(), nv = f.v_size();
  const Eigen::MatrixXd& qy = ch.y_chan().matrix();
  const Eigen::MatrixXd& qz = ch.z_chan().matrix();

  HessianForm form;
  form.t_u.reserve(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(qy.cols());
    for (std::size_t v = 0; v < nv; ++v) row += p(ix(u), ix(v)) * qy.row(f(u, v));
    form.t_u.push_back(t_coefficients(qy, row));
  }
  form.t_v.reserve(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(qz.cols());
    for (std::size_t u = 0; u < nu; ++u) row += p(ix(u), ix(v)) * qz.row(f(u, v));
    form.t_v.push_back(t_coefficients(qz, row));
  }

  const Idx cells = ix(nu * nv);
  form.q_matrix = Eigen::MatrixXd::Zero(cells, cells);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t v = 0; v < nv; ++v) form.q_matrix(ix(u * nv + v), ix(u * nv + v)) += 1.0 / p(ix(u), ix(v));
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t v1 = 0; v1 < nv; ++v1)
      for (std::size_t v2 = 0; v2 < nv; ++v2)
        form.q_matrix(ix(u * nv + v1), ix(u * nv + v2)) -= form.t_u[u](f(u, v1), f(u, v2));
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t u1 = 0; u1 < nu; ++u1)
      for (std::size_t u2 = 0; u2 < nu; ++u2)
        form.q_matrix(ix(u1 * nv + v), ix(u2 * nv + v)) -= form.t_v[v](f(u1, v), f(u2, v));
  form.constraint_basis = fiber_constraint_basis(f);
  return form;
}

double curvature_expectation_form(const CouplingWithMap& c, const BroadcastChannel& ch, const Perturbation& pert,
                                  double alpha) {
  const auto& f = c.f();
  const Eigen::MatrixXd& p = c.p_uv();
  const Eigen::MatrixXd& qy = ch.y_chan().matrix();
  const Eigen::MatrixXd& qz = ch.z_chan().matrix();
  const Idx nu = p.rows(), nv = p.cols(), ny = qy.cols(), nz = qz.cols();
  if (pert.i_table.rows() != nu || pert.i_table.cols() != nv) throw InputError("perturbation shape does not match");

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nu, nv);
  for (Idx u = 0; u < nu; ++u)
    for (Idx v = 0; v < nv; ++v) {
      if (pert.i_table(u, v) == 0.0) continue;
      if (!(p(u, v) > 0.0)) throw DegeneracyError("perturbation touches a zero-mass cell");
      L(u, v) = pert.i_table(u, v) / p(u, v);
    }

  // Explicit four-way joint p(u, v, y, z) = p(u,v) q(y|x) q(z|x).
  auto joint = [&](Idx u, Idx v, Idx y, Idx z) {
    const Idx x = f(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    return p(u, v) * qy(x, y) * qz(x, z);
  };
  double e_l2 = 0.0;
  Eigen::VectorXd num_u = Eigen::VectorXd::Zero(nu), den_u = Eigen::VectorXd::Zero(nu);
  Eigen::MatrixXd num_uy = Eigen::MatrixXd::Zero(nu, ny), den_uy = Eigen::MatrixXd::Zero(nu, ny);
  Eigen::MatrixXd num_vz = Eigen::MatrixXd::Zero(nv, nz), den_vz = Eigen::MatrixXd::Zero(nv, nz);
  for (Idx u = 0; u < nu; ++u)
    for (Idx v = 0; v < nv; ++v)
      for (Idx y = 0; y < ny; ++y)
        for (Idx z = 0; z < nz; ++z) {
          const double m = joint(u, v, y, z);
          const double l = L(u, v);
          e_l2 += m * l * l;
          num_u(u) += m * l;
          den_u(u) += m;
          num_uy(u, y) += m * l;
          den_uy(u, y) += m;
          num_vz(v, z) += m * l;
          den_vz(v, z) += m;
        }
  auto second_moment = [](const auto& num, const auto& den) {
    double s = 0.0;
    for (Idx i = 0; i < num.size(); ++i)
      if (den(i) > 0.0) s += num(i) * num(i) / den(i);
    return s;
  };
  const Eigen::VectorXd nuy = Eigen::Map<const Eigen::VectorXd>(num_uy.data(), num_uy.size());
  const Eigen::VectorXd duy = Eigen::Map<const Eigen::VectorXd>(den_uy.data(), den_uy.size());
  const Eigen::VectorXd nvz = Eigen::Map<const Eigen::VectorXd>(num_vz.data(), num_vz.size());
  const Eigen::VectorXd dvz = Eigen::Map<const Eigen::VectorXd>(den_vz.data(), den_vz.size());
  return (alpha - 1.0) * second_moment(num_u, den_u) + e_l2 - alpha * second_moment(nuy, duy) -
         second_moment(nvz, dvz);
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::certified_local_max:
      return "certified_local_max";
    case Verdict::refuted:
      return "refuted";
    case Verdict::inconclusive:
      break;
  }
  return "inconclusive";
}

CertificateReport certify_local_max(const CouplingWithMap& c, const BroadcastChannel& ch, const SimplexVector& p_x) {
  require_fibers(c.f(), p_x);
  c.require_marginal(p_x);
  if (ch.x_size() != c.x_size()) throw InputError("certify_local_max: channel and map disagree on |X|");
  const auto& f = c.f();
  const Eigen::MatrixXd& p = c.p_uv();

  CertificateReport report;
  report.and_patterns = and_pattern_detect(f);
  if (p.minCoeff() < kDensityThreshold) {
    report.verdict = Verdict::inconclusive;
    report.reason = "p(u,v) has entries below the density threshold 1e-9";
    return report;
  }

  const Eigen::MatrixXd grad = gradient_J(c, ch, p_x, 1.0);
  report.stationarity_residual = stationarity_residuals(c, ch, p_x, 1.0);
  HessianForm form;
  try {
    form = hessian_form(c, ch, p_x);
  } catch (const DegeneracyError& e) {
    report.verdict = Verdict::inconclusive;
    report.reason = e.what();
    return report;
  }
  report.constraint_dimension = static_cast<std::size_t>(form.constraint_basis.cols());
  report.min_eig_projected = form.min_eig_projected();

  for (const auto& pat : report.and_patterns) {
    const Perturbation pert = theorem2_perturbation(c, pat.u0, pat.v0);
    const double derivative = (grad.array() * pert.i_table.array()).sum();
    const double curvature = form.evaluate(pert);
    const double l1 = pert.i_table.cwiseAbs().sum();
    const bool refutes = std::abs(derivative) > 1e-5 * l1 || curvature < -1e-10 * pert.i_table.squaredNorm();
    report.and_findings.push_back({pat, derivative, curvature, refutes});
  }

  for (std::size_t v = 0; v < f.v_size(); ++v)
    for (std::size_t u1 = 0; u1 < f.u_size(); ++u1)
      for (std::size_t u2 = 0; u2 < f.u_size(); ++u2)
        if (u1 != u2 && f(u1, v) == f(u2, v))
          report.lemma2_slacks.push_back({'u', u1, u2, v, lemma2_check(c, ch, u1, u2, v).slack});
  if (f.v_size() > 1) {
    const CouplingWithMap ct = transpose(c);
    const BroadcastChannel sw = ch.swapped();
    for (std::size_t u = 0; u < f.u_size(); ++u)
      for (std::size_t v1 = 0; v1 < f.v_size(); ++v1)
        for (std::size_t v2 = 0; v2 < f.v_size(); ++v2)
          if (v1 != v2 && f(u, v1) == f(u, v2))
            report.lemma2_slacks.push_back({'v', v1, v2, u, lemma2_check(ct, sw, v1, v2, u).slack});
  }

  std::ostringstream why;
  for (const auto& finding : report.and_findings) {
    if (!finding.refutes) continue;
    Perturbation pert = theorem2_perturbation(c, finding.pattern.u0, finding.pattern.v0);
    const bool first_order = std::abs(finding.directional_derivative) > 1e-5 * pert.i_table.cwiseAbs().sum();
    if (first_order && finding.directional_derivative < 0.0) pert.i_table = -pert.i_table;
    why << "AND pattern (x0=" << finding.pattern.x0 << ", u0=" << finding.pattern.u0 << ", v0=" << finding.pattern.v0
        << "): " << (first_order ? "objective has nonzero slope along the row/column perturbation"
                                 : "objective curves upward along the row/column perturbation");
    report.verdict = Verdict::refuted;
    report.reason = why.str();
    report.witness = CertificateWitness{"and_perturbation", report.reason, pert.i_table};
    return report;
  }

  if (report.stationarity_residual >= 1e-5) {
    const Eigen::MatrixXd& B = form.constraint_basis;
    const Eigen::VectorXd dir = B * (B.transpose() * as_flat(grad));
    report.verdict = Verdict::refuted;
    report.reason = "not stationary: partial derivatives differ within a fiber";
    report.witness = CertificateWitness{"ascent_direction", "objective increases along this fiber-preserving direction",
                                        as_matrix(dir, f.u_size(), f.v_size())};
    return report;
  }

  for (const auto& entry : report.lemma2_slacks) {
    if (entry.slack >= -1e-9) continue;
    Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(p.rows(), p.cols());
    if (entry.side == 'u') {
      dir(ix(entry.first), ix(entry.shared)) = 1.0;
      dir(ix(entry.second), ix(entry.shared)) = -1.0;
    } else {
      dir(ix(entry.shared), ix(entry.first)) = 1.0;
      dir(ix(entry.shared), ix(entry.second)) = -1.0;
    }
    why << "first-derivative inequality fails for " << (entry.side == 'u' ? "rows " : "columns ") << entry.first
        << ", " << entry.second << " at " << (entry.side == 'u' ? "column " : "row ") << entry.shared;
    report.verdict = Verdict::refuted;
    report.reason = why.str();
    report.witness = CertificateWitness{"first_derivative_inequality", report.reason, dir};
    return report;
  }

  if (report.min_eig_projected < -1e-8) {
    report.verdict = Verdict::refuted;
    report.reason = "negative curvature of -J on the fiber-preserving subspace";
    report.witness = CertificateWitness{"negative_curvature", "objective curves upward along this direction",
                                        as_matrix(form.min_eigvector_projected(), f.u_size(), f.v_size())};
    return report;
  }

  report.verdict = Verdict::certified_local_max;
  report.reason = "stationary, first-derivative inequalities hold, projected form is positive semidefinite";
  return report;
}

CouplingWithMap reduce_map(const CouplingWithMap& c) {
  Eigen::MatrixXd p = c.p_uv();
  auto rows = c.f().rows();
  const std::size_t n = c.x_size();

  auto merge_rows = [](Eigen::MatrixXd& mass, std::vector<std::vector<int>>& table) {
    for (std::size_t a = 0; a < table.size(); ++a)
      for (std::size_t b = a + 1; b < table.size(); ++b)
        if (table[a] == table[b]) {
          mass.row(ix(a)) += mass.row(ix(b));
          Eigen::MatrixXd kept(mass.rows() - 1, mass.cols());
          kept << mass.topRows(ix(b)), mass.bottomRows(mass.rows() - ix(b) - 1);
          mass = kept;
          table.erase(table.begin() + static_cast<std::ptrdiff_t>(b));
          return true;
        }
    return false;
  };
  auto transpose_table = [](const std::vector<std::vector<int>>& t) {
    std::vector<std::vector<int>> out(t.front().size(), std::vector<int>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < t[i].size(); ++j) out[j][i] = t[i][j];
    return out;
  };

  while (merge_rows(p, rows)) {
  }
  Eigen::MatrixXd pt = p.transpose();
  auto cols = transpose_table(rows);
  while (merge_rows(pt, cols)) {
  }
  return CouplingWithMap(pt.transpose(), DeterministicMap::from_rows(transpose_table(cols), n));
}

}  // namespace martonlab
