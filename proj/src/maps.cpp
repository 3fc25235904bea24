#include "martonlab/maps.hpp"

#include "martonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace martonlab {
namespace {

constexpr std::size_t kMaxAlphabet = 4;

std::vector<int> row_codes_to_table(const std::vector<std::size_t>& codes, std::size_t v_size, std::size_t x_size) {
  std::vector<int> table(codes.size() * v_size);
  for (std::size_t u = 0; u < codes.size(); ++u) {
    std::size_t code = codes[u];
    for (std::size_t v = v_size; v-- > 0;) {
      table[u * v_size + v] = static_cast<int>(code % x_size);
      code /= x_size;
    }
  }
  return table;
}

// Applies a column permutation, then sorts rows: the smallest table reachable
// with that column order.
std::vector<int> permuted_sorted(const std::vector<int>& table, std::size_t u_size, std::size_t v_size,
                                 const std::vector<std::size_t>& perm) {
  std::vector<std::vector<int>> rows(u_size, std::vector<int>(v_size));
  for (std::size_t u = 0; u < u_size; ++u)
    for (std::size_t v = 0; v < v_size; ++v) rows[u][v] = table[u * v_size + perm[v]];
  std::sort(rows.begin(), rows.end());
  std::vector<int> out;
  out.reserve(table.size());
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<int> canonical_table(const std::vector<int>& table, std::size_t u_size, std::size_t v_size) {
  std::vector<std::size_t> perm(v_size);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = permuted_sorted(table, u_size, v_size, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    auto candidate = permuted_sorted(table, u_size, v_size, perm);
    if (candidate < best) best = std::move(candidate);
  }
  return best;
}

void check_sizes(std::size_t u_size, std::size_t v_size, std::size_t x_size) {
  if (u_size == 0 || v_size == 0 || x_size == 0) throw InputError("map sizes must be positive");
  if (x_size > kMaxAlphabet) throw SizeError("maps support |X| <= 4");
  if (u_size > x_size || v_size > x_size) throw SizeError("maps require |U|, |V| <= |X|");
}

double binomial(double n, double k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)));
}

}  // namespace

// -- DeterministicMap ------------------------------------------------------------

DeterministicMap::DeterministicMap(std::size_t u_size, std::size_t v_size, std::size_t x_size, std::vector<int> table)
    : u_size_(u_size), v_size_(v_size), x_size_(x_size), table_(std::move(table)) {
  if (u_size_ == 0 || v_size_ == 0 || x_size_ == 0) throw InputError("DeterministicMap: sizes must be positive");
  if (table_.size() != u_size_ * v_size_) throw InputError("DeterministicMap: table size does not match |U| x |V|");
  for (int x : table_)
    if (x < 0 || static_cast<std::size_t>(x) >= x_size_) throw InputError("DeterministicMap: symbol outside X");
}

DeterministicMap DeterministicMap::from_rows(const std::vector<std::vector<int>>& rows, std::size_t x_size) {
  if (rows.empty() || rows.front().empty()) throw InputError("DeterministicMap: empty table");
  std::vector<int> table;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw InputError("DeterministicMap: ragged table");
    table.insert(table.end(), r.begin(), r.end());
  }
  return DeterministicMap(rows.size(), rows.front().size(), x_size, std::move(table));
}

DeterministicMap DeterministicMap::identity_on_u(std::size_t x_size) {
  std::vector<int> table(x_size);
  std::iota(table.begin(), table.end(), 0);
  return DeterministicMap(x_size, 1, x_size, std::move(table));
}

DeterministicMap DeterministicMap::identity_on_v(std::size_t x_size) {
  std::vector<int> table(x_size);
  std::iota(table.begin(), table.end(), 0);
  return DeterministicMap(1, x_size, x_size, std::move(table));
}

std::string DeterministicMap::id() const {
  std::ostringstream out;
  out << u_size_ << 'x' << v_size_ << ':';
  for (std::size_t u = 0; u < u_size_; ++u) {
    if (u) out << '|';
    for (std::size_t v = 0; v < v_size_; ++v) out << (*this)(u, v);
  }
  return out.str();
}

std::vector<std::vector<int>> DeterministicMap::rows() const {
  std::vector<std::vector<int>> out(u_size_);
  for (std::size_t u = 0; u < u_size_; ++u)
    out[u].assign(table_.begin() + static_cast<long>(u * v_size_), table_.begin() + static_cast<long>((u + 1) * v_size_));
  return out;
}

bool DeterministicMap::has_distinct_rows() const {
  const auto r = rows();
  std::set<std::vector<int>> seen(r.begin(), r.end());
  return seen.size() == r.size();
}

bool DeterministicMap::has_distinct_columns() const { return transposed().has_distinct_rows(); }

std::vector<std::vector<std::size_t>> DeterministicMap::fibers() const {
  std::vector<std::vector<std::size_t>> out(x_size_);
  for (std::size_t cell = 0; cell < table_.size(); ++cell) out[static_cast<std::size_t>(table_[cell])].push_back(cell);
  return out;
}

bool DeterministicMap::admissible_for(const SimplexVector& p_x) const {
  if (p_x.dim() != x_size_) throw InputError("DeterministicMap::admissible_for: |X| mismatch");
  const auto fib = fibers();
  for (std::size_t x = 0; x < x_size_; ++x)
    if (p_x[x] > 0.0 && fib[x].empty()) return false;
  return true;
}

DeterministicMap DeterministicMap::canonical() const {
  return DeterministicMap(u_size_, v_size_, x_size_, canonical_table(table_, u_size_, v_size_));
}

DeterministicMap DeterministicMap::transposed() const {
  std::vector<int> t(table_.size());
  for (std::size_t u = 0; u < u_size_; ++u)
    for (std::size_t v = 0; v < v_size_; ++v) t[v * u_size_ + u] = (*this)(u, v);
  return DeterministicMap(v_size_, u_size_, x_size_, std::move(t));
}

// -- CouplingWithMap ---------------------------------------------------------------

CouplingWithMap::CouplingWithMap(Eigen::MatrixXd p_uv, DeterministicMap f) : p_uv_(std::move(p_uv)), f_(std::move(f)) {
  if (static_cast<std::size_t>(p_uv_.rows()) != f_.u_size() || static_cast<std::size_t>(p_uv_.cols()) != f_.v_size())
    throw InputError("CouplingWithMap: p_uv shape does not match the map");
  if (f_.u_size() > f_.x_size() || f_.v_size() > f_.x_size())
    throw InputError("CouplingWithMap: cardinality reduction requires |U|, |V| <= |X|");
  for (Eigen::Index i = 0; i < p_uv_.size(); ++i) {
    double& m = p_uv_.data()[i];
    if (!std::isfinite(m) || m < -kMassTolerance) throw InputError("CouplingWithMap: invalid entry in p_uv");
    if (m < 0.0) m = 0.0;
  }
  const double total = p_uv_.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) throw InputError("CouplingWithMap: p_uv mass is not 1");
  p_uv_ /= total;
}

Eigen::VectorXd CouplingWithMap::induced_px() const {
  Eigen::VectorXd px = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f_.x_size()));
  for (std::size_t u = 0; u < f_.u_size(); ++u)
    for (std::size_t v = 0; v < f_.v_size(); ++v)
      px(f_(u, v)) += p_uv_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
  return px;
}

Eigen::MatrixXd CouplingWithMap::u_x_joint() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f_.u_size()), static_cast<Eigen::Index>(f_.x_size()));
  for (std::size_t u = 0; u < f_.u_size(); ++u)
    for (std::size_t v = 0; v < f_.v_size(); ++v)
      out(static_cast<Eigen::Index>(u), f_(u, v)) += p_uv_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
  return out;
}

Eigen::MatrixXd CouplingWithMap::v_x_joint() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f_.v_size()), static_cast<Eigen::Index>(f_.x_size()));
  for (std::size_t u = 0; u < f_.u_size(); ++u)
    for (std::size_t v = 0; v < f_.v_size(); ++v)
      out(static_cast<Eigen::Index>(v), f_(u, v)) += p_uv_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
  return out;
}

void CouplingWithMap::require_marginal(const SimplexVector& p_x, double tol) const {
  if (p_x.dim() != f_.x_size()) throw InputError("coupling: |X| does not match the input law");
  const double gap = (induced_px() - p_x.values()).cwiseAbs().maxCoeff();
  if (gap > tol) {
    std::ostringstream msg;
    msg << "coupling: induced X-marginal differs from p(x) by " << gap;
    throw InputError(msg.str());
  }
}

// -- Patterns and enumeration --------------------------------------------------------

std::vector<AndPattern> and_pattern_detect(const DeterministicMap& f) {
  std::vector<AndPattern> out;
  for (std::size_t u0 = 0; u0 < f.u_size(); ++u0) {
    const int x0 = f(u0, 0);
    bool row_const = true;
    for (std::size_t v = 1; v < f.v_size() && row_const; ++v) row_const = f(u0, v) == x0;
    if (!row_const) continue;
    for (std::size_t v0 = 0; v0 < f.v_size(); ++v0) {
      bool col_const = true;
      for (std::size_t u = 0; u < f.u_size() && col_const; ++u) col_const = f(u, v0) == x0;
      if (col_const) out.push_back({x0, u0, v0});
    }
  }
  return out;
}

double enumeration_candidates(std::size_t u_size, std::size_t v_size, std::size_t x_size, bool allow_repeated_rows) {
  const double row_kinds = std::pow(static_cast<double>(x_size), static_cast<double>(v_size));
  const double k = static_cast<double>(u_size);
  return allow_repeated_rows ? binomial(row_kinds + k - 1, k) : binomial(row_kinds, k);
}

std::vector<DeterministicMap> enumerate_maps(std::size_t u_size, std::size_t v_size, std::size_t x_size,
                                             const EnumerationOptions& opts) {
  check_sizes(u_size, v_size, x_size);
  if (enumeration_candidates(u_size, v_size, x_size, opts.allow_repeated_rows) > static_cast<double>(opts.candidate_cap))
    throw SizeError("enumerate_maps: " + std::to_string(u_size) + "x" + std::to_string(v_size) + " over " +
                    std::to_string(x_size) + " symbols exceeds the enumeration cap");

  std::size_t row_kinds = 1;
  for (std::size_t i = 0; i < v_size; ++i) row_kinds *= x_size;

  std::vector<std::size_t> perm(v_size);
  std::vector<DeterministicMap> out;
  std::vector<std::size_t> codes(u_size, 0);

  // Rows are kept in ascending code order, which fixes the U relabeling;
  // the V relabeling is handled by the canonical check below.
  auto visit = [&]() {
    auto table = row_codes_to_table(codes, v_size, x_size);
    DeterministicMap f(u_size, v_size, x_size, table);
    if (!f.has_distinct_columns()) return;
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end()))
      if (permuted_sorted(table, u_size, v_size, perm) < table) return;
    out.push_back(std::move(f));
  };

  auto recurse = [&](auto&& self, std::size_t depth, std::size_t start) -> void {
    if (depth == u_size) {
      visit();
      return;
    }
    for (std::size_t c = start; c < row_kinds; ++c) {
      codes[depth] = c;
      self(self, depth + 1, opts.allow_repeated_rows ? c : c + 1);
    }
  };
  recurse(recurse, 0, 0);
  return out;
}

std::vector<DeterministicMap> sample_maps(std::size_t u_size, std::size_t v_size, std::size_t x_size,
                                          std::size_t count, Rng& rng, bool allow_repeated_rows) {
  check_sizes(u_size, v_size, x_size);
  std::set<DeterministicMap> found;
  const std::size_t attempts = count * 64 + 64;
  for (std::size_t a = 0; a < attempts && found.size() < count; ++a) {
    std::vector<int> table(u_size * v_size);
    for (auto& t : table) t = static_cast<int>(rng.index(x_size));
    DeterministicMap f(u_size, v_size, x_size, std::move(table));
    if (!f.has_distinct_columns()) continue;
    if (!allow_repeated_rows && !f.has_distinct_rows()) continue;
    found.insert(f.canonical());
  }
  return {found.begin(), found.end()};
}

}  // namespace martonlab
