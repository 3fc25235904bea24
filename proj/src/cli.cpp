#include "martonlab/cli.hpp"

#include "martonlab/bssc.hpp"
#include "martonlab/channel_io.hpp"
#include "martonlab/envelope.hpp"
#include "martonlab/errors.hpp"
#include "martonlab/extremal.hpp"
#include "martonlab/factorize.hpp"
#include "martonlab/maxcorr.hpp"
#include "martonlab/report.hpp"
#include "martonlab/tmax.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

namespace martonlab::cli {
namespace {

constexpr const char* kVersion = "0.1.0";

struct Flags {
  std::string builtin;
  std::string channel_path;
  std::string builtin2;
  std::string channel2_path;
  std::string px;
  double alpha = 1.0;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  std::size_t restarts = 32;
  std::size_t grid = 0;
  std::string out_path;
  std::string format = "json";

  // subcommand-specific
  std::string coupling_path;
  std::string joint_path;
  std::string p_uv;
  bool g_scan = false;
  double step = 1e-3;
  bool weighted_region = false;
  std::string alphas;
  std::string lambdas;
  std::string check = "conj1";
  std::size_t trials = 20;
  double tolerance = 1e-6;
  bool disable_envelope = false;
  std::vector<std::string> fixtures;
  std::string summary_path;
};

struct Outcome {
  Report report;
  int exit_code = kExitOk;
  /// Preformatted text that bypasses emit (search JSON-lines).
  std::optional<std::string> raw;
};

ojson matrix_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ojson vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ojson witness_json(const CouplingWithMap& c) { return coupling_to_json(c); }

ojson verdict_json(const ConjectureVerdict& v, double tolerance) {
  ojson j;
  j["check"] = v.instance.check;
  j["verdict"] = verdict_kind_name(v.verdict);
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["slack"] = v.slack;
  j["tolerance"] = tolerance;
  j["lhs_is_lower_bound"] = v.lhs_is_lower_bound;
  j["rhs_is_lower_bound"] = v.rhs_is_lower_bound;
  ojson inst;
  inst["alpha"] = v.instance.alpha;
  inst["lambda"] = v.instance.lambda;
  inst["p_x"] = v.instance.p_x;
  inst["seed"] = v.instance.seed;
  inst["restarts"] = v.instance.restarts;
  inst["envelope_points"] = v.instance.envelope_points;
  inst["disable_envelope"] = v.instance.disable_envelope;
  ojson chans = ojson::array();
  for (const auto& ch : v.instance.channels) chans.push_back(channel_to_json(ch));
  inst["channels"] = chans;
  j["instance"] = inst;
  if (v.witness) j["witness"] = witness_json(*v.witness);
  if (!v.grid.empty()) {
    ojson grid = ojson::array();
    for (const auto& g : v.grid) grid.push_back({{"p", g.p}, {"lhs", g.lhs}, {"rhs", g.rhs}, {"slack", g.slack}});
    j["grid"] = grid;
  }
  return j;
}

ojson certificate_json(const CertificateReport& r) {
  ojson j;
  j["verdict"] = verdict_name(r.verdict);
  j["reason"] = r.reason;
  j["stationarity_residual"] = r.stationarity_residual;
  ojson slacks = ojson::array();
  for (const auto& s : r.lemma2_slacks)
    slacks.push_back({{"side", std::string(1, s.side)}, {"first", s.first}, {"second", s.second}, {"shared", s.shared},
                      {"slack", s.slack}});
  j["first_derivative_slacks"] = slacks;
  ojson pats = ojson::array();
  for (const auto& f : r.and_findings)
    pats.push_back({{"x0", f.pattern.x0},
                    {"u0", f.pattern.u0},
                    {"v0", f.pattern.v0},
                    {"directional_derivative", f.directional_derivative},
                    {"curvature", f.curvature},
                    {"refutes", f.refutes}});
  j["and_patterns"] = pats;
  j["min_eig_projected"] = r.min_eig_projected;
  j["constraint_dimension"] = r.constraint_dimension;
  if (r.witness) {
    j["witness"] = {{"kind", r.witness->kind},
                    {"description", r.witness->description},
                    {"direction", matrix_json(r.witness->direction)}};
  }
  return j;
}

class Context {
 public:
  explicit Context(const Flags& f) : f_(f) {}

  bool has_channel() const { return !f_.builtin.empty() || !f_.channel_path.empty(); }

  ChannelFixture channel() const { return resolve(f_.builtin, f_.channel_path, "--builtin or --channel"); }

  ChannelFixture second_channel() const {
    if (f_.builtin2.empty() && f_.channel2_path.empty()) return channel();
    return resolve(f_.builtin2, f_.channel2_path, "--builtin2 or --channel2");
  }

  SimplexVector px_for(const ChannelFixture& fx) const {
    if (!f_.px.empty()) {
      SimplexVector p(parse_fraction_list(f_.px));
      if (p.dim() != fx.channel.x_size()) throw InputError("--px has the wrong number of entries for this channel");
      return p;
    }
    if (fx.default_px) return *fx.default_px;
    return SimplexVector::uniform(fx.channel.x_size());
  }

  ojson config(const std::string& sub) const {
    ojson c;
    c["tool"] = "martonlab";
    c["version"] = kVersion;
    c["subcommand"] = sub;
    if (!f_.builtin.empty()) c["builtin"] = f_.builtin;
    if (!f_.channel_path.empty()) c["channel"] = f_.channel_path;
    if (!f_.builtin2.empty()) c["builtin2"] = f_.builtin2;
    if (!f_.channel2_path.empty()) c["channel2"] = f_.channel2_path;
    if (!f_.px.empty()) c["px"] = f_.px;
    c["alpha"] = f_.alpha;
    c["lambda"] = f_.lambda;
    c["seed"] = f_.seed;
    c["restarts"] = f_.restarts;
    c["grid"] = f_.grid;
    c["format"] = f_.format;
    return c;
  }

  const Flags& flags() const { return f_; }

 private:
  static ChannelFixture resolve(const std::string& builtin, const std::string& path, const char* what) {
    if (!builtin.empty() && !path.empty()) throw InputError(std::string("give only one of ") + what);
    if (!path.empty()) return load_channel_file(path);
    if (!builtin.empty()) return builtin_channel(builtin);
    throw InputError(std::string("this subcommand needs ") + what);
  }

  const Flags& f_;
};

TmaxOptions tmax_options(const Flags& f) {
  TmaxOptions o;
  o.restarts = f.restarts;
  o.seed = f.seed;
  return o;
}

ojson channel_summary(const ChannelFixture& fx, const SimplexVector& px) {
  ojson j = channel_to_json(fx.channel, px);
  j["name"] = fx.name;
  j["i_xy"] = channel_mutual_information(px, fx.channel.y_chan());
  j["i_xz"] = channel_mutual_information(px, fx.channel.z_chan());
  return j;
}

Outcome cmd_info(const Context& ctx) {
  Outcome o;
  o.report.config = ctx.config("info");
  ojson r;
  r["version"] = kVersion;
  r["builtins"] = builtin_channel_names();
  if (ctx.has_channel()) {
    const auto fx = ctx.channel();
    const auto px = ctx.px_for(fx);
    r["channel"] = channel_summary(fx, px);
    if (fx.channel.x_size() <= 3) {
      const auto yz = more_capable_test(fx.channel);
      const auto zy = more_capable_test(fx.channel.swapped());
      r["y_more_capable"] = yz.more_capable;
      r["z_more_capable"] = zy.more_capable;
      r["min_information_gap_y_minus_z"] = yz.min_gap;
      r["min_information_gap_z_minus_y"] = zy.min_gap;
    }
  }
  o.report.result = r;
  return o;
}

Outcome cmd_tmax(const Context& ctx) {
  const auto& f = ctx.flags();
  const auto fx = ctx.channel();
  const auto px = ctx.px_for(fx);
  const TmaxResult t = tmax_eval(fx.channel, px, f.alpha, tmax_options(f));
  Outcome o;
  o.report.config = ctx.config("tmax");
  ojson r;
  r["value"] = t.value;
  r["alpha"] = t.alpha;
  r["is_lower_bound"] = t.is_lower_bound;
  r["outside_alpha_regime"] = t.outside_alpha_regime;
  r["maps_sampled"] = t.maps_sampled;
  r["max_information"] = std::max(f.alpha * channel_mutual_information(px, fx.channel.y_chan()),
                                  channel_mutual_information(px, fx.channel.z_chan()));
  r["witness"] = witness_json(t.witness);
  ojson maps = ojson::array();
  for (const auto& m : t.per_map_values) maps.push_back({{"map_id", m.map_id}, {"value", m.value}});
  r["per_map_values"] = maps;
  o.report.result = r;
  o.report.csv_header = {"map_id", "value"};
  for (const auto& m : t.per_map_values) o.report.csv_rows.push_back({m.map_id, m.value});
  return o;
}

SimplexFunction factor_functional(const BroadcastChannel& ch, double alpha, double lambda) {
  const TFunction inner = max_information_function(ch, alpha);
  return [ch, alpha, lambda, inner](const SimplexVector& q) {
    const double lb = 1.0 - lambda;
    return -(alpha - lb) * entropy(push_forward(q, ch.y_chan())) - lb * entropy(push_forward(q, ch.z_chan())) +
           inner(q).value;
  };
}

Outcome cmd_envelope(const Context& ctx) {
  const auto& f = ctx.flags();
  const auto fx = ctx.channel();
  const auto px = ctx.px_for(fx);
  WeightedObjective{f.alpha, f.lambda}.validate();
  const SimplexFunction g = factor_functional(fx.channel, f.alpha, f.lambda);
  EnvelopeOptions eo;
  if (f.grid > 0) {
    if (fx.channel.x_size() == 2) eo.grid_points_1d = f.grid;
    else eo.simplex_divisions = f.grid;
  }
  const EnvelopeResult env = concave_envelope_eval(g, px, eo);
  Outcome o;
  o.report.config = ctx.config("envelope");
  ojson r;
  r["function"] = "-(alpha-lambda_bar)H(Y) - lambda_bar H(Z) + max{alpha I(X;Y), I(X;Z)}";
  r["value"] = env.value;
  r["base_value"] = env.base_value;
  ojson atoms = ojson::array();
  for (const auto& a : env.atoms) atoms.push_back({{"weight", a.weight}, {"point", a.point.to_vector()}});
  r["atoms"] = atoms;
  o.report.result = r;
  if (fx.channel.x_size() == 2) {
    o.report.csv_header = {"p", "g", "envelope"};
    for (const auto& row : envelope_trace_binary(g, f.grid > 1 ? f.grid : 201))
      o.report.csv_rows.push_back({row.p, row.g, row.envelope});
  }
  return o;
}

ojson rate_json(const RateResult& r) {
  return {{"value", r.value},
          {"p_w0", r.p_w0},
          {"p_x1_w0", r.p_x1_w0},
          {"p_x1_w1", r.p_x1_w1},
          {"grid_step", r.grid_step}};
}

RateSearchOptions rate_options(const Flags& f) {
  RateSearchOptions o;
  if (f.grid > 0) o.grid_points = f.grid;
  return o;
}

Outcome cmd_sumrate(const Context& ctx) {
  const auto fx = ctx.channel();
  const RateResult r = marton_sum_rate_binary(fx.channel, rate_options(ctx.flags()));
  Outcome o;
  o.report.config = ctx.config("sumrate");
  o.report.result = rate_json(r);
  return o;
}

Outcome cmd_weighted_rate(const Context& ctx) {
  const auto& f = ctx.flags();
  const auto fx = ctx.channel();
  const WeightedRateResult r = weighted_rate_support(fx.channel, f.alpha, rate_options(f));
  Outcome o;
  o.report.config = ctx.config("weighted-rate");
  o.report.result = {{"alpha", f.alpha}, {"direct", rate_json(r.direct)}, {"swapped", rate_json(r.swapped)}};
  o.report.csv_header = {"variant", "alpha", "value", "p_w0", "p_x1_w0", "p_x1_w1"};
  o.report.csv_rows.push_back({"direct", f.alpha, r.direct.value, r.direct.p_w0, r.direct.p_x1_w0, r.direct.p_x1_w1});
  o.report.csv_rows.push_back(
      {"swapped", f.alpha, r.swapped.value, r.swapped.p_w0, r.swapped.p_x1_w0, r.swapped.p_x1_w1});
  return o;
}

Outcome cmd_check_eq1(const Context& ctx) {
  const auto& f = ctx.flags();
  const auto fx = ctx.channel();
  constexpr double kTol = 1e-6;
  std::vector<SimplexVector> points;
  if (f.grid > 1 && fx.channel.x_size() == 2 && f.px.empty()) {
    for (std::size_t k = 0; k < f.grid; ++k) points.push_back(SimplexVector::binary(double(k) / double(f.grid - 1)));
  } else {
    points.push_back(ctx.px_for(fx));
  }
  Outcome o;
  o.report.config = ctx.config("check-eq1");
  o.report.csv_header = {"p_x", "t", "max_information", "gap", "holds"};
  ojson rows = ojson::array();
  bool all_hold = true;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const TmaxResult t = tmax_eval(fx.channel, p, 1.0, tmax_options(f));
    const double m = std::max(channel_mutual_information(p, fx.channel.y_chan()),
                              channel_mutual_information(p, fx.channel.z_chan()));
    const double gap = t.value - m;
    const bool holds = gap <= kTol;
    all_hold = all_hold && holds;
    worst_gap = std::max(worst_gap, gap);
    rows.push_back({{"p_x", p.to_vector()},
                    {"t", t.value},
                    {"max_information", m},
                    {"gap", gap},
                    {"holds", holds},
                    {"t_is_lower_bound", t.is_lower_bound},
                    {"witness", witness_json(t.witness)}});
    std::string label;
    for (std::size_t i = 0; i < p.dim(); ++i) label += (i ? ";" : "") + format_number(p[i]);
    o.report.csv_rows.push_back({label, t.value, m, gap, holds ? "true" : "false"});
  }
  o.report.result = {{"holds", all_hold}, {"tolerance", kTol}, {"worst_gap", worst_gap}, {"points", rows}};
  // A violation is confirmed: the witness coupling attains the larger value.
  o.exit_code = all_hold ? kExitOk : kExitViolation;
  return o;
}

ConjectureOptions conjecture_options(const Flags& f) {
  ConjectureOptions o;
  o.tmax = tmax_options(f);
  o.letter_tmax.seed = f.seed;
  o.letter_tmax.restarts = std::max<std::size_t>(1, f.restarts / 4);
  o.tolerance = f.tolerance;
  if (f.grid > 1) o.grid_points = f.grid;
  return o;
}

Outcome cmd_two_letter(const Context& ctx, bool weighted) {
  const auto& f = ctx.flags();
  const auto a = ctx.channel();
  const auto b = ctx.second_channel();
  std::optional<SimplexVector> p;
  if (!f.px.empty()) {
    p = SimplexVector(parse_fraction_list(f.px));
    if (p->dim() != 4) throw InputError("--px must give p(x1,x2) as four entries ordered x1 * 2 + x2");
  } else {
    p = product_law(a.default_px.value_or(SimplexVector::uniform(a.channel.x_size())),
                    b.default_px.value_or(SimplexVector::uniform(b.channel.x_size())));
  }
  const ConjectureOptions co = conjecture_options(f);
  const ConjectureVerdict v = weighted ? conj2_check(a.channel, b.channel, *p, {f.alpha, f.lambda}, co)
                                       : conj1_check(a.channel, b.channel, *p, f.lambda, co);
  Outcome o;
  o.report.config = ctx.config(weighted ? "conj2" : "conj1");
  o.report.result = verdict_json(v, co.tolerance);
  o.exit_code = v.verdict == ConjectureVerdictKind::violation_candidate ? kExitViolation : kExitOk;
  return o;
}

Outcome cmd_conj3(const Context& ctx) {
  const auto& f = ctx.flags();
  const auto fx = ctx.channel();
  const ConjectureOptions co = conjecture_options(f);
  const ConjectureVerdict v = conj3_check(fx.channel, f.lambda, f.alpha, co);
  Outcome o;
  o.report.config = ctx.config("conj3");
  o.report.result = verdict_json(v, co.tolerance);
  o.report.csv_header = {"p", "lhs", "rhs", "slack"};
  for (const auto& g : v.grid) o.report.csv_rows.push_back({g.p, g.lhs, g.rhs, g.slack});
  o.exit_code = v.verdict == ConjectureVerdictKind::violation_candidate ? kExitViolation : kExitOk;
  return o;
}

Outcome cmd_bssc(const Context& ctx) {
  const auto& f = ctx.flags();
  Outcome o;
  o.report.config = ctx.config("bssc");
  if (f.g_scan) {
    const auto rows = g_scan(f.step);
    o.report.config["step"] = f.step;
    o.report.csv_header = {"x", "g"};
    ojson arr = ojson::array();
    for (const auto& [x, g] : rows) {
      o.report.csv_rows.push_back({x, g});
      arr.push_back({{"x", x}, {"g", g}});
    }
    o.report.result = {{"g_scan", arr}};
    return o;
  }
  if (f.weighted_region) {
    const std::vector<double> alphas = f.alphas.empty() ? std::vector<double>{1.0, 2.0, 4.0, 8.0} : parse_real_list(f.alphas);
    o.report.config["alphas"] = alphas;
    o.report.csv_header = {"alpha", "value", "swapped_value"};
    ojson arr = ojson::array();
    for (double a : alphas) {
      const WeightedRateResult r = bssc_weighted_region(a, rate_options(f));
      o.report.csv_rows.push_back({a, r.direct.value, r.swapped.value});
      arr.push_back({{"alpha", a}, {"direct", rate_json(r.direct)}, {"swapped", rate_json(r.swapped)}});
    }
    o.report.result = {{"weighted_region", arr}};
    return o;
  }
  std::vector<double> grid;
  if (!f.alphas.empty()) {
    grid = parse_real_list(f.alphas);
  } else {
    for (int k = 1; k <= 50; ++k) grid.push_back(1.0 + 7.0 * k / 50.0);
  }
  const AndCaseReport rep = and_case_scan(grid);
  ojson rows = ojson::array();
  o.report.csv_header = {"alpha", "root_x", "bound_at_root", "admissible"};
  for (const auto& r : rep.rows) {
    rows.push_back({{"alpha", r.alpha}, {"root_x", r.root_x}, {"bound_at_root", r.bound_at_root}, {"admissible", r.admissible}});
    o.report.csv_rows.push_back({r.alpha, r.root_x, r.bound_at_root, r.admissible ? "true" : "false"});
  }
  o.report.result = {{"any_admissible", rep.any_admissible},
                     {"g_zero", g_function(0.0)},
                     {"g_negative_on_grid", rep.g_negative_on_grid},
                     {"g_max_on_grid", rep.g_max_on_grid},
                     {"note", "g negativity is checked on the step-1e-3 grid only"},
                     {"rows", rows}};
  return o;
}

ojson correlation_json(const CorrelationResult& c) {
  return {{"c_prime", c.c_prime},
          {"c_prime_alternating", c.c_prime_alternating},
          {"c_prime_power", c.c_prime_power},
          {"agreement_tolerance", 1e-9},
          {"witness_l", vector_json(c.witness_l)},
          {"witness_t", vector_json(c.witness_t)},
          {"alternating_sweeps", c.alternating_sweeps},
          {"power_sweeps", c.power_sweeps}};
}

Outcome cmd_maxcorr(const Context& ctx) {
  const auto& f = ctx.flags();
  Outcome o;
  o.report.config = ctx.config("maxcorr");
  if (!f.joint_path.empty()) {
    o.report.config["joint"] = f.joint_path;
    const Eigen::MatrixXd joint = parse_joint_json(read_text_file(f.joint_path), f.joint_path);
    ojson r = correlation_json(maximal_correlation_sq(joint));
    if (joint.cols() == 2) {
      const Eigen::VectorXd px = joint.colwise().sum().transpose();
      Eigen::MatrixXd rows = joint.transpose();
      for (Eigen::Index x = 0; x < 2; ++x) rows.row(x) /= px(x);
      r["c_envelope"] = c_envelope_binary(StochasticMatrix(rows), SimplexVector(Eigen::VectorXd(px)));
    }
    o.report.result = r;
    return o;
  }
  if (f.p_uv.empty()) throw InputError("maxcorr needs --joint FILE or --p-uv p00,p01,p10,p11");
  const auto v = parse_fraction_list(f.p_uv);
  if (v.size() != 4) throw InputError("--p-uv needs four entries");
  Eigen::Matrix2d p;
  p << v[0], v[1], v[2], v[3];
  o.report.config["p_uv"] = f.p_uv;
  const XorBounds b = xor_bounds(p);
  const auto [ku, pxu] = xor_auxiliary(p, false);
  const auto [kv, pxv] = xor_auxiliary(p, true);
  ojson r;
  r["a_xor"] = b.a_xor;
  r["b_xor"] = b.b_xor;
  r["bound_u"] = b.bound_u;
  r["bound_v"] = b.bound_v;
  r["c_u"] = c_envelope_binary(ku, pxu);
  r["c_v"] = c_envelope_binary(kv, pxv);
  auto joint_of = [](const StochasticMatrix& k, const SimplexVector& px) {
    return Eigen::MatrixXd(Eigen::MatrixXd(px.values().asDiagonal() * k.matrix()).transpose());
  };
  const Eigen::MatrixXd ju = joint_of(ku, pxu), jv = joint_of(kv, pxv);
  if (ju.minCoeff() >= 0.0 && ju.rowwise().sum().minCoeff() > 0.0 && ju.colwise().sum().minCoeff() > 0.0)
    r["c_prime_u"] = maximal_correlation_sq(ju).c_prime;
  if (jv.rowwise().sum().minCoeff() > 0.0 && jv.colwise().sum().minCoeff() > 0.0)
    r["c_prime_v"] = maximal_correlation_sq(jv).c_prime;
  if (ctx.has_channel()) {
    const auto fx = ctx.channel();
    const XorMiCheck m = xor_mi_inequality_check(p, fx.channel);
    r["inequality"] = {{"lhs", m.lhs}, {"rhs", m.rhs}, {"chain", m.chain}, {"holds", m.holds}, {"tolerance", 1e-9}};
    o.exit_code = m.holds ? kExitOk : kExitViolation;
  }
  o.report.result = r;
  return o;
}

Outcome cmd_counterexample(const Context& ctx) {
  const auto fx = builtin_channel("appendix_b");
  const SimplexVector px = *fx.default_px;
  const double i_xy = channel_mutual_information(px, fx.channel.y_chan());
  const double i_xz = channel_mutual_information(px, fx.channel.z_chan());
  const double alpha = i_xz / i_xy;
  Eigen::MatrixXd p(2, 2);
  p << 0.05930, 0.00005, 0.14065, 0.80000;
  const CouplingWithMap c(p, DeterministicMap::from_rows({{1, 1}, {1, 0}}, 2));
  const double lhs = objective_J(c, fx.channel, px, alpha);
  const double rhs = std::max(alpha * i_xy, i_xz);
  const AscentResult polished = inner_ascent(c.f(), fx.channel, px, alpha, AscentOptions{4, 400, 0, 1.0, p});
  const bool violated = lhs > rhs;
  Outcome o;
  o.report.config = ctx.config("counterexample");
  o.report.config["builtin"] = "appendix_b";
  o.report.config["alpha"] = alpha;
  ojson r;
  r["alpha"] = alpha;
  r["p_x"] = px.to_vector();
  r["lhs"] = lhs;
  r["rhs"] = rhs;
  r["margin"] = lhs - rhs;
  r["i_xy"] = i_xy;
  r["i_xz"] = i_xz;
  r["coupling"] = witness_json(c);
  r["map_class"] = "AND";
  r["polished_lhs"] = polished.value;
  r["verdict"] = violated ? "inequality eq:eqg violated" : "inequality eq:eqg not violated";
  o.report.result = r;
  // Reproducing the counterexample is the expected outcome.
  o.exit_code = violated ? kExitOk : kExitViolation;
  return o;
}

Outcome cmd_certify(const Context& ctx) {
  const auto& f = ctx.flags();
  if (f.coupling_path.empty()) throw InputError("certify needs --coupling FILE");
  const CouplingWithMap c = parse_coupling_json(read_text_file(f.coupling_path), f.coupling_path);
  const auto fx = ctx.channel();
  if (fx.channel.x_size() != c.x_size()) throw InputError("coupling and channel disagree on |X|");
  const SimplexVector px = f.px.empty() ? SimplexVector(Eigen::VectorXd(c.induced_px())) : ctx.px_for(fx);
  const CertificateReport rep = certify_local_max(c, fx.channel, px);
  Outcome o;
  o.report.config = ctx.config("certify");
  o.report.config["coupling"] = f.coupling_path;
  o.report.result = certificate_json(rep);
  o.report.result["coupling"] = witness_json(c);
  o.exit_code = rep.verdict == Verdict::refuted ? kExitViolation : kExitOk;
  return o;
}

Outcome cmd_search(const Context& ctx) {
  const auto& f = ctx.flags();
  SearchConfig sc;
  sc.seed = f.seed;
  sc.trials = f.trials;
  sc.check = f.check;
  if (!f.lambdas.empty()) sc.lambda_grid = parse_real_list(f.lambdas);
  if (!f.alphas.empty()) sc.alpha_grid = parse_real_list(f.alphas);
  sc.tolerance = f.tolerance;
  sc.disable_envelope = f.disable_envelope;
  sc.restarts = f.restarts;
  for (const auto& name : f.fixtures) sc.fixture_channels.push_back(builtin_channel(name).channel);
  const SearchReport rep = random_search(sc);

  Outcome o;
  o.report.config = ctx.config("search");
  o.report.config["check"] = sc.check;
  o.report.config["trials"] = sc.trials;
  o.report.config["lambda_grid"] = sc.lambda_grid;
  o.report.config["alpha_grid"] = sc.check == "conj1" ? std::vector<double>{1.0} : sc.alpha_grid;
  o.report.config["tolerance"] = sc.tolerance;
  o.report.config["confirm_tolerance"] = sc.confirm_tolerance;
  o.report.config["disable_envelope"] = sc.disable_envelope;
  o.report.config["fixtures"] = f.fixtures;

  ojson summary = {{"records", rep.verdicts.size()},
                   {"violation_candidates", rep.violation_candidates},
                   {"confirmed_violations", rep.confirmed_violations},
                   {"min_slack", rep.min_slack},
                   {"argmin_record", rep.argmin},
                   {"argmin_trial", rep.trial_index.empty() ? 0 : rep.trial_index[rep.argmin]}};
  o.report.result = summary;
  o.report.csv_header = {"record", "trial", "check", "alpha", "lambda", "lhs", "rhs", "slack", "verdict",
                         "lhs_is_lower_bound", "rhs_is_lower_bound"};
  std::vector<ojson> lines;
  lines.push_back({{"config", o.report.config}});
  for (std::size_t i = 0; i < rep.verdicts.size(); ++i) {
    const auto& v = rep.verdicts[i];
    ojson rec = verdict_json(v, sc.tolerance);
    rec["record"] = i;
    rec["trial"] = rep.trial_index[i];
    lines.push_back(rec);
    o.report.csv_rows.push_back({static_cast<long long>(i), static_cast<long long>(rep.trial_index[i]), v.instance.check,
                                 v.instance.alpha, v.instance.lambda, v.lhs, v.rhs, v.slack,
                                 verdict_kind_name(v.verdict), v.lhs_is_lower_bound ? "true" : "false",
                                 v.rhs_is_lower_bound ? "true" : "false"});
  }
  lines.push_back({{"summary", summary}});
  if (f.format == "json") o.raw = emit_json_lines(lines);
  if (!f.summary_path.empty()) {
    std::ofstream s(f.summary_path, std::ios::binary);
    if (!s) throw InputError("cannot write '" + f.summary_path + "'");
    s << emit(o.report, OutputFormat::csv);
  }
  o.exit_code = rep.confirmed_violations > 0 ? kExitViolation : kExitOk;
  return o;
}

void add_channel_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--builtin", f.builtin, "Builtin channel: bssc_half, blackwell, appendix_b");
  sub->add_option("--channel", f.channel_path, "Channel JSON file");
  sub->add_option("--px", f.px, "Input law, e.g. 1/3,1/3,1/3");
}

void add_common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--alpha", f.alpha, "Weight on I(U;Y), >= 1");
  sub->add_option("--lambda", f.lambda, "lambda in [0,1]");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--restarts", f.restarts, "Ascent restarts");
  sub->add_option("--grid", f.grid, "Grid points (meaning depends on the subcommand)");
  sub->add_option("--out", f.out_path, "Write output to this file");
  sub->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Numerical tools for Marton's inner bound", "martonlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, std::function<Outcome(const Context&)>> handlers;
  auto add = [&](const std::string& name, const std::string& help, std::function<Outcome(const Context&)> h) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_channel_flags(sub, f);
    add_common_flags(sub, f);
    handlers[name] = std::move(h);
    return sub;
  };

  add("info", "Describe builtins or a channel", cmd_info);
  add("tmax", "Evaluate T_alpha at an input law", cmd_tmax);
  add("envelope", "Upper concave envelope of the weighted max-information functional", cmd_envelope);
  add("sumrate", "Binary-input sum-rate of the inner bound", cmd_sumrate);
  add("weighted-rate", "Binary-input weighted rate alpha R1 + R2", cmd_weighted_rate);
  add("check-eq1", "Compare T with max{I(X;Y), I(X;Z)}", cmd_check_eq1);
  auto* c1 = add("conj1", "Two-letter check at alpha = 1", [](const Context& c) { return cmd_two_letter(c, false); });
  auto* c2 = add("conj2", "Two-letter check with weight alpha", [](const Context& c) { return cmd_two_letter(c, true); });
  for (auto* sub : {c1, c2}) {
    sub->add_option("--builtin2", f.builtin2, "Second component builtin (default: the first)");
    sub->add_option("--channel2", f.channel2_path, "Second component channel JSON");
    sub->add_option("--tolerance", f.tolerance, "Verdict tolerance");
  }
  auto* c3 = add("conj3", "Single-letter envelope check over a grid of binary laws", cmd_conj3);
  c3->add_option("--tolerance", f.tolerance, "Verdict tolerance");
  auto* bs = add("bssc", "AND-case analysis of the skew-symmetric channel", cmd_bssc);
  bs->add_flag("--g-scan", f.g_scan, "Emit the g(x) scan");
  bs->add_option("--step", f.step, "Step of the g scan");
  bs->add_flag("--weighted-region", f.weighted_region, "Emit alpha R1 + R2 over --alphas");
  bs->add_option("--alphas", f.alphas, "Comma-separated weights");
  auto* mc = add("maxcorr", "Maximal correlation and XOR coefficients", cmd_maxcorr);
  mc->add_option("--joint", f.joint_path, "Joint p(u,x) JSON, rows U");
  mc->add_option("--p-uv", f.p_uv, "p00,p01,p10,p11 for X = U xor V");
  add("counterexample", "Reproduce the binary counterexample at alpha = I(X;Z)/I(X;Y)", cmd_counterexample);
  auto* ce = add("certify", "Local-maximum certificate for a coupling", cmd_certify);
  ce->add_option("--coupling", f.coupling_path, "Coupling JSON with p_uv and f");
  auto* se = add("search", "Seeded random search for violations", cmd_search);
  se->add_option("--check", f.check, "conj1, conj2 or conj3")->check(CLI::IsMember({"conj1", "conj2", "conj3"}));
  se->add_option("--trials", f.trials, "Random trials");
  se->add_option("--lambdas", f.lambdas, "Comma-separated lambda grid");
  se->add_option("--alphas", f.alphas, "Comma-separated alpha grid");
  se->add_option("--tolerance", f.tolerance, "Screening tolerance");
  se->add_flag("--disable-envelope", f.disable_envelope, "Mutation switch: drop the envelope from the bound");
  se->add_option("--fixture", f.fixtures, "Builtin channel run as an extra trial (repeatable)");
  se->add_option("--summary", f.summary_path, "Also write the CSV summary here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalidInput;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  if (name == "bssc" && f.g_scan && chosen->count("--format") == 0) f.format = "csv";
  // The search screens many instances; its restart default is lighter.
  if (name == "search" && chosen->count("--restarts") == 0) f.restarts = 8;
  try {
    const Context ctx(f);
    Outcome o = handlers.at(name)(ctx);
    const std::string text = o.raw ? *o.raw : emit(o.report, f.format == "csv" ? OutputFormat::csv : OutputFormat::json);
    if (!f.out_path.empty()) {
      std::ofstream file(f.out_path, std::ios::binary);
      if (!file) throw InputError("cannot write '" + f.out_path + "'");
      file << text;
    } else {
      out << text;
    }
    return o.exit_code;
  } catch (const std::exception& e) {
    err << "martonlab " << name << ": " << e.what() << "\n";
    return kExitInvalidInput;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace martonlab::cli
