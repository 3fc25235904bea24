#include "martonlab/bssc.hpp"
#include "martonlab/channel_io.hpp"
#include "martonlab/cli.hpp"
#include "martonlab/envelope.hpp"
#include "martonlab/errors.hpp"
#include "martonlab/extremal.hpp"
#include "martonlab/factorize.hpp"
#include "martonlab/maxcorr.hpp"
#include "martonlab/tmax.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace martonlab;

namespace {

BroadcastChannel make_channel(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
  return BroadcastChannel(StochasticMatrix(y), StochasticMatrix(z));
}

py::dict coupling_dict(const CouplingWithMap& c) {
  py::dict d;
  d["p_uv"] = c.p_uv();
  d["f"] = c.f().rows();
  d["x_size"] = c.x_size();
  d["map_id"] = c.f().id();
  return d;
}

py::dict verdict_dict(const ConjectureVerdict& v) {
  py::dict d;
  d["check"] = v.instance.check;
  d["verdict"] = verdict_kind_name(v.verdict);
  d["lhs"] = v.lhs;
  d["rhs"] = v.rhs;
  d["slack"] = v.slack;
  d["lhs_is_lower_bound"] = v.lhs_is_lower_bound;
  d["rhs_is_lower_bound"] = v.rhs_is_lower_bound;
  py::list grid;
  for (const auto& g : v.grid) grid.append(py::make_tuple(g.p, g.lhs, g.rhs, g.slack));
  d["grid"] = grid;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical tools for Marton's inner bound (C++ core)";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<SizeError>(m, "SizeError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_ValueError);
  py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_ArithmeticError);

  py::class_<BroadcastChannel>(m, "BroadcastChannel")
      .def(py::init(&make_channel), py::arg("y_given_x"), py::arg("z_given_x"))
      .def_property_readonly("x_size", &BroadcastChannel::x_size)
      .def_property_readonly("y_given_x", [](const BroadcastChannel& c) { return c.y_chan().matrix(); })
      .def_property_readonly("z_given_x", [](const BroadcastChannel& c) { return c.z_chan().matrix(); })
      .def("swapped", &BroadcastChannel::swapped);

  m.def("builtin_channel", [](const std::string& name) {
    const auto fx = builtin_channel(name);
    std::optional<Eigen::VectorXd> px;
    if (fx.default_px) px = fx.default_px->values();
    return py::make_tuple(fx.channel, px);
  }, py::arg("name"), "(channel, default p(x) or None) for a builtin name");
  m.def("builtin_channel_names", &builtin_channel_names);
  m.def("load_channel_json", [](const std::string& text) {
    const auto fx = parse_channel_json(text);
    std::optional<Eigen::VectorXd> px;
    if (fx.default_px) px = fx.default_px->values();
    return py::make_tuple(fx.channel, px);
  });

  m.def("mutual_information", [](const Eigen::MatrixXd& joint) { return mutual_information(joint); },
        py::arg("joint"), "I(A;B) in bits for a 2-D joint table");
  m.def("channel_mutual_information",
        [](const Eigen::VectorXd& p, const Eigen::MatrixXd& chan) {
          return channel_mutual_information(SimplexVector(p), StochasticMatrix(chan));
        },
        py::arg("p_x"), py::arg("channel"));

  m.def("objective_j",
        [](const BroadcastChannel& ch, const Eigen::VectorXd& p_x, const Eigen::MatrixXd& p_uv,
           const std::vector<std::vector<int>>& f, double alpha) {
          const CouplingWithMap c(p_uv, DeterministicMap::from_rows(f, ch.x_size()));
          return objective_J(c, ch, SimplexVector(p_x), alpha);
        },
        py::arg("channel"), py::arg("p_x"), py::arg("p_uv"), py::arg("f"), py::arg("alpha") = 1.0);

  m.def("tmax",
        [](const BroadcastChannel& ch, const Eigen::VectorXd& p_x, double alpha, std::size_t restarts,
           std::uint64_t seed) {
          TmaxOptions o;
          o.restarts = restarts;
          o.seed = seed;
          const TmaxResult r = tmax_eval(ch, SimplexVector(p_x), alpha, o);
          py::dict d;
          d["value"] = r.value;
          d["is_lower_bound"] = r.is_lower_bound;
          d["outside_alpha_regime"] = r.outside_alpha_regime;
          d["maps_sampled"] = r.maps_sampled;
          d["witness"] = coupling_dict(r.witness);
          return d;
        },
        py::arg("channel"), py::arg("p_x"), py::arg("alpha") = 1.0, py::arg("restarts") = 32, py::arg("seed") = 0);

  m.def("concave_envelope",
        [](const std::function<double(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& p) {
          const EnvelopeResult r =
              concave_envelope_eval([&g](const SimplexVector& q) { return g(q.values()); }, SimplexVector(p));
          py::list atoms;
          for (const auto& a : r.atoms) atoms.append(py::make_tuple(a.weight, a.point.values()));
          return py::make_tuple(r.value, atoms);
        },
        py::arg("g"), py::arg("p"), "Upper concave envelope of g at p (|X| <= 3)");

  m.def("sum_rate", [](const BroadcastChannel& ch) { return marton_sum_rate_binary(ch).value; }, py::arg("channel"));
  m.def("weighted_rate",
        [](const BroadcastChannel& ch, double alpha) {
          const auto r = weighted_rate_support(ch, alpha);
          return py::make_tuple(r.direct.value, r.swapped.value);
        },
        py::arg("channel"), py::arg("alpha"));

  m.def("certify",
        [](const BroadcastChannel& ch, const Eigen::MatrixXd& p_uv, const std::vector<std::vector<int>>& f) {
          const CouplingWithMap c(p_uv, DeterministicMap::from_rows(f, ch.x_size()));
          const CertificateReport r = certify_local_max(c, ch, SimplexVector(Eigen::VectorXd(c.induced_px())));
          py::dict d;
          d["verdict"] = verdict_name(r.verdict);
          d["reason"] = r.reason;
          d["stationarity_residual"] = r.stationarity_residual;
          d["min_eig_projected"] = r.min_eig_projected;
          d["witness_kind"] = r.witness ? py::cast(r.witness->kind) : py::none();
          return d;
        },
        py::arg("channel"), py::arg("p_uv"), py::arg("f"));

  m.def("maximal_correlation_sq",
        [](const Eigen::MatrixXd& joint) {
          const CorrelationResult r = maximal_correlation_sq(joint);
          return py::make_tuple(r.c_prime, r.witness_l, r.witness_t);
        },
        py::arg("joint"), "(c', L over columns, T over rows) for a joint with rows U, columns X");
  m.def("xor_bounds",
        [](const Eigen::Matrix2d& p) {
          const XorBounds b = xor_bounds(p);
          return py::make_tuple(b.bound_u, b.bound_v);
        },
        py::arg("p_uv"));
  m.def("c_envelope_binary",
        [](const Eigen::MatrixXd& p_u_given_x, const Eigen::VectorXd& p_x) {
          return c_envelope_binary(StochasticMatrix(p_u_given_x), SimplexVector(p_x));
        },
        py::arg("p_u_given_x"), py::arg("p_x"));

  m.def("g_function", &g_function, py::arg("x"));
  m.def("alpha_bound", &alpha_bound, py::arg("x"));
  m.def("condition2_root", &condition2_root, py::arg("alpha"));

  m.def("conj1_check",
        [](const BroadcastChannel& a, const BroadcastChannel& b, const Eigen::VectorXd& p, double lambda) {
          return verdict_dict(conj1_check(a, b, SimplexVector(p), lambda));
        },
        py::arg("ch1"), py::arg("ch2"), py::arg("p_x1x2"), py::arg("lambda_"));
  m.def("conj3_check",
        [](const BroadcastChannel& ch, double lambda, double alpha) {
          return verdict_dict(conj3_check(ch, lambda, alpha));
        },
        py::arg("channel"), py::arg("lambda_"), py::arg("alpha"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int code = cli::run(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command-line subcommand; returns (exit_code, stdout, stderr)");
}
