#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>

#include "twist/bicomplex.hpp"
#include "twist/cli.hpp"
#include "twist/jlo.hpp"
#include "twist/residue.hpp"

namespace py = pybind11;
using namespace twist;

namespace {

std::vector<jlo::Element> elements(const std::vector<std::tuple<models::Mat, double, int>>& a) {
  std::vector<jlo::Element> out;
  for (const auto& [op, g, parity] : a) out.push_back({op, g, parity});
  return out;
}

std::vector<residue::Input> inputs(const std::vector<std::tuple<models::Mat, double, int>>& a) {
  std::vector<residue::Input> out;
  for (const auto& [op, g, order] : a) out.push_back({op, g, order});
  return out;
}

}  // namespace

PYBIND11_MODULE(_twist, m) {
  m.doc() = "Twisted spectral triples: symbolic algebra, model truncations, JLO brackets, residues";

  auto nc = m.def_submodule("ncalg");
  nc.def("normalize", [](const std::string& s) { return ncalg::Expr::parse(s).str(); });
  nc.def("equal", [](const std::string& a, const std::string& b) { return ncalg::Expr::parse(a) == ncalg::Expr::parse(b); });
  nc.def(
      "sigma",
      [](const std::string& s, int k, bool crossed) {
        ncalg::Context c;
        if (crossed) c.mode = ncalg::SigmaMode::CrossedProduct;
        return ncalg::apply_sigma(ncalg::Expr::parse(s), k, c).str();
      },
      py::arg("expr"), py::arg("k") = 1, py::arg("crossed_product") = false);
  nc.def(
      "trace_normal_form",
      [](const std::string& s, bool sigmaInvariance) {
        ncalg::TraceRules r;
        r.sigmaInvariance = sigmaInvariance;
        return ncalg::trace_normal_form(ncalg::TraceExpr::parse(s), {}, r).str();
      },
      py::arg("trace_expr"), py::arg("sigma_invariance") = false);

  auto bc = m.def_submodule("bicomplex");
  bc.def("b_kappa_is_zero", [](int p) {
    ncalg::Context c;
    return ncalg::trace_normal_form(bicomplex::hochschild_b(bicomplex::build_kappa(p, c)).on_letters(), c, {}).is_zero();
  });
  bc.def("verify_cocycle_identity", [](int q, int kmax) { return bicomplex::verify_cocycle_identity(q, kmax).pass; });

  auto mo = m.def_submodule("models");
  py::class_<models::ModelTriple>(mo, "ModelTriple")
      .def_readonly("kind", &models::ModelTriple::kind)
      .def_readonly("outer_dim", &models::ModelTriple::outerDim)
      .def_readonly("labels", &models::ModelTriple::labels)
      .def_readonly("inner", &models::ModelTriple::inner)
      .def_readonly("mu", &models::ModelTriple::mu)
      .def_property_readonly("D", [](const models::ModelTriple& t) { return t.D; })
      .def_property_readonly("dsq", [](const models::ModelTriple& t) { return t.dsq; })
      .def_property_readonly("algebra", [](const models::ModelTriple& t) { return t.algebra; })
      .def("twisted_commutator", &models::ModelTriple::twisted_commutator, py::arg("X"), py::arg("g") = 1.0);
  mo.def("build_circle", &models::build_circle, py::arg("N"), py::arg("inner_fraction") = 0.5);
  mo.def("build_scaling", &models::build_scaling, py::arg("window_lo"), py::arg("window_hi"), py::arg("mu"),
         py::arg("collar") = 2);
  mo.def("graded_double", &models::graded_double);
  mo.def("shift", &models::shift);
  mo.def("trig_poly", &models::trig_poly);
  mo.def("scaling_function", &models::scaling_function);
  mo.def("scaling_power", &models::scaling_power);

  auto jl = m.def_submodule("jlo");
  jl.def("simplex_exp_integral", &jlo::simplex_exp_integral);
  jl.def(
      "eval_bracket",
      [](const models::ModelTriple& t, const std::vector<std::tuple<models::Mat, double, int>>& a, double tt) {
        return jlo::eval_bracket(t, elements(a), tt).value;
      },
      "entries are (op, group factor, parity)");
  jl.def("J", [](const models::ModelTriple& t, const std::string& family, double tau,
                 const std::vector<std::tuple<models::Mat, double, int>>& a) {
    return jlo::J(t, family == "phase" ? jlo::Family::Phase : jlo::Family::Scale, tau, elements(a));
  });

  auto rs = m.def_submodule("residue");
  rs.def("hurwitz_zeta", &residue::hurwitz_zeta);
  rs.def("residue", [](const models::ModelTriple& t, const models::Mat& P) {
    auto q = residue::residue_functional(t, P);
    return py::make_tuple(q.value, q.crossCheck, q.errorBound);
  });
  rs.def("fredholm_index", [](const models::ModelTriple& t, const models::Mat& u) {
    return residue::fredholm_index(t, u).index;
  });
  rs.def("phase_pairing", [](const models::ModelTriple& t, const std::vector<std::tuple<models::Mat, double, int>>& a) {
    return residue::chern_pairing(t, residue::PairingMode::Phase, inputs(a));
  });
  rs.def("gimel", [](const models::ModelTriple& t, int q, const std::vector<std::tuple<models::Mat, double, int>>& a) {
    return residue::gimel(t, q, inputs(a)).value.value;
  });

  auto cl = m.def_submodule("cli");
  cl.def("suite_names", &cli::suite_names);
  cl.def("catalog", [] {
    py::list out;
    for (const auto& c : cli::catalog()) {
      py::dict d;
      d["name"] = c.name;
      d["suite"] = c.suite;
      d["anchor"] = c.anchor;
      d["provenance"] = cli::to_string(c.provenance);
      d["oracle"] = c.oracle;
      d["tolerance"] = c.tolerance;
      out.append(d);
    }
    return out;
  });
  // report as a JSON string; the Python wrapper decodes it
  cl.def(
      "run_report",
      [](const std::string& text, int threads) {
        auto cfg = cli::parse_config(text, "<python>");
        py::gil_scoped_release release;
        return cli::run_suites(cfg, threads).json.dump();
      },
      py::arg("config_text"), py::arg("threads") = 1);
  py::register_exception<cli::ConfigError>(cl, "ConfigError", PyExc_ValueError);
}
