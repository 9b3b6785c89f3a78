// Python bindings: the main operations on extension specs, with JSON documents
// passed as strings and vectors as NumPy arrays.

#include "nilflow/algebra.hpp"
#include "nilflow/group.hpp"
#include "nilflow/heatkernel.hpp"
#include "nilflow/io.hpp"
#include "nilflow/stochastic.hpp"
#include "nilflow/tensor_norms.hpp"
#include "nilflow/version.hpp"
#include "nilflow/zoo.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nilflow;

namespace {

Element to_element(const ExtensionSpec& spec, const Eigen::VectorXd& x) {
  if (x.size() != spec.dim())
    throw ShapeError("expected a vector of length m + N = " + std::to_string(spec.dim()));
  return Element(spec.m(), x);
}

SimConfig make_config(double t, int steps, long long trials, std::uint64_t seed,
                      const std::string& engine, int threads) {
  SimConfig cfg;
  cfg.t = t;
  cfg.steps = steps;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.engine = parse_engine(engine);
  cfg.threads = threads;
  return cfg;
}

std::vector<CylinderPolynomial> suite_for(const ExtensionSpec& spec, const std::string& test) {
  return default_suite(spec.m(), spec.n(), test == "quasi" ? Squash::TanhSquared : Squash::Tanh);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Nilpotent extension groups, their heat kernel measures and Monte Carlo checks.";
  mod.attr("__version__") = kVersion;

  py::register_exception<ShapeError>(mod, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
  py::register_exception<SpecError>(mod, "SpecError", PyExc_ValueError);

  py::class_<ExtensionSpec>(mod, "ExtensionSpec")
      .def(py::init<int, int, int, std::vector<double>, std::vector<double>, std::vector<double>>(),
           py::arg("m"), py::arg("n"), py::arg("step"), py::arg("omega"), py::arg("alpha"),
           py::arg("v_bracket"))
      .def_static(
          "from_json",
          [](const std::string& text) { return spec_from_json(nlohmann::json::parse(text)); },
          py::arg("text"))
      .def("to_json", [](const ExtensionSpec& s) { return spec_to_json(s).dump(); })
      .def_property_readonly("m", &ExtensionSpec::m)
      .def_property_readonly("n", &ExtensionSpec::n)
      .def_property_readonly("dim", &ExtensionSpec::dim)
      .def_property_readonly("step", &ExtensionSpec::step)
      .def("hash", [](const ExtensionSpec& s) { return spec_hash(s); })
      .def("__repr__", [](const ExtensionSpec& s) {
        return "<ExtensionSpec m=" + std::to_string(s.m()) + " N=" + std::to_string(s.n()) +
               " step=" + std::to_string(s.step()) + ">";
      });

  mod.def(
      "zoo",
      [](const std::string& name, int m, int grid) { return build_named_model(name, m, grid).spec; },
      py::arg("name"), py::arg("m") = 2, py::arg("grid") = 3);

  mod.def(
      "validate",
      [](const ExtensionSpec& s, double tol) { return validation_to_json(validate_extension(s, tol)).dump(); },
      py::arg("spec"), py::arg("tol") = 1e-9, "Validation report as a JSON string.");

  mod.def(
      "bracket",
      [](const ExtensionSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return Eigen::VectorXd(bracket(s, to_element(s, x), to_element(s, y)).coords());
      },
      py::arg("spec"), py::arg("x"), py::arg("y"));

  mod.def(
      "multiply",
      [](const ExtensionSpec& s, const Eigen::VectorXd& g, const Eigen::VectorXd& h) {
        return Eigen::VectorXd(bchd_multiply(s, to_element(s, g), to_element(s, h)).coords());
      },
      py::arg("spec"), py::arg("g"), py::arg("h"));

  mod.def(
      "inverse",
      [](const ExtensionSpec& s, const Eigen::VectorXd& g) {
        return Eigen::VectorXd(inverse(to_element(s, g)).coords());
      },
      py::arg("spec"), py::arg("g"));

  mod.def(
      "ricci",
      [](const ExtensionSpec& s) {
        const RicciResult r = ricci_form(s);
        py::dict d;
        d["form"] = r.form;
        d["eigenvalues"] = r.eigenvalues;
        d["k_p"] = r.k_p;
        d["k_estimate"] = r.k_estimate;
        return d;
      },
      py::arg("spec"));

  mod.def(
      "distance_bounds",
      [](const ExtensionSpec& s, const Eigen::VectorXd& y) {
        const DistanceBounds b = distance_bounds(s, to_element(s, y));
        py::dict d;
        d["lower"] = b.lower;
        d["upper"] = b.upper;
        d["straight_line"] = b.straight_line;
        d["epsilon0"] = b.epsilon0;
        d["kappa"] = b.kappa;
        return d;
      },
      py::arg("spec"), py::arg("y"));

  mod.def(
      "norms",
      [](const ExtensionSpec& s, int restarts) {
        return norm_report_to_json(check_norm_inequalities(s, restarts)).dump();
      },
      py::arg("spec"), py::arg("restarts") = 32, "Norm report as a JSON string.");

  mod.def(
      "simulate",
      [](const ExtensionSpec& s, double t, int steps, long long trials, std::uint64_t seed,
         const std::string& engine, int threads) {
        const SimConfig cfg = make_config(t, steps, trials, seed, engine, threads);
        py::gil_scoped_release release;
        return Eigen::MatrixXd(sample_endpoints(s, cfg).transpose());
      },
      py::arg("spec"), py::arg("t") = 1.0, py::arg("steps") = 256, py::arg("trials") = 1000,
      py::arg("seed") = 0, py::arg("engine") = "rollout", py::arg("threads") = 1,
      "Endpoints, one row per trial.");

  mod.def(
      "verify",
      [](const ExtensionSpec& s, const std::string& test, double t, int steps, long long trials,
         std::uint64_t seed, std::optional<Eigen::VectorXd> h, double p,
         std::vector<int> ells, int threads) {
        const SimConfig cfg = make_config(t, steps, trials, seed, "rollout", threads);
        MCReport rep;
        {
          py::gil_scoped_release release;
          if (test == "inversion") {
            rep = inversion_invariance_test(s, suite_for(s, test), cfg);
          } else if (test == "logsob") {
            rep = log_sobolev_test(s, suite_for(s, test), cfg);
          } else if (test == "quasi") {
            const Element shift =
                h ? to_element(s, *h) : basis_element(s.m(), s.n(), 0);
            rep = quasi_invariance_test(s, shift, p, suite_for(s, test), cfg);
          } else if (test == "convergence") {
            rep = projection_convergence_study(s, ells, cfg);
          } else {
            throw DomainError("unknown test '" + test + "'");
          }
        }
        return report_to_json(rep).dump();
      },
      py::arg("spec"), py::arg("test"), py::arg("t") = 1.0, py::arg("steps") = 256,
      py::arg("trials") = 10000, py::arg("seed") = 0, py::arg("h") = py::none(),
      py::arg("p") = 2.0, py::arg("ells") = std::vector<int>{}, py::arg("threads") = 1,
      "Monte Carlo report as a JSON string.");
}
