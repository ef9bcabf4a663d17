#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qpl/cli.hpp"
#include "qpl/errors.hpp"
#include "qpl/gains.hpp"
#include "qpl/io.hpp"
#include "qpl/predictor.hpp"
#include "qpl/quantizer.hpp"
#include "qpl/sim.hpp"
#include "qpl/verify.hpp"

namespace py = pybind11;

namespace {

// Dicts cross the boundary as JSON text; the Python side decodes them.
std::string gains_json(double L, double D, double kappa0, double M_sigma, double sigma, double b3,
                       double lambda, double eps, double nu, double delta, double M, double Delta,
                       double mu0, double tau) {
  const qpl::DesignParams d{lambda, eps, nu, delta, M, Delta, mu0, tau};
  return qpl::io::to_json(qpl::compute_gains(L, D, kappa0, {M_sigma, sigma, b3}, d)).dump();
}

py::dict simulate(const std::string& config_json) {
  const auto scenario = qpl::resolve(qpl::io::config_from_json(qpl::io::json::parse(config_json)));
  qpl::SimTrace trace;
  {
    py::gil_scoped_release release;
    trace = qpl::run(scenario);
  }
  std::vector<double> t, norm, U, mu;
  std::vector<std::vector<double>> X;
  for (const auto& r : trace.records) {
    t.push_back(r.t);
    norm.push_back(r.norm);
    U.push_back(r.U);
    mu.push_back(r.mu);
    X.emplace_back(r.X.data(), r.X.data() + r.X.size());
  }
  py::dict out;
  out["t"] = t;
  out["X"] = X;
  out["norm"] = norm;
  out["U"] = U;
  out["mu"] = mu;
  out["t1_star"] = trace.t1_star;
  out["blew_up"] = trace.blew_up;
  out["ledger_json"] = qpl::io::to_json(scenario.ledger).dump();
  out["report_json"] = qpl::io::to_json(qpl::verify_trace(trace, scenario.ledger)).dump();
  out["trace_csv"] = qpl::io::trace_csv(trace);
  out["warnings"] = scenario.warnings;
  return out;
}

double quantize(double v, double M, double Delta, double M_hat, double rho, double mu) {
  const qpl::QuantizerSpec q{M, Delta, M_hat, rho, qpl::QuantizerKind::Ramped};
  q.validate();
  return mu * qpl::base_quantize(q, v / mu);
}

std::vector<double> predict(const std::string& plant_id, const std::vector<double>& X,
                            const std::vector<double>& u, double D) {
  const auto entry = qpl::find_builtin(plant_id, D);
  if (!entry) throw qpl::ConfigError("unknown plant id '" + plant_id + "'");
  const qpl::Vec x = Eigen::Map<const qpl::Vec>(X.data(), static_cast<Eigen::Index>(X.size()));
  const auto p = qpl::predictor_exact(entry->plant, x, qpl::ActuatorGrid(u));
  std::vector<double> out;
  for (const auto& v : p.values) out.insert(out.end(), v.data(), v.data() + v.size());
  return out;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = qpl::cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantized predictor feedback core";
  py::register_exception<qpl::Error>(m, "QplError", PyExc_RuntimeError);

  m.def("gains_json", &gains_json, py::arg("L"), py::arg("D"), py::arg("kappa0"),
        py::arg("M_sigma"), py::arg("sigma"), py::arg("b3"), py::arg("lam") = 8.0,
        py::arg("eps") = 0.1, py::arg("nu") = 0.1, py::arg("delta") = 0.05, py::arg("M") = 10.0,
        py::arg("Delta") = 5e-5, py::arg("mu0") = 1.0, py::arg("tau") = 0.5);
  m.def("simulate", &simulate, py::arg("config_json"));
  m.def("quantize", &quantize, py::arg("v"), py::arg("M"), py::arg("Delta"), py::arg("M_hat"),
        py::arg("rho") = 0.25, py::arg("mu") = 1.0);
  m.def("predict", &predict, py::arg("plant_id"), py::arg("X"), py::arg("u"), py::arg("D") = 1.0,
        "Predictor values p(x) on the actuator grid, flattened row by row.");
  m.def("run_cli", &run_cli, py::arg("args"));
  m.attr("__version__") = qpl::cli::kToolVersion;
}
