#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "xtalk/characterization.hpp"
#include "xtalk/circuit.hpp"
#include "xtalk/cli.hpp"
#include "xtalk/device.hpp"
#include "xtalk/error.hpp"
#include "xtalk/evaluator.hpp"
#include "xtalk/schedule.hpp"
#include "xtalk/scheduler.hpp"

namespace py = pybind11;

namespace xtalk {
namespace {

py::dict report_to_dict(const EvalReport& r) {
  py::dict d;
  d["schedule_name"] = r.schedule_name;
  d["omega"] = r.omega;
  d["analytic_success"] = r.analytic_success;
  d["analytic_error"] = r.analytic_error;
  d["mc_trials"] = r.mc_trials;
  d["mc_success"] = r.mc_success;
  d["mc_ci_low"] = r.mc_ci_low;
  d["mc_ci_high"] = r.mc_ci_high;
  d["makespan_ns"] = r.makespan_ns;
  d["per_gate_error"] = r.per_gate_error;
  d["per_qubit_decoherence"] = r.per_qubit_decoherence;
  return d;
}

Schedule run_scheduler(const DeviceModel& device, const CircuitIR& circuit, const std::string& scheduler,
                       double omega, const std::string& backend, double timeout_s, int cap, double gamma) {
  if (scheduler == "serial") return series_schedule(circuit, device, omega, gamma);
  if (scheduler == "parallel") return parallel_schedule(circuit, device, omega, gamma);
  if (scheduler != "xtalk") throw ArgumentError("unknown scheduler '" + scheduler + "'");
  CanOverlapOptions can;
  can.cap = cap;
  can.gamma = gamma;
  SolveOptions options;
  options.backend = parse_backend(backend);
  options.timeout_s = timeout_s;
  py::gil_scoped_release release;
  return solve(build_problem(circuit, device, omega, can), options);
}

}  // namespace
}  // namespace xtalk

PYBIND11_MODULE(_core, m) {
  using namespace xtalk;
  m.doc() = "Crosstalk-adaptive instruction scheduling";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<VerificationError>(m, "VerificationError", base.ptr());

  py::class_<DeviceModel>(m, "Device")
      .def_static("load", &load_device, py::arg("path"))
      .def_static("from_json", [](const std::string& text) { return parse_device(text); }, py::arg("text"))
      .def("to_json", [](const DeviceModel& d) { return device_to_json(d); })
      .def_property_readonly("num_qubits", &DeviceModel::num_qubits)
      .def_property_readonly("edges", &DeviceModel::edges)
      .def("cx_gates", &DeviceModel::cx_gates)
      .def("shortest_path", &DeviceModel::shortest_path, py::arg("a"), py::arg("b"))
      .def("conditional_error", &DeviceModel::conditional_error, py::arg("gate"), py::arg("spectator"));

  py::class_<CircuitIR>(m, "Circuit")
      .def_static("load", &load_circuit, py::arg("path"))
      .def_static("parse", [](const std::string& text) { return parse_circuit(text); }, py::arg("text"))
      .def("to_text", [](const CircuitIR& c) { return serialize_circuit(c); })
      .def_property_readonly("n_qubits", &CircuitIR::n_qubits)
      .def("__len__", &CircuitIR::size)
      .def("cx_instructions", &CircuitIR::cx_instructions)
      .def("dag_edges", &CircuitIR::dag_edges);

  py::class_<Schedule>(m, "Schedule")
      .def_readonly("name", &Schedule::name)
      .def_readonly("start_ns", &Schedule::start_ns)
      .def_readonly("makespan_ns", &Schedule::makespan_ns)
      .def_readonly("per_gate_error", &Schedule::per_gate_error)
      .def_readonly("per_qubit_lifetime_ns", &Schedule::per_qubit_lifetime_ns)
      .def_readonly("objective", &Schedule::objective)
      .def_readonly("omega", &Schedule::omega)
      .def_readonly("barrier_enforced", &Schedule::barrier_enforced)
      .def_property_readonly("optimal", [](const Schedule& s) { return s.stats.optimal; })
      .def_property_readonly("solve_time_s", [](const Schedule& s) { return s.stats.solve_time_s; })
      .def("to_json", [](const Schedule& s) { return schedule_to_json(s); })
      .def_static("from_json", [](const std::string& text) { return parse_schedule(text); }, py::arg("text"));

  m.def("schedule", &run_scheduler, py::arg("device"), py::arg("circuit"), py::arg("scheduler") = "xtalk",
        py::arg("omega") = 0.5, py::arg("backend") = "internal", py::arg("timeout_s") = 600.0, py::arg("cap") = 10,
        py::arg("gamma") = kDefaultGamma,
        "Schedules a circuit with 'xtalk' (optimizing), 'serial' or 'parallel'.");

  m.def(
      "verify",
      [](const DeviceModel& d, const CircuitIR& c, const Schedule& s) {
        std::vector<std::tuple<std::string, std::string>> out;
        for (const auto& v : verify_schedule(c, d, s)) out.emplace_back(std::string(to_string(v.kind)), v.message);
        return out;
      },
      py::arg("device"), py::arg("circuit"), py::arg("schedule"), "List of (kind, message) violations.");

  m.def(
      "analytic_success",
      [](const DeviceModel& d, const CircuitIR& c, const Schedule& s) { return report_to_dict(analytic_success(c, d, s)); },
      py::arg("device"), py::arg("circuit"), py::arg("schedule"));
  m.def(
      "monte_carlo_success",
      [](const DeviceModel& d, const CircuitIR& c, const Schedule& s, std::int64_t trials, std::uint64_t seed) {
        return report_to_dict(monte_carlo_success(c, d, s, trials, seed));
      },
      py::arg("device"), py::arg("circuit"), py::arg("schedule"), py::arg("trials") = 100000, py::arg("seed") = 0);

  m.def(
      "estimate_cost",
      [](std::int64_t experiments, int sequences, int trials) {
        auto c = estimate_cost(experiments, sequences, trials);
        return py::make_tuple(c.executions, c.wall_time_s);
      },
      py::arg("experiments"), py::arg("sequences") = 100, py::arg("trials") = 1024,
      "(executions, wall-time seconds) of a characterization campaign.");

  m.def(
      "fit_rb",
      [](const std::vector<int>& lengths, const std::vector<double>& survival) {
        auto f = fit_rb(lengths, survival);
        py::dict d;
        d["A"] = f.A;
        d["alpha"] = f.alpha;
        d["B"] = f.B;
        d["epc"] = f.epc;
        d["cx_error"] = f.cx_error;
        return d;
      },
      py::arg("lengths"), py::arg("survival"));

  m.def("gen_random_circuit", &gen_random_circuit, py::arg("device"), py::arg("n_qubits"), py::arg("depth"),
        py::arg("seed"));
  m.def(
      "gen_swap_path",
      [](const DeviceModel& d, QubitId a, QubitId b) {
        auto r = gen_swap_path(d, a, b);
        return py::make_tuple(r.circuit, r.path);
      },
      py::arg("device"), py::arg("a"), py::arg("b"), "(circuit, qubit path) of a SWAP chain realizing cx a b.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"xtalk"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code = run_cli(argv, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool; returns (exit code, stdout, stderr).");
}
