#include "xtalk/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "xtalk/error.hpp"

namespace xtalk {

using nlohmann::json;

ScheduleModel::ScheduleModel(const CircuitIR& ir, const DeviceModel& device, const CanOverlapOptions& options)
    : ir_(bind_to_device(ir, device)), device_(device), options_(options) {
  const int n = ir_.size();
  durations_.resize(n);
  for (InstrId id = 0; id < n; ++id) {
    durations_[id] = instruction_duration(ir_.at(id), device_);
    total_duration_ += durations_[id];
  }
  for (InstrId m : ir_.measure_instructions()) {
    for (InstrId id = m + 1; id < n; ++id) {
      if (ir_.at(id).op != OpKind::Barrier && ir_.is_ancestor(m, id)) {
        throw InvariantError("instruction " + std::to_string(id) + " depends on readout " + std::to_string(m) +
                             "; readouts must come last");
      }
    }
  }
  candidates_ = candidate_overlaps(ir_, device_, options_);
  for (auto [i, j] : candidates_.pairs) {
    conditional_error(i, j);
    conditional_error(j, i);
  }
  qubit_instructions_.assign(ir_.n_qubits(), {});
  for (const auto& in : ir_.instructions()) {
    if (in.op == OpKind::Barrier) continue;
    for (QubitId q : in.qubits) qubit_instructions_[q].push_back(in.id);
  }
  used_qubits_ = ir_.used_qubits();
}

double ScheduleModel::independent_error(InstrId id) const {
  const auto& in = ir_.at(id);
  if (!in.is_gate()) throw ArgumentError("instruction " + std::to_string(id) + " is not a gate");
  return device_.gate(*in.hw_gate).independent_error;
}

double ScheduleModel::conditional_error(InstrId i, InstrId j) const {
  const GateId gi = *ir_.at(i).hw_gate;
  const GateId gj = *ir_.at(j).hw_gate;
  auto e = device_.conditional_error(gi, gj);
  if (!e) {
    throw InvariantError("instructions " + std::to_string(i) + " and " + std::to_string(j) +
                         " may overlap but E(" + std::to_string(gi) + "|" + std::to_string(gj) +
                         ") is not characterized");
  }
  return *e;
}

double ScheduleModel::gate_error(InstrId i, std::span<const InstrId> overlapping) const {
  if (overlapping.empty()) return independent_error(i);
  double worst = 0.0;
  for (InstrId j : overlapping) worst = std::max(worst, conditional_error(i, j));
  return worst;
}

ModelEvaluation evaluate_model(const ScheduleModel& model, std::span<const TimeNs> start_ns) {
  const auto& ir = model.ir();
  if (static_cast<int>(start_ns.size()) != ir.size()) {
    throw ArgumentError("schedule has " + std::to_string(start_ns.size()) + " start times for " +
                        std::to_string(ir.size()) + " instructions");
  }
  ModelEvaluation ev;
  if (ir.size() == 0) {
    ev.per_qubit_lifetime_ns.assign(ir.n_qubits(), 0);
    return ev;
  }
  TimeNs first = std::numeric_limits<TimeNs>::max();
  TimeNs horizon = std::numeric_limits<TimeNs>::min();
  for (InstrId id = 0; id < ir.size(); ++id) {
    first = std::min(first, start_ns[id]);
    horizon = std::max(horizon, start_ns[id] + model.duration(id));
  }
  ev.makespan_ns = horizon - first;

  for (const auto& in : ir.instructions()) {
    if (!in.is_gate()) continue;
    std::vector<InstrId> overlapping;
    for (InstrId j : model.candidates_of(in.id)) {
      if (intervals_overlap(start_ns[in.id], model.duration(in.id), start_ns[j], model.duration(j))) {
        overlapping.push_back(j);
      }
    }
    double e = model.gate_error(in.id, overlapping);
    ev.per_gate_error[in.id] = e;
    if (in.op == OpKind::Cx) ev.log_error_sum += std::log(e);
  }

  ev.per_qubit_lifetime_ns.assign(ir.n_qubits(), 0);
  for (QubitId q : model.used_qubits()) {
    TimeNs q_first = std::numeric_limits<TimeNs>::max();
    for (InstrId id : model.qubit_instructions()[q]) q_first = std::min(q_first, start_ns[id]);
    TimeNs life = horizon - q_first;
    ev.per_qubit_lifetime_ns[q] = life;
    ev.lifetime_sum += static_cast<double>(life) / model.coherence_ns(q);
  }
  return ev;
}

Schedule make_schedule(const ScheduleModel& model, std::vector<TimeNs> start_ns, double omega, std::string name,
                       bool barrier_enforced, SolverStats stats) {
  if (!start_ns.empty()) {
    TimeNs first = *std::min_element(start_ns.begin(), start_ns.end());
    for (auto& t : start_ns) t -= first;
  }
  auto ev = evaluate_model(model, start_ns);
  Schedule s;
  s.name = std::move(name);
  s.start_ns = std::move(start_ns);
  s.makespan_ns = ev.makespan_ns;
  s.per_gate_error = std::move(ev.per_gate_error);
  s.per_qubit_lifetime_ns = std::move(ev.per_qubit_lifetime_ns);
  s.objective = ev.objective(omega);
  s.omega = omega;
  s.gamma = model.gamma();
  s.barrier_enforced = barrier_enforced;
  s.stats = std::move(stats);
  return s;
}

std::string schedule_to_json(const Schedule& schedule, bool with_timing) {
  nlohmann::ordered_json doc;
  doc["name"] = schedule.name;
  doc["omega"] = schedule.omega;
  doc["gamma"] = schedule.gamma;
  doc["objective"] = schedule.objective;
  doc["barrier_enforced"] = schedule.barrier_enforced;
  doc["makespan_ns"] = schedule.makespan_ns;
  nlohmann::ordered_json stats;
  stats["backend"] = schedule.stats.backend;
  stats["nodes"] = schedule.stats.nodes;
  stats["optimal"] = schedule.stats.optimal;
  if (with_timing) stats["solve_time_s"] = schedule.stats.solve_time_s;
  doc["solver"] = stats;
  doc["start_ns"] = schedule.start_ns;
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (auto [id, e] : schedule.per_gate_error) errors[std::to_string(id)] = e;
  doc["per_gate_error"] = errors;
  doc["per_qubit_lifetime_ns"] = schedule.per_qubit_lifetime_ns;
  return doc.dump(2) + "\n";
}

Schedule parse_schedule(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  static const std::set<std::string> allowed{"name",   "omega",    "gamma",          "objective",
                                             "barrier_enforced", "makespan_ns", "solver", "start_ns",
                                             "per_gate_error",   "per_qubit_lifetime_ns"};
  if (!doc.is_object()) throw ParseError("expected an object", 0, "schedule");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!allowed.count(it.key())) throw ParseError("unknown key '" + it.key() + "'", 0, it.key());
  }
  Schedule s;
  try {
    s.name = doc.value("name", "");
    s.omega = doc.at("omega").get<double>();
    s.gamma = doc.value("gamma", kDefaultGamma);
    s.objective = doc.at("objective").get<double>();
    s.barrier_enforced = doc.value("barrier_enforced", false);
    s.makespan_ns = doc.at("makespan_ns").get<TimeNs>();
    if (doc.contains("solver")) {
      const auto& st = doc.at("solver");
      s.stats.backend = st.value("backend", "");
      s.stats.nodes = st.value("nodes", std::int64_t{0});
      s.stats.optimal = st.value("optimal", true);
      s.stats.solve_time_s = st.value("solve_time_s", 0.0);
    }
    s.start_ns = doc.at("start_ns").get<std::vector<TimeNs>>();
    for (auto& [key, value] : doc.at("per_gate_error").items()) s.per_gate_error[std::stoi(key)] = value.get<double>();
    s.per_qubit_lifetime_ns = doc.at("per_qubit_lifetime_ns").get<std::vector<TimeNs>>();
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 0, "schedule");
  } catch (const std::invalid_argument&) {
    throw ParseError("gate ids must be integers", 0, "per_gate_error");
  }
  return s;
}

}  // namespace xtalk
