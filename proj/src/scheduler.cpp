#include "xtalk/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "lateness.hpp"
#include "solvers.hpp"
#include "xtalk/error.hpp"

namespace xtalk {

namespace detail {

std::vector<TimeNs> serial_starts(const ScheduleModel& model) {
  const auto& ir = model.ir();
  const int n = ir.size();
  std::vector<TimeNs> starts(n, 0);
  std::vector<char> after_readout(n, 0);
  for (InstrId m : ir.measure_instructions()) {
    for (InstrId id = m + 1; id < n; ++id) {
      if (ir.is_ancestor(m, id)) after_readout[id] = 1;
    }
  }
  TimeNs t = 0;
  for (InstrId id = 0; id < n; ++id) {
    if (ir.at(id).op == OpKind::Measure || after_readout[id]) continue;
    starts[id] = t;
    t += model.duration(id);
  }
  for (InstrId m : ir.measure_instructions()) starts[m] = t;
  for (InstrId id = 0; id < n; ++id) {
    if (!after_readout[id]) continue;
    TimeNs ready = 0;
    for (InstrId p : ir.predecessors(id)) ready = std::max(ready, starts[p] + model.duration(p));
    starts[id] = ready;
  }
  return starts;
}

}  // namespace detail

namespace {

CanOverlapOptions options_for(double gamma) {
  CanOverlapOptions options;
  options.gamma = gamma;
  return options;
}

std::vector<TimeNs> alap_starts(const ScheduleModel& model) {
  detail::LatenessGraph graph(model);
  std::vector<TimeNs> lateness;
  if (!graph.fixpoint(lateness)) throw InvariantError("dependency constraints are cyclic");
  return detail::LatenessGraph::to_starts(lateness);
}

}  // namespace

Schedule solve(const OptimizationProblem& problem, const SolveOptions& options) {
  if (!problem.model) throw ArgumentError("problem has no model");
  if (options.backend == Backend::Internal) return detail::solve_internal(problem, options);
  return detail::solve_smtlib(problem, options);
}

Schedule series_schedule(const CircuitIR& ir, const DeviceModel& device, double omega, double gamma) {
  ScheduleModel model(ir, device, options_for(gamma));
  SolverStats stats;
  stats.backend = "serial";
  return make_schedule(model, detail::serial_starts(model), omega, "serial", false, stats);
}

Schedule parallel_schedule(const CircuitIR& ir, const DeviceModel& device, double omega, double gamma) {
  ScheduleModel model(ir, device, options_for(gamma));
  SolverStats stats;
  stats.backend = "parallel";
  return make_schedule(model, alap_starts(model), omega, "parallel", false, stats);
}

std::vector<std::pair<InstrId, InstrId>> overlapping_pairs(const ScheduleModel& model,
                                                           const std::vector<TimeNs>& start_ns) {
  std::vector<std::pair<InstrId, InstrId>> out;
  for (auto [i, j] : model.candidates().pairs) {
    if (intervals_overlap(start_ns.at(i), model.duration(i), start_ns.at(j), model.duration(j))) {
      out.emplace_back(i, j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Barrier insertion

namespace {

struct PendingBarrier {
  TimeNs time;
  std::vector<QubitId> qubits;
};

// Earliest time in [from, to] at which no instruction on `qubits` is running.
TimeNs fence_time(const ScheduleModel& model, const std::vector<TimeNs>& starts, const std::vector<QubitId>& qubits,
                  TimeNs from, TimeNs to) {
  std::set<TimeNs> points{from, to};
  for (QubitId q : qubits) {
    for (InstrId id : model.qubit_instructions()[q]) {
      for (TimeNs t : {starts[id], starts[id] + model.duration(id)}) {
        if (t > from && t < to) points.insert(t);
      }
    }
  }
  for (TimeNs t : points) {
    bool clear = true;
    for (QubitId q : qubits) {
      for (InstrId id : model.qubit_instructions()[q]) {
        if (starts[id] < t && t < starts[id] + model.duration(id)) clear = false;
      }
    }
    if (clear) return t;
  }
  return from;
}

BarrieredCircuit emit_with_barriers(const ScheduleModel& model, const std::vector<TimeNs>& starts,
                                    const std::vector<PendingBarrier>& barriers) {
  const auto& ir = model.ir();
  BarrieredCircuit out;
  out.new_id.resize(ir.size());
  out.barriers_added = static_cast<int>(barriers.size());

  // (time, kind, index): new barriers sort ahead of instructions starting at
  // the same time.
  std::vector<std::tuple<TimeNs, int, int>> events;
  for (InstrId id = 0; id < ir.size(); ++id) {
    events.emplace_back(barriers.empty() ? 0 : starts[id], 1, id);
  }
  for (std::size_t k = 0; k < barriers.size(); ++k) events.emplace_back(barriers[k].time, 0, static_cast<int>(k));
  std::stable_sort(events.begin(), events.end());

  std::vector<Instruction> list;
  for (auto [time, kind, index] : events) {
    Instruction in;
    if (kind == 1) {
      in = ir.at(index);
      out.new_id[index] = static_cast<InstrId>(list.size());
    } else {
      in.op = OpKind::Barrier;
      in.qubits = barriers[index].qubits;
    }
    in.id = static_cast<InstrId>(list.size());
    in.hw_gate.reset();
    list.push_back(std::move(in));
  }
  out.circuit = CircuitIR(ir.n_qubits(), std::move(list));
  return out;
}

}  // namespace

BarrieredCircuit insert_barriers(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule) {
  ScheduleModel model(ir, device, options_for(schedule.gamma));
  const auto& starts = schedule.start_ns;
  if (static_cast<int>(starts.size()) != model.size()) throw ArgumentError("schedule does not cover the circuit");
  const auto target = overlapping_pairs(model, starts);
  const std::set<std::pair<InstrId, InstrId>> wanted(target.begin(), target.end());

  std::vector<PendingBarrier> barriers;
  std::set<std::pair<InstrId, InstrId>> fenced;
  while (true) {
    auto emitted = emit_with_barriers(model, starts, barriers);
    CircuitIR reparsed = parse_circuit(serialize_circuit(emitted.circuit));
    ScheduleModel replay(reparsed, device, options_for(schedule.gamma));
    auto replay_starts = alap_starts(replay);

    std::vector<std::pair<InstrId, InstrId>> extra;
    bool missing = false;
    for (auto [i, j] : model.candidates().pairs) {
      InstrId a = emitted.new_id[i], b = emitted.new_id[j];
      bool now = intervals_overlap(replay_starts[a], replay.duration(a), replay_starts[b], replay.duration(b));
      bool want = wanted.count({i, j}) != 0;
      if (now && !want) extra.emplace_back(i, j);
      if (!now && want) missing = true;
    }
    if (extra.empty() && !missing) return emitted;
    if (extra.empty()) {
      throw VerificationError("barriers cannot reproduce an overlap that the schedule relies on");
    }
    for (auto [i, j] : extra) {
      if (!fenced.insert({i, j}).second) {
        throw VerificationError("barrier between instructions " + std::to_string(i) + " and " + std::to_string(j) +
                                " did not separate them");
      }
      InstrId first = starts[i] <= starts[j] ? i : j;
      InstrId second = first == i ? j : i;
      std::vector<QubitId> qubits = model.ir().at(first).qubits;
      for (QubitId q : model.ir().at(second).qubits) qubits.push_back(q);
      std::sort(qubits.begin(), qubits.end());
      TimeNs t = fence_time(model, starts, qubits, starts[first] + model.duration(first), starts[second]);
      barriers.push_back({t, qubits});
    }
  }
}

// ---------------------------------------------------------------------------
// Verification

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Coverage:
      return "coverage";
    case ViolationKind::NegativeStart:
      return "negative-start";
    case ViolationKind::DataDependency:
      return "data-dependency";
    case ViolationKind::ReadoutAlignment:
      return "readout-alignment";
    case ViolationKind::NoPartialOverlap:
      return "no-partial-overlap";
    case ViolationKind::GateError:
      return "gate-error";
    case ViolationKind::Lifetime:
      return "lifetime";
    case ViolationKind::Makespan:
      return "makespan";
    case ViolationKind::Objective:
      return "objective";
  }
  return "?";
}

std::vector<Violation> verify_schedule(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule) {
  ScheduleModel model(ir, device, options_for(schedule.gamma));
  std::vector<Violation> out;
  const auto& s = schedule.start_ns;
  if (static_cast<int>(s.size()) != model.size()) {
    out.push_back({ViolationKind::Coverage, {},
                   "schedule has " + std::to_string(s.size()) + " start times for " +
                       std::to_string(model.size()) + " instructions"});
    return out;
  }
  for (InstrId id = 0; id < model.size(); ++id) {
    if (s[id] < 0) out.push_back({ViolationKind::NegativeStart, {id}, "negative start time"});
  }
  for (auto [i, j] : model.ir().dag_edges()) {
    if (s[j] < s[i] + model.duration(i)) {
      out.push_back({ViolationKind::DataDependency, {i, j},
                     "instruction " + std::to_string(j) + " starts before " + std::to_string(i) + " finishes"});
    }
  }
  auto readouts = model.ir().measure_instructions();
  for (std::size_t k = 1; k < readouts.size(); ++k) {
    if (s[readouts[k]] != s[readouts[0]]) {
      out.push_back({ViolationKind::ReadoutAlignment, {readouts[0], readouts[k]}, "readouts start at different times"});
    }
  }
  if (schedule.barrier_enforced) {
    for (auto [i, j] : model.candidates().pairs) {
      if (partially_overlap(s[i], model.duration(i), s[j], model.duration(j))) {
        out.push_back({ViolationKind::NoPartialOverlap, {i, j}, "candidate pair partially overlaps"});
      }
    }
  }

  auto ev = evaluate_model(model, s);
  for (const auto& [id, e] : ev.per_gate_error) {
    auto it = schedule.per_gate_error.find(id);
    if (it == schedule.per_gate_error.end() || std::abs(it->second - e) > 1e-12) {
      out.push_back({ViolationKind::GateError, {id}, "reported gate error differs from the model"});
    }
  }
  for (const auto& [id, e] : schedule.per_gate_error) {
    if (!ev.per_gate_error.count(id)) {
      out.push_back({ViolationKind::GateError, {id}, "error reported for a non-gate instruction"});
    }
  }
  if (schedule.per_qubit_lifetime_ns != ev.per_qubit_lifetime_ns) {
    out.push_back({ViolationKind::Lifetime, {}, "reported qubit lifetimes differ from the model"});
  }
  if (schedule.makespan_ns != ev.makespan_ns) {
    out.push_back({ViolationKind::Makespan, {},
                   "reported makespan " + std::to_string(schedule.makespan_ns) + " differs from " +
                       std::to_string(ev.makespan_ns)});
  }
  double objective = ev.objective(schedule.omega);
  if (std::abs(objective - schedule.objective) > 1e-9 * std::max(1.0, std::abs(objective))) {
    out.push_back({ViolationKind::Objective, {}, "reported objective differs from the model"});
  }
  return out;
}

}  // namespace xtalk
