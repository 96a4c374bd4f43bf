#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtalk/circuit.hpp"
#include "xtalk/device.hpp"

namespace xtalk {

/// Half-open execution intervals [start, start + duration).
inline bool intervals_overlap(TimeNs a_start, TimeNs a_dur, TimeNs b_start, TimeNs b_dur) {
  return a_start < b_start + b_dur && b_start < a_start + a_dur;
}

/// True when interval a lies within interval b.
inline bool interval_within(TimeNs a_start, TimeNs a_dur, TimeNs b_start, TimeNs b_dur) {
  return b_start <= a_start && a_start + a_dur <= b_start + b_dur;
}

/// Overlapping without either interval containing the other.
inline bool partially_overlap(TimeNs a_start, TimeNs a_dur, TimeNs b_start, TimeNs b_dur) {
  return intervals_overlap(a_start, a_dur, b_start, b_dur) && !interval_within(a_start, a_dur, b_start, b_dur) &&
         !interval_within(b_start, b_dur, a_start, a_dur);
}

struct SolverStats {
  std::string backend;  // "internal", "smtlib", "serial", "parallel"
  double solve_time_s = 0.0;
  std::int64_t nodes = 0;
  bool optimal = true;
};

struct Schedule {
  std::string name;
  std::vector<TimeNs> start_ns;  // indexed by instruction id
  TimeNs makespan_ns = 0;
  std::map<InstrId, double> per_gate_error;   // cx and single-qubit gates
  std::vector<TimeNs> per_qubit_lifetime_ns;  // indexed by qubit; 0 when unused
  double objective = 0.0;
  double omega = 0.5;
  double gamma = kDefaultGamma;
  /// Set when barriers are inserted to enforce the ordering decisions, so
  /// candidate pairs must never partially overlap.
  bool barrier_enforced = false;
  SolverStats stats;
};

/// A circuit bound to a device together with the data the cost model reads:
/// durations, overlap candidates, error rates and coherence budgets.
class ScheduleModel {
 public:
  ScheduleModel(const CircuitIR& ir, const DeviceModel& device, const CanOverlapOptions& options = {});

  const CircuitIR& ir() const { return ir_; }
  const DeviceModel& device() const { return device_; }
  const CanOverlapOptions& options() const { return options_; }
  double gamma() const { return options_.gamma; }
  int size() const { return ir_.size(); }

  TimeNs duration(InstrId id) const { return durations_.at(id); }
  const std::vector<TimeNs>& durations() const { return durations_; }
  TimeNs total_duration() const { return total_duration_; }

  const CandidateOverlaps& candidates() const { return candidates_; }
  const std::vector<InstrId>& candidates_of(InstrId id) const { return candidates_.per_instruction.at(id); }

  /// Non-barrier instructions touching each qubit, in id order.
  const std::vector<std::vector<InstrId>>& qubit_instructions() const { return qubit_instructions_; }
  const std::vector<QubitId>& used_qubits() const { return used_qubits_; }
  double coherence_ns(QubitId q) const { return device_.qubit(q).coherence_ns(); }

  double independent_error(InstrId id) const;
  /// E(gate of i | gate of j). Throws InvariantError when not characterized.
  double conditional_error(InstrId i, InstrId j) const;
  /// Error of gate i when exactly the candidates in `overlapping` run
  /// alongside it: the worst conditional error, or E(i) when none do.
  double gate_error(InstrId i, std::span<const InstrId> overlapping) const;

 private:
  CircuitIR ir_;
  DeviceModel device_;
  CanOverlapOptions options_;
  std::vector<TimeNs> durations_;
  TimeNs total_duration_ = 0;
  CandidateOverlaps candidates_;
  std::vector<std::vector<InstrId>> qubit_instructions_;
  std::vector<QubitId> used_qubits_;
};

/// Cost-model terms of a concrete start-time assignment.
struct ModelEvaluation {
  std::map<InstrId, double> per_gate_error;
  std::vector<TimeNs> per_qubit_lifetime_ns;
  TimeNs makespan_ns = 0;
  double log_error_sum = 0.0;  // sum of log(error) over cx instructions
  double lifetime_sum = 0.0;   // sum over qubits of lifetime / coherence
  double objective(double omega) const { return omega * log_error_sum + (1.0 - omega) * lifetime_sum; }
};

/// Lifetime of a used qubit runs from its first instruction to the end of
/// the schedule. Candidate partners count as overlapping when their
/// half-open intervals intersect.
ModelEvaluation evaluate_model(const ScheduleModel& model, std::span<const TimeNs> start_ns);

/// Shifts the earliest start to 0 and fills in the model-derived fields.
Schedule make_schedule(const ScheduleModel& model, std::vector<TimeNs> start_ns, double omega, std::string name,
                       bool barrier_enforced, SolverStats stats);

/// Deterministic JSON; solve time is written only when `with_timing` is set.
std::string schedule_to_json(const Schedule& schedule, bool with_timing = false);
Schedule parse_schedule(std::string_view json_text);

}  // namespace xtalk
