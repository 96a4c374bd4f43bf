#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xtalk/circuit.hpp"
#include "xtalk/device.hpp"
#include "xtalk/schedule.hpp"

namespace xtalk {

/// Constraint tallies per family. Gate-error counts one implication per
/// subset of each cx's candidate set; no-partial-overlap counts the four
/// disjuncts of every candidate pair.
struct ConstraintCounts {
  std::int64_t dependency = 0;
  std::int64_t indicator = 0;
  std::int64_t gate_error = 0;
  std::int64_t no_partial_overlap = 0;
  std::int64_t readout = 0;
  std::int64_t lifetime = 0;

  std::int64_t total() const {
    return dependency + indicator + gate_error + no_partial_overlap + readout + lifetime;
  }
};

/// guard => log(error of gate) == log_error. The guard fixes every overlap
/// indicator of the gate's candidate pairs: (pair index, value).
struct Implication {
  InstrId gate = 0;
  std::vector<std::pair<int, bool>> guard;
  double log_error = 0.0;
};

/// Scheduling instance: per-instruction start times, one overlap indicator
/// per candidate pair, per-cx log-error selectors and per-qubit lifetimes.
struct OptimizationProblem {
  std::shared_ptr<const ScheduleModel> model;
  double omega = 0.5;
  std::vector<std::pair<InstrId, InstrId>> pairs;         // indicator k covers pairs[k], first < second
  std::vector<std::pair<InstrId, InstrId>> dependencies;  // dag edges
  std::vector<InstrId> readouts;
  std::vector<Implication> implications;
  ConstraintCounts counts;
  std::vector<std::string> warnings;

  /// Index of the indicator for {a, b}, or -1.
  int pair_index(InstrId a, InstrId b) const;
};

OptimizationProblem build_problem(const CircuitIR& ir, const DeviceModel& device, double omega,
                                  double gamma = kDefaultGamma);
OptimizationProblem build_problem(const CircuitIR& ir, const DeviceModel& device, double omega,
                                  const CanOverlapOptions& options);

enum class Backend { Internal, SmtLib };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);

struct SolveOptions {
  Backend backend = Backend::Internal;
  std::string solver_cmd = "z3";
  double timeout_s = 600.0;
  /// Internal backend only: stop after this many nodes (0 = no limit) and
  /// return the best schedule found with stats.optimal = false.
  std::int64_t node_limit = 0;
};

/// Minimizes omega * sum(log error over cx) + (1 - omega) * sum(lifetime / T).
Schedule solve(const OptimizationProblem& problem, const SolveOptions& options = {});

/// SMT-LIB2 text with a minimize directive; start times are `tau_<id>`.
std::string emit_smtlib(const OptimizationProblem& problem);
/// Reads `tau_<id>` values from a solver's get-value response.
std::vector<TimeNs> parse_smt_model(std::string_view output, int n_instructions);

/// Instructions back to back in program order; readouts share the final slot.
Schedule series_schedule(const CircuitIR& ir, const DeviceModel& device, double omega = 0.5,
                         double gamma = kDefaultGamma);

/// As-late-as-possible list schedule anchored at a common readout time.
Schedule parallel_schedule(const CircuitIR& ir, const DeviceModel& device, double omega = 0.5,
                           double gamma = kDefaultGamma);

struct BarrieredCircuit {
  CircuitIR circuit;
  std::vector<InstrId> new_id;  // original instruction id -> id in `circuit`
  int barriers_added = 0;
};

/// Adds barriers so that an as-late-as-possible executor reproduces the
/// schedule's set of overlapping candidate pairs. Instructions are reordered
/// by start time when a barrier is needed. Throws VerificationError when the
/// round trip does not reproduce the overlap set.
BarrieredCircuit insert_barriers(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule);

/// Candidate pairs (first < second) whose intervals intersect.
std::vector<std::pair<InstrId, InstrId>> overlapping_pairs(const ScheduleModel& model,
                                                           const std::vector<TimeNs>& start_ns);

enum class ViolationKind {
  Coverage,
  NegativeStart,
  DataDependency,
  ReadoutAlignment,
  NoPartialOverlap,
  GateError,
  Lifetime,
  Makespan,
  Objective,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<InstrId> instructions;
  std::string message;
};

/// Checks a schedule against the constraints and recomputes its derived
/// fields. Candidate pairs may partially overlap only in schedules that are
/// not barrier-enforced (the baselines).
std::vector<Violation> verify_schedule(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule);

}  // namespace xtalk
