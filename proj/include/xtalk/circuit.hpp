#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xtalk/device.hpp"

namespace xtalk {

enum class OpKind { Cx, U, Barrier, Measure };

using InstrId = int;

struct Instruction {
  InstrId id = 0;
  OpKind op = OpKind::U;
  std::string name;  // label for single-qubit gates; empty otherwise
  std::vector<QubitId> qubits;
  std::optional<GateId> hw_gate;

  bool is_gate() const { return op == OpKind::Cx || op == OpKind::U; }
};

bool operator==(const Instruction& a, const Instruction& b);

/// Dependency edges (i -> j means j depends on i), transitively reduced.
/// Per-qubit program order induces the edges; barriers fence their qubits.
std::vector<std::pair<InstrId, InstrId>> build_dag(int n_qubits, const std::vector<Instruction>& instructions);

/// Ordered instruction list plus its dependency DAG. Ids equal positions.
/// Immutable once constructed.
class CircuitIR {
 public:
  CircuitIR() = default;
  CircuitIR(int n_qubits, std::vector<Instruction> instructions);

  int n_qubits() const { return n_qubits_; }
  int size() const { return static_cast<int>(instructions_.size()); }
  const std::vector<Instruction>& instructions() const { return instructions_; }
  const Instruction& at(InstrId id) const { return instructions_.at(id); }

  const std::vector<std::pair<InstrId, InstrId>>& dag_edges() const { return dag_; }
  const std::vector<InstrId>& successors(InstrId id) const { return succ_.at(id); }
  const std::vector<InstrId>& predecessors(InstrId id) const { return pred_.at(id); }

  /// True when `descendant` transitively depends on `ancestor`.
  bool is_ancestor(InstrId ancestor, InstrId descendant) const;
  bool comparable(InstrId a, InstrId b) const {
    return a == b || is_ancestor(a, b) || is_ancestor(b, a);
  }

  bool is_bound() const;
  std::vector<InstrId> cx_instructions() const;
  std::vector<InstrId> measure_instructions() const;
  /// Qubits touched by at least one non-barrier instruction.
  std::vector<QubitId> used_qubits() const;

  friend bool operator==(const CircuitIR& a, const CircuitIR& b) {
    return a.n_qubits_ == b.n_qubits_ && a.instructions_ == b.instructions_ && a.dag_ == b.dag_;
  }

 private:
  int n_qubits_ = 0;
  std::vector<Instruction> instructions_;
  std::vector<std::pair<InstrId, InstrId>> dag_;
  std::vector<std::vector<InstrId>> succ_;
  std::vector<std::vector<InstrId>> pred_;
  std::vector<std::vector<std::uint64_t>> reach_;
};

/// Text grammar: `qreg <n>`, `u <q> [<name>]`, `cx <q> <q>`,
/// `barrier <q>...`, `measure <q>`; `#` starts a comment.
CircuitIR parse_circuit(std::string_view text);
CircuitIR load_circuit(const std::string& path);
std::string serialize_circuit(const CircuitIR& ir);

/// Returns a copy with every non-barrier instruction bound to its hardware
/// gate. Throws InvariantError when an instruction has no hardware gate.
CircuitIR bind_to_device(const CircuitIR& ir, const DeviceModel& device);

/// Duration of a bound instruction; barriers take zero time.
TimeNs instruction_duration(const Instruction& instr, const DeviceModel& device);

struct CanOverlapOptions {
  double gamma = kDefaultGamma;
  bool prune_by_crosstalk = true;  // keep only high-crosstalk partners
  bool require_one_hop = true;     // keep only partners at gate distance 1
  int cap = 10;                    // per-gate candidate cap
};

/// cx instructions that may overlap `gi`: dag-incomparable and, by default,
/// at gate distance 1 with high conditional error in either direction.
std::vector<InstrId> can_overlap(const CircuitIR& ir, const DeviceModel& device, InstrId gi,
                                 double gamma = kDefaultGamma);
std::vector<InstrId> can_overlap(const CircuitIR& ir, const DeviceModel& device, InstrId gi,
                                 const CanOverlapOptions& options);

/// Candidate sets for every cx instruction after applying the cap. Members
/// beyond the cap are dropped (highest conditional error kept) and the pair
/// set is kept symmetric.
struct CandidateOverlaps {
  std::vector<std::vector<InstrId>> per_instruction;
  std::vector<std::pair<InstrId, InstrId>> pairs;  // i < j
  std::vector<std::string> warnings;
};

CandidateOverlaps candidate_overlaps(const CircuitIR& ir, const DeviceModel& device,
                                     const CanOverlapOptions& options);

struct SwapPathCircuit {
  CircuitIR circuit;
  std::vector<QubitId> path;
  std::vector<std::pair<QubitId, QubitId>> swaps;  // in emission order
  std::pair<QubitId, QubitId> meeting_edge;
  std::string note;  // how an odd swap count was split
};

/// Meet-in-the-middle SWAP chain realizing a cx between distant qubits.
SwapPathCircuit gen_swap_path(const DeviceModel& device, QubitId qa, QubitId qb);

/// Layers alternate (cx layer first): random maximal matchings of coupling
/// edges among qubits [0, n_qubits), then one random single-qubit gate per
/// qubit. Every qubit is measured at the end.
CircuitIR gen_random_circuit(const DeviceModel& device, int n_qubits, int depth, std::uint64_t seed);

}  // namespace xtalk
