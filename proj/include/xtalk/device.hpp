#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xtalk {

using QubitId = int;
using GateId = int;
using TimeNs = std::int64_t;

struct QubitInfo {
  QubitId id = 0;
  double t1_us = 0.0;
  double t2_us = 0.0;

  /// Coherence budget min(T1, T2), in nanoseconds.
  double coherence_ns() const { return 1000.0 * (t1_us < t2_us ? t1_us : t2_us); }
};

enum class GateKind { Cx, OneQubit, Readout };

std::string_view to_string(GateKind kind);

struct HardwareGate {
  GateId id = 0;
  GateKind kind = GateKind::Cx;
  std::vector<QubitId> qubits;
  TimeNs duration_ns = 0;
  double independent_error = 0.0;
};

/// Directional conditional error table: E(gate | spectator).
class ConditionalErrorTable {
 public:
  void set(GateId gate, GateId spectator, double error) { entries_[{gate, spectator}] = error; }
  std::optional<double> get(GateId gate, GateId spectator) const;
  const std::map<std::pair<GateId, GateId>, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<GateId, GateId>, double> entries_;
};

/// Immutable hardware description: coupling graph, calibration data and
/// crosstalk characterization. Construction validates every invariant and
/// precomputes all-pairs qubit distances.
class DeviceModel {
 public:
  DeviceModel() = default;
  DeviceModel(std::vector<QubitInfo> qubits, std::vector<std::pair<QubitId, QubitId>> edges,
              std::vector<HardwareGate> gates, ConditionalErrorTable conditional_errors);

  int num_qubits() const { return static_cast<int>(qubits_.size()); }
  const std::vector<QubitInfo>& qubits() const { return qubits_; }
  const QubitInfo& qubit(QubitId q) const;
  const std::vector<std::pair<QubitId, QubitId>>& edges() const { return edges_; }
  const std::vector<HardwareGate>& gates() const { return gates_; }
  const ConditionalErrorTable& conditional_errors() const { return conditional_; }

  const HardwareGate& gate(GateId id) const;
  bool has_gate(GateId id) const { return index_.count(id) != 0; }

  /// Ids of all cx gates in ascending order.
  std::vector<GateId> cx_gates() const;

  std::optional<GateId> cx_gate_on(QubitId a, QubitId b) const;
  std::optional<GateId> one_qubit_gate_on(QubitId q) const;
  std::optional<GateId> readout_gate_on(QubitId q) const;

  bool coupled(QubitId a, QubitId b) const;
  const std::vector<QubitId>& neighbors(QubitId q) const { return adjacency_.at(q); }

  /// Shortest-path hop count between qubits; -1 when unreachable.
  int qubit_distance(QubitId a, QubitId b) const;

  /// Lexicographically greatest shortest path from a to b (inclusive).
  std::vector<QubitId> shortest_path(QubitId a, QubitId b) const;

  /// Conditional error E(gate | spectator) if measured.
  std::optional<double> conditional_error(GateId gate, GateId spectator) const {
    return conditional_.get(gate, spectator);
  }

  /// Copy with a replaced conditional error table (validated).
  DeviceModel with_conditional_errors(ConditionalErrorTable table) const;

 private:
  void index_and_validate();

  std::vector<QubitInfo> qubits_;
  std::vector<std::pair<QubitId, QubitId>> edges_;
  std::vector<HardwareGate> gates_;
  ConditionalErrorTable conditional_;
  std::map<GateId, std::size_t> index_;
  std::map<std::pair<QubitId, QubitId>, GateId> cx_by_edge_;
  std::map<QubitId, GateId> one_qubit_by_qubit_;
  std::map<QubitId, GateId> readout_by_qubit_;
  std::vector<std::vector<QubitId>> adjacency_;
  std::vector<std::vector<int>> distance_;
};

/// Parse the calibration JSON schema. Throws ParseError or InvariantError.
DeviceModel parse_device(std::string_view json_text);
DeviceModel load_device(const std::string& path);
std::string device_to_json(const DeviceModel& device);

/// Min over endpoints of the coupling-graph distance; 0 iff a qubit is shared.
int gate_hop_distance(const DeviceModel& device, GateId gi, GateId gj);

/// Unordered pairs of cx gates with disjoint qubits, ascending (gi < gj).
std::vector<std::pair<GateId, GateId>> simultaneous_pairs(const DeviceModel& device);

inline constexpr double kDefaultGamma = 3.0;

/// Ordered pairs (i, j) with E(i|j) > gamma * E(i). Missing entries are
/// treated as crosstalk-free.
std::vector<std::pair<GateId, GateId>> high_crosstalk_pairs(const DeviceModel& device,
                                                            double gamma = kDefaultGamma);

/// True when either direction of the unordered pair exceeds the threshold.
bool is_high_crosstalk(const DeviceModel& device, GateId a, GateId b, double gamma);

}  // namespace xtalk
