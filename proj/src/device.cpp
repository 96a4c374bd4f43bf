#include "xtalk/device.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xtalk/error.hpp"

namespace xtalk {

using nlohmann::json;

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::Cx:
      return "cx";
    case GateKind::OneQubit:
      return "one-qubit";
    case GateKind::Readout:
      return "readout";
  }
  return "?";
}

std::optional<double> ConditionalErrorTable::get(GateId gate, GateId spectator) const {
  auto it = entries_.find({gate, spectator});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::pair<QubitId, QubitId> edge_key(QubitId a, QubitId b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

DeviceModel::DeviceModel(std::vector<QubitInfo> qubits, std::vector<std::pair<QubitId, QubitId>> edges,
                         std::vector<HardwareGate> gates, ConditionalErrorTable conditional_errors)
    : qubits_(std::move(qubits)),
      edges_(std::move(edges)),
      gates_(std::move(gates)),
      conditional_(std::move(conditional_errors)) {
  index_and_validate();

  const int n = num_qubits();
  adjacency_.assign(n, {});
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

  distance_.assign(n, std::vector<int>(n, -1));
  for (int src = 0; src < n; ++src) {
    auto& dist = distance_[src];
    std::deque<int> queue{src};
    dist[src] = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adjacency_[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
  }
  for (int q = 0; q < n; ++q) {
    for (int r = 0; r < n; ++r) {
      if (distance_[q][r] < 0) {
        throw InvariantError("coupling graph is not connected: qubit " + std::to_string(q) +
                             " cannot reach qubit " + std::to_string(r));
      }
    }
  }
}

void DeviceModel::index_and_validate() {
  const int n = num_qubits();
  std::vector<bool> seen(n, false);
  for (const auto& q : qubits_) {
    if (q.id < 0 || q.id >= n) {
      throw InvariantError("qubit " + std::to_string(q.id) + ": ids must be dense 0.." + std::to_string(n - 1));
    }
    if (seen[q.id]) throw InvariantError("qubit " + std::to_string(q.id) + ": duplicate id");
    seen[q.id] = true;
    if (!(q.t1_us > 0.0)) throw InvariantError("qubit " + std::to_string(q.id) + ": t1 must be > 0");
    if (!(q.t2_us > 0.0)) throw InvariantError("qubit " + std::to_string(q.id) + ": t2 must be > 0");
  }

  // Qubits sorted by id so that qubit(q) is qubits_[q].
  std::sort(qubits_.begin(), qubits_.end(),
            [](const QubitInfo& a, const QubitInfo& b) { return a.id < b.id; });

  std::set<std::pair<QubitId, QubitId>> edge_set;
  for (auto [a, b] : edges_) {
    std::string name = "edge (" + std::to_string(a) + "," + std::to_string(b) + ")";
    if (a < 0 || a >= n || b < 0 || b >= n) throw InvariantError(name + ": unknown qubit");
    if (a == b) throw InvariantError(name + ": self loop");
    if (!edge_set.insert(edge_key(a, b)).second) throw InvariantError(name + ": duplicate edge");
  }

  index_.clear();
  cx_by_edge_.clear();
  one_qubit_by_qubit_.clear();
  readout_by_qubit_.clear();
  for (std::size_t k = 0; k < gates_.size(); ++k) {
    const auto& g = gates_[k];
    std::string name = "gate " + std::to_string(g.id);
    if (!index_.emplace(g.id, k).second) throw InvariantError(name + ": duplicate id");
    const std::size_t arity = g.kind == GateKind::Cx ? 2 : 1;
    if (g.qubits.size() != arity) {
      throw InvariantError(name + ": " + std::string(to_string(g.kind)) + " needs " + std::to_string(arity) +
                           " qubit(s)");
    }
    for (QubitId q : g.qubits) {
      if (q < 0 || q >= n) throw InvariantError(name + ": unknown qubit " + std::to_string(q));
    }
    if (!(g.duration_ns > 0)) throw InvariantError(name + ": duration must be > 0");
    if (!(g.independent_error > 0.0 && g.independent_error < 1.0)) {
      throw InvariantError(name + ": error must lie in (0,1)");
    }
    switch (g.kind) {
      case GateKind::Cx: {
        if (g.qubits[0] == g.qubits[1]) throw InvariantError(name + ": qubits must be distinct");
        auto key = edge_key(g.qubits[0], g.qubits[1]);
        if (!edge_set.count(key)) throw InvariantError(name + ": cx qubits are not a coupling edge");
        if (!cx_by_edge_.emplace(key, g.id).second) {
          throw InvariantError(name + ": coupling edge already has a cx gate");
        }
        break;
      }
      case GateKind::OneQubit:
        one_qubit_by_qubit_.emplace(g.qubits[0], g.id);
        break;
      case GateKind::Readout:
        readout_by_qubit_.emplace(g.qubits[0], g.id);
        break;
    }
  }
  for (const auto& key : edge_set) {
    if (!cx_by_edge_.count(key)) {
      throw InvariantError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                           "): no cx gate declared");
    }
  }

  for (const auto& [key, error] : conditional_.entries()) {
    auto [gate, spectator] = key;
    std::string name = "conditional error (" + std::to_string(gate) + "|" + std::to_string(spectator) + ")";
    if (!has_gate(gate) || !has_gate(spectator)) throw InvariantError(name + ": unknown gate id");
    const auto& g = this->gate(gate);
    const auto& s = this->gate(spectator);
    if (g.kind != GateKind::Cx || s.kind != GateKind::Cx) throw InvariantError(name + ": both gates must be cx");
    for (QubitId q : g.qubits) {
      if (std::find(s.qubits.begin(), s.qubits.end(), q) != s.qubits.end()) {
        throw InvariantError(name + ": gates share a qubit");
      }
    }
    if (!(error > 0.0 && error < 1.0)) throw InvariantError(name + ": error must lie in (0,1)");
  }
}

const QubitInfo& DeviceModel::qubit(QubitId q) const {
  if (q < 0 || q >= num_qubits()) throw ArgumentError("unknown qubit " + std::to_string(q));
  return qubits_[q];
}

const HardwareGate& DeviceModel::gate(GateId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ArgumentError("unknown gate id " + std::to_string(id));
  return gates_[it->second];
}

std::vector<GateId> DeviceModel::cx_gates() const {
  std::vector<GateId> out;
  for (const auto& g : gates_) {
    if (g.kind == GateKind::Cx) out.push_back(g.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<GateId> DeviceModel::cx_gate_on(QubitId a, QubitId b) const {
  auto it = cx_by_edge_.find(edge_key(a, b));
  if (it == cx_by_edge_.end()) return std::nullopt;
  return it->second;
}

std::optional<GateId> DeviceModel::one_qubit_gate_on(QubitId q) const {
  auto it = one_qubit_by_qubit_.find(q);
  if (it == one_qubit_by_qubit_.end()) return std::nullopt;
  return it->second;
}

std::optional<GateId> DeviceModel::readout_gate_on(QubitId q) const {
  auto it = readout_by_qubit_.find(q);
  if (it == readout_by_qubit_.end()) return std::nullopt;
  return it->second;
}

bool DeviceModel::coupled(QubitId a, QubitId b) const { return cx_by_edge_.count(edge_key(a, b)) != 0; }

int DeviceModel::qubit_distance(QubitId a, QubitId b) const {
  if (a < 0 || a >= num_qubits() || b < 0 || b >= num_qubits()) {
    throw ArgumentError("unknown qubit in distance query");
  }
  return distance_[a][b];
}

std::vector<QubitId> DeviceModel::shortest_path(QubitId a, QubitId b) const {
  int d = qubit_distance(a, b);
  if (d < 0) throw ArgumentError("no path between qubits " + std::to_string(a) + " and " + std::to_string(b));
  std::vector<QubitId> path{a};
  QubitId cur = a;
  while (cur != b) {
    QubitId next = -1;
    for (QubitId v : adjacency_[cur]) {
      if (distance_[v][b] == distance_[cur][b] - 1) next = v;  // neighbors ascend: keep the largest
    }
    path.push_back(next);
    cur = next;
  }
  return path;
}

DeviceModel DeviceModel::with_conditional_errors(ConditionalErrorTable table) const {
  return DeviceModel(qubits_, edges_, gates_, std::move(table));
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!obj.is_object()) throw ParseError("expected an object", 0, path);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ParseError("unknown key '" + it.key() + "'", 0, path);
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing key '" + std::string(key) + "'", 0, path);
  return *it;
}

template <typename T>
T get_as(const json& value, const std::string& path) {
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) throw ParseError("expected an integer", 0, path);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) throw ParseError("expected a number", 0, path);
    } else {
      if (!value.is_string()) throw ParseError("expected a string", 0, path);
    }
    return value.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 0, path);
  }
}

GateKind parse_kind(const std::string& text, const std::string& path) {
  if (text == "cx") return GateKind::Cx;
  if (text == "one-qubit") return GateKind::OneQubit;
  if (text == "readout") return GateKind::Readout;
  throw ParseError("unknown gate kind '" + text + "'", 0, path);
}

}  // namespace

DeviceModel parse_device(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_offset(json_text, e.byte == 0 ? 0 : e.byte - 1));
  }
  reject_unknown_keys(doc, {"qubits", "edges", "gates", "conditional_errors"}, "device");

  std::vector<QubitInfo> qubits;
  const auto& jq = require(doc, "qubits", "device");
  if (!jq.is_array()) throw ParseError("expected an array", 0, "qubits");
  for (std::size_t i = 0; i < jq.size(); ++i) {
    std::string path = "qubits[" + std::to_string(i) + "]";
    reject_unknown_keys(jq[i], {"id", "t1_us", "t2_us"}, path);
    qubits.push_back({get_as<int>(require(jq[i], "id", path), path + ".id"),
                      get_as<double>(require(jq[i], "t1_us", path), path + ".t1_us"),
                      get_as<double>(require(jq[i], "t2_us", path), path + ".t2_us")});
  }

  std::vector<std::pair<QubitId, QubitId>> edges;
  const auto& je = require(doc, "edges", "device");
  if (!je.is_array()) throw ParseError("expected an array", 0, "edges");
  for (std::size_t i = 0; i < je.size(); ++i) {
    std::string path = "edges[" + std::to_string(i) + "]";
    if (!je[i].is_array() || je[i].size() != 2) throw ParseError("expected [q, q]", 0, path);
    edges.emplace_back(get_as<int>(je[i][0], path), get_as<int>(je[i][1], path));
  }

  std::vector<HardwareGate> gates;
  const auto& jg = require(doc, "gates", "device");
  if (!jg.is_array()) throw ParseError("expected an array", 0, "gates");
  for (std::size_t i = 0; i < jg.size(); ++i) {
    std::string path = "gates[" + std::to_string(i) + "]";
    reject_unknown_keys(jg[i], {"id", "kind", "qubits", "duration_ns", "error"}, path);
    HardwareGate g;
    g.id = get_as<int>(require(jg[i], "id", path), path + ".id");
    g.kind = parse_kind(get_as<std::string>(require(jg[i], "kind", path), path + ".kind"), path + ".kind");
    const auto& gq = require(jg[i], "qubits", path);
    if (!gq.is_array()) throw ParseError("expected an array", 0, path + ".qubits");
    for (const auto& q : gq) g.qubits.push_back(get_as<int>(q, path + ".qubits"));
    g.duration_ns = get_as<std::int64_t>(require(jg[i], "duration_ns", path), path + ".duration_ns");
    g.independent_error = get_as<double>(require(jg[i], "error", path), path + ".error");
    gates.push_back(std::move(g));
  }

  ConditionalErrorTable table;
  if (auto it = doc.find("conditional_errors"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("expected an array", 0, "conditional_errors");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& entry = (*it)[i];
      std::string path = "conditional_errors[" + std::to_string(i) + "]";
      reject_unknown_keys(entry, {"gate", "spectator", "error"}, path);
      table.set(get_as<int>(require(entry, "gate", path), path + ".gate"),
                get_as<int>(require(entry, "spectator", path), path + ".spectator"),
                get_as<double>(require(entry, "error", path), path + ".error"));
    }
  }

  return DeviceModel(std::move(qubits), std::move(edges), std::move(gates), std::move(table));
}

DeviceModel load_device(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open device file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_device(buffer.str());
}

std::string device_to_json(const DeviceModel& device) {
  json doc;
  doc["qubits"] = json::array();
  for (const auto& q : device.qubits()) doc["qubits"].push_back({{"id", q.id}, {"t1_us", q.t1_us}, {"t2_us", q.t2_us}});
  doc["edges"] = json::array();
  for (auto [a, b] : device.edges()) doc["edges"].push_back({a, b});
  doc["gates"] = json::array();
  for (const auto& g : device.gates()) {
    doc["gates"].push_back({{"id", g.id},
                            {"kind", std::string(to_string(g.kind))},
                            {"qubits", g.qubits},
                            {"duration_ns", g.duration_ns},
                            {"error", g.independent_error}});
  }
  doc["conditional_errors"] = json::array();
  for (const auto& [key, error] : device.conditional_errors().entries()) {
    doc["conditional_errors"].push_back({{"gate", key.first}, {"spectator", key.second}, {"error", error}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Graph queries

int gate_hop_distance(const DeviceModel& device, GateId gi, GateId gj) {
  const auto& a = device.gate(gi);
  const auto& b = device.gate(gj);
  if (a.kind != GateKind::Cx || b.kind != GateKind::Cx) {
    throw ArgumentError("gate_hop_distance expects cx gates");
  }
  int best = -1;
  for (QubitId u : a.qubits) {
    for (QubitId v : b.qubits) {
      int d = device.qubit_distance(u, v);
      if (best < 0 || d < best) best = d;
    }
  }
  return best;
}

std::vector<std::pair<GateId, GateId>> simultaneous_pairs(const DeviceModel& device) {
  auto cx = device.cx_gates();
  std::vector<std::pair<GateId, GateId>> out;
  for (std::size_t i = 0; i < cx.size(); ++i) {
    for (std::size_t j = i + 1; j < cx.size(); ++j) {
      if (gate_hop_distance(device, cx[i], cx[j]) >= 1) out.emplace_back(cx[i], cx[j]);
    }
  }
  return out;
}

std::vector<std::pair<GateId, GateId>> high_crosstalk_pairs(const DeviceModel& device, double gamma) {
  std::vector<std::pair<GateId, GateId>> out;
  for (const auto& [key, error] : device.conditional_errors().entries()) {
    if (error > gamma * device.gate(key.first).independent_error) out.push_back(key);
  }
  return out;
}

bool is_high_crosstalk(const DeviceModel& device, GateId a, GateId b, double gamma) {
  auto ab = device.conditional_error(a, b);
  auto ba = device.conditional_error(b, a);
  return (ab && *ab > gamma * device.gate(a).independent_error) ||
         (ba && *ba > gamma * device.gate(b).independent_error);
}

}  // namespace xtalk
