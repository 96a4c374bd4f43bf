#include "xtalk/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "xtalk/error.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

bool operator==(const Instruction& a, const Instruction& b) {
  return a.id == b.id && a.op == b.op && a.name == b.name && a.qubits == b.qubits && a.hw_gate == b.hw_gate;
}

namespace {

using Bits = std::vector<std::uint64_t>;

bool test_bit(const Bits& bits, int i) { return (bits[i >> 6] >> (i & 63)) & 1U; }
void set_bit(Bits& bits, int i) { bits[i >> 6] |= std::uint64_t{1} << (i & 63); }

// Descendant sets over `succ`; ids are topologically ordered (edges go forward).
std::vector<Bits> descendants(int n, const std::vector<std::vector<int>>& succ) {
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  std::vector<Bits> reach(n, Bits(words, 0));
  for (int i = n - 1; i >= 0; --i) {
    for (int j : succ[i]) {
      set_bit(reach[i], j);
      for (std::size_t w = 0; w < words; ++w) reach[i][w] |= reach[j][w];
    }
  }
  return reach;
}

}  // namespace

std::vector<std::pair<InstrId, InstrId>> build_dag(int n_qubits, const std::vector<Instruction>& instructions) {
  const int n = static_cast<int>(instructions.size());
  std::vector<int> last(n_qubits, -1);
  std::vector<std::vector<int>> succ(n);
  for (int j = 0; j < n; ++j) {
    for (QubitId q : instructions[j].qubits) {
      if (q < 0 || q >= n_qubits) throw ArgumentError("qubit " + std::to_string(q) + " out of range");
      int i = last[q];
      if (i >= 0 && std::find(succ[i].begin(), succ[i].end(), j) == succ[i].end()) succ[i].push_back(j);
      last[q] = j;
    }
  }
  for (auto& s : succ) std::sort(s.begin(), s.end());
  auto reach = descendants(n, succ);

  std::vector<std::pair<InstrId, InstrId>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j : succ[i]) {
      bool implied = false;
      for (int k : succ[i]) {
        if (k != j && test_bit(reach[k], j)) {
          implied = true;
          break;
        }
      }
      if (!implied) edges.emplace_back(i, j);
    }
  }
  return edges;
}

CircuitIR::CircuitIR(int n_qubits, std::vector<Instruction> instructions)
    : n_qubits_(n_qubits), instructions_(std::move(instructions)) {
  if (n_qubits < 0) throw ArgumentError("negative qubit count");
  for (std::size_t i = 0; i < instructions_.size(); ++i) {
    auto& instr = instructions_[i];
    instr.id = static_cast<InstrId>(i);
    std::set<QubitId> distinct(instr.qubits.begin(), instr.qubits.end());
    if (distinct.size() != instr.qubits.size()) {
      throw ArgumentError("instruction " + std::to_string(i) + ": repeated qubit");
    }
    const std::size_t arity = instr.qubits.size();
    bool ok = instr.op == OpKind::Cx ? arity == 2 : instr.op == OpKind::Barrier ? arity >= 1 : arity == 1;
    if (!ok) throw ArgumentError("instruction " + std::to_string(i) + ": wrong number of qubits");
  }
  dag_ = build_dag(n_qubits_, instructions_);
  const int n = size();
  succ_.assign(n, {});
  pred_.assign(n, {});
  for (auto [i, j] : dag_) {
    succ_[i].push_back(j);
    pred_[j].push_back(i);
  }
  reach_ = descendants(n, succ_);
}

bool CircuitIR::is_ancestor(InstrId ancestor, InstrId descendant) const {
  return test_bit(reach_.at(ancestor), descendant);
}

bool CircuitIR::is_bound() const {
  return std::all_of(instructions_.begin(), instructions_.end(),
                     [](const Instruction& in) { return in.op == OpKind::Barrier || in.hw_gate.has_value(); });
}

std::vector<InstrId> CircuitIR::cx_instructions() const {
  std::vector<InstrId> out;
  for (const auto& in : instructions_) {
    if (in.op == OpKind::Cx) out.push_back(in.id);
  }
  return out;
}

std::vector<InstrId> CircuitIR::measure_instructions() const {
  std::vector<InstrId> out;
  for (const auto& in : instructions_) {
    if (in.op == OpKind::Measure) out.push_back(in.id);
  }
  return out;
}

std::vector<QubitId> CircuitIR::used_qubits() const {
  std::set<QubitId> used;
  for (const auto& in : instructions_) {
    if (in.op != OpKind::Barrier) used.insert(in.qubits.begin(), in.qubits.end());
  }
  return {used.begin(), used.end()};
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

int parse_int(std::string_view word, int line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size() || value < 0) {
    throw ParseError("expected a non-negative integer, got '" + std::string(word) + "'", line_no);
  }
  return value;
}

}  // namespace

CircuitIR parse_circuit(std::string_view text) {
  std::optional<int> declared;
  std::vector<Instruction> instructions;
  std::vector<int> lines;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto words = split_words(line);
    if (words.empty()) continue;

    std::string_view op = words[0];
    std::vector<std::string_view> args(words.begin() + 1, words.end());
    if (op == "qreg") {
      if (args.size() != 1) throw ParseError("qreg takes one size argument", line_no);
      if (declared) throw ParseError("duplicate qreg declaration", line_no);
      if (!instructions.empty()) throw ParseError("qreg must precede all instructions", line_no);
      declared = parse_int(args[0], line_no);
      continue;
    }
    Instruction instr;
    if (op == "cx") {
      if (args.size() != 2) throw ParseError("cx takes two qubits", line_no);
      instr.op = OpKind::Cx;
      instr.qubits = {parse_int(args[0], line_no), parse_int(args[1], line_no)};
      if (instr.qubits[0] == instr.qubits[1]) throw ParseError("cx qubits must differ", line_no);
    } else if (op == "u") {
      if (args.empty() || args.size() > 2) throw ParseError("u takes a qubit and an optional name", line_no);
      instr.op = OpKind::U;
      instr.qubits = {parse_int(args[0], line_no)};
      instr.name = args.size() == 2 ? std::string(args[1]) : "u";
    } else if (op == "barrier") {
      if (args.empty()) throw ParseError("barrier needs at least one qubit", line_no);
      instr.op = OpKind::Barrier;
      for (auto a : args) instr.qubits.push_back(parse_int(a, line_no));
      std::set<QubitId> distinct(instr.qubits.begin(), instr.qubits.end());
      if (distinct.size() != instr.qubits.size()) throw ParseError("barrier repeats a qubit", line_no);
    } else if (op == "measure") {
      if (args.size() != 1) throw ParseError("measure takes one qubit", line_no);
      instr.op = OpKind::Measure;
      instr.qubits = {parse_int(args[0], line_no)};
    } else {
      throw ParseError("unknown instruction '" + std::string(op) + "'", line_no);
    }
    if (declared) {
      for (QubitId q : instr.qubits) {
        if (q >= *declared) {
          throw ParseError("qubit index " + std::to_string(q) + " out of range for qreg " +
                               std::to_string(*declared),
                           line_no);
        }
      }
    }
    instructions.push_back(std::move(instr));
    lines.push_back(line_no);
  }
  int n_qubits = declared.value_or(0);
  if (!declared) {
    for (const auto& in : instructions) {
      for (QubitId q : in.qubits) n_qubits = std::max(n_qubits, q + 1);
    }
  }
  return CircuitIR(n_qubits, std::move(instructions));
}

CircuitIR load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open circuit file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_circuit(buffer.str());
}

std::string serialize_circuit(const CircuitIR& ir) {
  std::ostringstream out;
  out << "qreg " << ir.n_qubits() << "\n";
  for (const auto& in : ir.instructions()) {
    switch (in.op) {
      case OpKind::Cx:
        out << "cx " << in.qubits[0] << " " << in.qubits[1];
        break;
      case OpKind::U:
        out << "u " << in.qubits[0];
        if (!in.name.empty() && in.name != "u") out << " " << in.name;
        break;
      case OpKind::Barrier:
        out << "barrier";
        for (QubitId q : in.qubits) out << " " << q;
        break;
      case OpKind::Measure:
        out << "measure " << in.qubits[0];
        break;
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Device binding

CircuitIR bind_to_device(const CircuitIR& ir, const DeviceModel& device) {
  if (ir.n_qubits() > device.num_qubits()) {
    throw InvariantError("circuit uses " + std::to_string(ir.n_qubits()) + " qubits but device has " +
                         std::to_string(device.num_qubits()));
  }
  std::vector<Instruction> bound = ir.instructions();
  for (auto& in : bound) {
    std::optional<GateId> gate;
    switch (in.op) {
      case OpKind::Cx:
        gate = device.cx_gate_on(in.qubits[0], in.qubits[1]);
        if (!gate) {
          throw InvariantError("instruction " + std::to_string(in.id) + ": cx " + std::to_string(in.qubits[0]) +
                               " " + std::to_string(in.qubits[1]) + " is not on a coupling edge");
        }
        break;
      case OpKind::U:
        gate = device.one_qubit_gate_on(in.qubits[0]);
        if (!gate) {
          throw InvariantError("instruction " + std::to_string(in.id) + ": no single-qubit gate on qubit " +
                               std::to_string(in.qubits[0]));
        }
        break;
      case OpKind::Measure:
        gate = device.readout_gate_on(in.qubits[0]);
        if (!gate) {
          throw InvariantError("instruction " + std::to_string(in.id) + ": no readout on qubit " +
                               std::to_string(in.qubits[0]));
        }
        break;
      case OpKind::Barrier:
        break;
    }
    in.hw_gate = gate;
  }
  return CircuitIR(ir.n_qubits(), std::move(bound));
}

TimeNs instruction_duration(const Instruction& instr, const DeviceModel& device) {
  if (instr.op == OpKind::Barrier) return 0;
  if (!instr.hw_gate) throw ArgumentError("instruction " + std::to_string(instr.id) + " is not bound");
  return device.gate(*instr.hw_gate).duration_ns;
}

// ---------------------------------------------------------------------------
// Overlap candidates

std::vector<InstrId> can_overlap(const CircuitIR& ir, const DeviceModel& device, InstrId gi, double gamma) {
  CanOverlapOptions options;
  options.gamma = gamma;
  return can_overlap(ir, device, gi, options);
}

std::vector<InstrId> can_overlap(const CircuitIR& ir, const DeviceModel& device, InstrId gi,
                                 const CanOverlapOptions& options) {
  const auto& a = ir.at(gi);
  if (a.op != OpKind::Cx) throw ArgumentError("can_overlap expects a cx instruction");
  if (!a.hw_gate) throw ArgumentError("can_overlap expects a circuit bound to the device");
  std::vector<InstrId> out;
  for (InstrId gj : ir.cx_instructions()) {
    if (gj == gi || ir.comparable(gi, gj)) continue;
    const auto& b = ir.at(gj);
    if (!b.hw_gate) throw ArgumentError("can_overlap expects a circuit bound to the device");
    if (options.require_one_hop && gate_hop_distance(device, *a.hw_gate, *b.hw_gate) != 1) continue;
    if (options.prune_by_crosstalk && !is_high_crosstalk(device, *a.hw_gate, *b.hw_gate, options.gamma)) continue;
    out.push_back(gj);
  }
  return out;
}

CandidateOverlaps candidate_overlaps(const CircuitIR& ir, const DeviceModel& device,
                                     const CanOverlapOptions& options) {
  CandidateOverlaps result;
  const int n = ir.size();
  result.per_instruction.assign(n, {});
  for (InstrId gi : ir.cx_instructions()) {
    auto members = can_overlap(ir, device, gi, options);
    if (options.cap >= 0 && static_cast<int>(members.size()) > options.cap) {
      const GateId hw = *ir.at(gi).hw_gate;
      auto severity = [&](InstrId gj) {
        const GateId other = *ir.at(gj).hw_gate;
        return std::max(device.conditional_error(hw, other).value_or(0.0),
                        device.conditional_error(other, hw).value_or(0.0));
      };
      std::stable_sort(members.begin(), members.end(),
                       [&](InstrId x, InstrId y) { return severity(x) > severity(y); });
      std::string dropped;
      for (std::size_t k = options.cap; k < members.size(); ++k) dropped += " " + std::to_string(members[k]);
      result.warnings.push_back("instruction " + std::to_string(gi) + ": " + std::to_string(members.size()) +
                                " overlap candidates exceed cap " + std::to_string(options.cap) +
                                "; dropped" + dropped);
      members.resize(options.cap);
      std::sort(members.begin(), members.end());
    }
    result.per_instruction[gi] = std::move(members);
  }
  for (InstrId gi = 0; gi < n; ++gi) {
    auto& mine = result.per_instruction[gi];
    std::vector<InstrId> kept;
    for (InstrId gj : mine) {
      const auto& theirs = result.per_instruction[gj];
      if (std::find(theirs.begin(), theirs.end(), gi) != theirs.end()) kept.push_back(gj);
    }
    mine = kept;
  }
  for (InstrId gi = 0; gi < n; ++gi) {
    for (InstrId gj : result.per_instruction[gi]) {
      if (gi < gj) result.pairs.emplace_back(gi, gj);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

void append_swap(std::vector<Instruction>& out, QubitId a, QubitId b) {
  for (auto [c, t] : {std::pair{a, b}, std::pair{b, a}, std::pair{a, b}}) {
    Instruction in;
    in.op = OpKind::Cx;
    in.qubits = {c, t};
    out.push_back(std::move(in));
  }
}

}  // namespace

SwapPathCircuit gen_swap_path(const DeviceModel& device, QubitId qa, QubitId qb) {
  if (qa == qb) throw ArgumentError("swap path endpoints must differ");
  if (qa < 0 || qb < 0 || qa >= device.num_qubits() || qb >= device.num_qubits()) {
    throw ArgumentError("swap path endpoint out of range");
  }
  if (device.qubit_distance(qa, qb) < 0) throw ArgumentError("no path between the endpoints");

  SwapPathCircuit result;
  result.path = device.shortest_path(qa, qb);
  const int hops = static_cast<int>(result.path.size()) - 1;
  const int swaps = hops - 1;
  int left = swaps / 2;
  if (swaps % 2 == 1) {
    // Extra swap goes to the half whose qubits have the larger coherence sum.
    double left_sum = 0.0;
    double right_sum = 0.0;
    for (int k = 0; k <= hops / 2; ++k) left_sum += device.qubit(result.path[k]).coherence_ns();
    for (int k = hops / 2; k <= hops; ++k) right_sum += device.qubit(result.path[k]).coherence_ns();
    if (left_sum >= right_sum) {
      left += 1;
      result.note = "odd swap count: extra swap on the first endpoint's side";
    } else {
      result.note = "odd swap count: extra swap on the second endpoint's side";
    }
  }
  const int right = swaps - left;

  std::vector<Instruction> body;
  Instruction prep;
  prep.op = OpKind::U;
  prep.name = "u2";
  prep.qubits = {qa};
  body.push_back(prep);
  for (int k = 0; k < left; ++k) {
    result.swaps.emplace_back(result.path[k], result.path[k + 1]);
    append_swap(body, result.path[k], result.path[k + 1]);
  }
  for (int k = 0; k < right; ++k) {
    result.swaps.emplace_back(result.path[hops - k], result.path[hops - k - 1]);
    append_swap(body, result.path[hops - k], result.path[hops - k - 1]);
  }
  result.meeting_edge = {result.path[left], result.path[left + 1]};
  Instruction final_cx;
  final_cx.op = OpKind::Cx;
  final_cx.qubits = {result.meeting_edge.first, result.meeting_edge.second};
  body.push_back(final_cx);

  std::vector<QubitId> touched = result.path;
  std::sort(touched.begin(), touched.end());
  for (QubitId q : touched) {
    Instruction m;
    m.op = OpKind::Measure;
    m.qubits = {q};
    body.push_back(m);
  }
  result.circuit = CircuitIR(device.num_qubits(), std::move(body));
  return result;
}

CircuitIR gen_random_circuit(const DeviceModel& device, int n_qubits, int depth, std::uint64_t seed) {
  if (n_qubits <= 0 || depth <= 0) throw ArgumentError("random circuit parameters must be positive");
  if (n_qubits > device.num_qubits()) throw ArgumentError("random circuit needs more qubits than the device has");
  static const char* const kNames[] = {"sx", "sy", "t"};

  std::vector<std::pair<QubitId, QubitId>> edges;
  for (auto [a, b] : device.edges()) {
    if (a < n_qubits && b < n_qubits) edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges.begin(), edges.end());

  SplitMix64 rng(seed);
  std::vector<Instruction> body;
  for (int layer = 0; layer < depth; ++layer) {
    if (layer % 2 == 0) {
      auto order = edges;
      rng.shuffle(order);
      std::vector<bool> busy(n_qubits, false);
      for (auto [a, b] : order) {
        if (busy[a] || busy[b]) continue;
        busy[a] = busy[b] = true;
        Instruction in;
        in.op = OpKind::Cx;
        in.qubits = rng.below(2) ? std::vector<QubitId>{a, b} : std::vector<QubitId>{b, a};
        body.push_back(std::move(in));
      }
    } else {
      for (QubitId q = 0; q < n_qubits; ++q) {
        Instruction in;
        in.op = OpKind::U;
        in.name = kNames[rng.below(3)];
        in.qubits = {q};
        body.push_back(std::move(in));
      }
    }
  }
  for (QubitId q = 0; q < n_qubits; ++q) {
    Instruction m;
    m.op = OpKind::Measure;
    m.qubits = {q};
    body.push_back(m);
  }
  return CircuitIR(n_qubits, std::move(body));
}

}  // namespace xtalk
