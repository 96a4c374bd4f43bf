#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <iterator>
#include <sstream>
#include <string>

#include "xtalk/error.hpp"
#include "xtalk/scheduler.hpp"

namespace xtalk {

int OptimizationProblem::pair_index(InstrId a, InstrId b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{a, b});
  if (it == pairs.end() || *it != std::pair{a, b}) return -1;
  return static_cast<int>(it - pairs.begin());
}

OptimizationProblem build_problem(const CircuitIR& ir, const DeviceModel& device, double omega, double gamma) {
  CanOverlapOptions options;
  options.gamma = gamma;
  return build_problem(ir, device, omega, options);
}

OptimizationProblem build_problem(const CircuitIR& ir, const DeviceModel& device, double omega,
                                  const CanOverlapOptions& options) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw ArgumentError("omega must lie in [0, 1]");
  if (!(options.gamma > 1.0)) throw ArgumentError("gamma must be > 1");
  if (options.cap < 0 || options.cap > 20) throw ArgumentError("overlap cap must lie in [0, 20]");

  OptimizationProblem p;
  auto model = std::make_shared<ScheduleModel>(ir, device, options);
  p.model = model;
  p.omega = omega;
  p.pairs = model->candidates().pairs;
  std::sort(p.pairs.begin(), p.pairs.end());
  p.dependencies = model->ir().dag_edges();
  p.readouts = model->ir().measure_instructions();
  p.warnings = model->candidates().warnings;

  for (InstrId i : model->ir().cx_instructions()) {
    const auto& members = model->candidates_of(i);
    const std::size_t k = members.size();
    std::vector<int> indices;
    for (InstrId j : members) indices.push_back(p.pair_index(i, j));
    for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
      Implication imp;
      imp.gate = i;
      std::vector<InstrId> overlapping;
      for (std::size_t b = 0; b < k; ++b) {
        bool on = (mask >> b) & 1U;
        imp.guard.emplace_back(indices[b], on);
        if (on) overlapping.push_back(members[b]);
      }
      imp.log_error = std::log(model->gate_error(i, overlapping));
      p.implications.push_back(std::move(imp));
    }
  }

  const auto n_pairs = static_cast<std::int64_t>(p.pairs.size());
  p.counts.dependency = static_cast<std::int64_t>(p.dependencies.size());
  p.counts.indicator = n_pairs;
  p.counts.gate_error = static_cast<std::int64_t>(p.implications.size());
  p.counts.no_partial_overlap = 4 * n_pairs;
  p.counts.readout = p.readouts.empty() ? 0 : static_cast<std::int64_t>(p.readouts.size()) - 1;
  std::int64_t lifetime = model->size();
  for (QubitId q : model->used_qubits()) {
    lifetime += 1 + static_cast<std::int64_t>(model->qubit_instructions()[q].size());
  }
  p.counts.lifetime = lifetime;
  return p;
}

std::string_view to_string(Backend backend) { return backend == Backend::Internal ? "internal" : "smtlib"; }

Backend parse_backend(std::string_view text) {
  if (text == "internal") return Backend::Internal;
  if (text == "smtlib") return Backend::SmtLib;
  throw ArgumentError("unknown backend '" + std::string(text) + "' (expected internal or smtlib)");
}

// ---------------------------------------------------------------------------
// SMT-LIB2

namespace {

// SMT-LIB has no exponent notation and writes negatives as (- x).
std::string decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.18f", std::abs(value));
  std::string text = buf;
  return value < 0 ? "(- " + text + ")" : text;
}

std::string tau(InstrId id) { return "tau_" + std::to_string(id); }

std::string end_of(const ScheduleModel& m, InstrId id) {
  return "(+ " + tau(id) + " " + std::to_string(m.duration(id)) + ")";
}

}  // namespace

std::string emit_smtlib(const OptimizationProblem& problem) {
  const ScheduleModel& m = *problem.model;
  const auto& ir = m.ir();
  std::ostringstream out;
  out << "(set-option :produce-models true)\n";
  for (InstrId id = 0; id < ir.size(); ++id) {
    out << "(declare-const " << tau(id) << " Real)\n";
  }
  out << "(declare-const H Real)\n";
  for (auto [i, j] : problem.pairs) out << "(declare-const o_" << i << "_" << j << " Bool)\n";
  for (InstrId i : ir.cx_instructions()) out << "(declare-const le_" << i << " Real)\n";
  for (QubitId q : m.used_qubits()) {
    out << "(declare-const s_" << q << " Real)\n";
    out << "(declare-const t_" << q << " Real)\n";
  }
  for (InstrId id = 0; id < ir.size(); ++id) out << "(assert (>= " << tau(id) << " 0))\n";

  out << "; dependency\n";
  for (auto [i, j] : problem.dependencies) out << "(assert (>= " << tau(j) << " " << end_of(m, i) << "))\n";

  out << "; overlap indicators\n";
  for (auto [i, j] : problem.pairs) {
    out << "(assert (= o_" << i << "_" << j << " (and (< " << tau(j) << " " << end_of(m, i) << ") (< " << tau(i)
        << " " << end_of(m, j) << "))))\n";
  }

  out << "; gate error\n";
  for (const auto& imp : problem.implications) {
    std::string rhs = "(= le_" + std::to_string(imp.gate) + " " + decimal(imp.log_error) + ")";
    if (imp.guard.empty()) {
      out << "(assert " << rhs << ")\n";
      continue;
    }
    out << "(assert (=> (and";
    for (auto [k, on] : imp.guard) {
      auto [i, j] = problem.pairs[k];
      std::string lit = "o_" + std::to_string(i) + "_" + std::to_string(j);
      out << " " << (on ? lit : "(not " + lit + ")");
    }
    out << " true) " << rhs << "))\n";
  }

  out << "; no partial overlap\n";
  for (auto [i, j] : problem.pairs) {
    out << "(assert (or (<= " << end_of(m, i) << " " << tau(j) << ") (<= " << end_of(m, j) << " " << tau(i)
        << ") (and (<= " << tau(j) << " " << tau(i) << ") (<= " << end_of(m, i) << " " << end_of(m, j)
        << ")) (and (<= " << tau(i) << " " << tau(j) << ") (<= " << end_of(m, j) << " " << end_of(m, i)
        << "))))\n";
  }

  out << "; readout\n";
  for (std::size_t k = 1; k < problem.readouts.size(); ++k) {
    out << "(assert (= " << tau(problem.readouts[0]) << " " << tau(problem.readouts[k]) << "))\n";
  }

  out << "; lifetime\n";
  for (InstrId id = 0; id < ir.size(); ++id) out << "(assert (<= " << end_of(m, id) << " H))\n";
  for (QubitId q : m.used_qubits()) {
    for (InstrId id : m.qubit_instructions()[q]) out << "(assert (<= s_" << q << " " << tau(id) << "))\n";
    out << "(assert (= t_" << q << " (- H s_" << q << ")))\n";
  }

  out << "(minimize (+ 0.0";
  for (InstrId i : ir.cx_instructions()) out << " (* " << decimal(problem.omega) << " le_" << i << ")";
  for (QubitId q : m.used_qubits()) {
    out << " (* " << decimal((1.0 - problem.omega) / m.coherence_ns(q)) << " t_" << q << ")";
  }
  out << "))\n";
  out << "(check-sat)\n";
  out << "(get-value (";
  for (InstrId id = 0; id < ir.size(); ++id) out << (id ? " " : "") << tau(id);
  out << "))\n";
  return out.str();
}

std::vector<TimeNs> parse_smt_model(std::string_view output, int n_instructions) {
  std::istringstream in{std::string(output)};
  std::string status;
  in >> status;
  if (status != "sat") throw SolverError("solver answered '" + status + "' instead of sat");
  if (n_instructions == 0) return {};

  // Tokenize the remaining s-expression: ((tau_0 5.0) (tau_1 (- 3.0)) (tau_2 (/ 1.0 2.0)) ...)
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> tokens;
  std::string word;
  for (char c : rest) {
    if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) {
      if (!word.empty()) tokens.push_back(std::move(word));
      word.clear();
      if (c == '(' || c == ')') tokens.emplace_back(1, c);
    } else {
      word += c;
    }
  }
  if (!word.empty()) tokens.push_back(word);

  // Reads a numeral, (- x) or (/ x y) starting at tokens[k]; advances k.
  auto number = [&](auto&& self, std::size_t& k) -> double {
    if (k >= tokens.size()) throw SolverError("truncated solver model");
    if (tokens[k] != "(") {
      try {
        return std::stod(tokens[k++]);
      } catch (const std::exception&) {
        throw SolverError("unexpected token '" + tokens[k - 1] + "' in solver model");
      }
    }
    if (k + 1 >= tokens.size()) throw SolverError("truncated solver model");
    const std::string op = tokens[k + 1];
    k += 2;
    double value = 0.0;
    if (op == "-") {
      value = -self(self, k);
    } else if (op == "/") {
      double num = self(self, k);
      value = num / self(self, k);
    } else {
      throw SolverError("unexpected operator '" + op + "' in solver model");
    }
    if (k >= tokens.size() || tokens[k] != ")") throw SolverError("malformed solver model");
    ++k;
    return value;
  };

  // Start times are real-valued in the encoding; optimal vertices of the
  // difference constraints are integral, so values are rounded to the ns.
  std::map<int, TimeNs> values;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].rfind("tau_", 0) != 0) continue;
    int id = std::stoi(tokens[k].substr(4));
    std::size_t v = k + 1;
    values[id] = static_cast<TimeNs>(std::llround(number(number, v)));
    k = v - 1;
  }
  std::vector<TimeNs> starts(n_instructions);
  for (int id = 0; id < n_instructions; ++id) {
    auto it = values.find(id);
    if (it == values.end()) throw SolverError("solver model lacks tau_" + std::to_string(id));
    starts[id] = it->second;
  }
  return starts;
}

}  // namespace xtalk
