#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "test_support.hpp"
#include "xtalk/error.hpp"
#include "xtalk/scheduler.hpp"

namespace xtalk {
namespace {

using testing::chain6;
using testing::fixture;
using testing::fuzz_instance;
using testing::make_chain;
using testing::objective_oracle;

constexpr TimeNs kGrid = 50;

// Exhaustive search over start times on a 50 ns lattice with readouts aligned
// at a common time. Returns the best objective for each requested omega.
std::vector<double> brute_force(const CircuitIR& ir, const DeviceModel& d, const std::vector<double>& omegas) {
  ScheduleModel model(ir, d);
  const auto& pairs = model.candidates().pairs;
  std::vector<InstrId> body;
  TimeNs total = 0;
  for (const auto& in : ir.instructions()) {
    if (in.op == OpKind::Measure) continue;
    body.push_back(in.id);
    total += d.gate(*in.hw_gate).duration_ns;
  }
  std::vector<double> best(omegas.size(), std::numeric_limits<double>::infinity());
  std::vector<TimeNs> s(ir.size(), 0);
  auto dur = [&](InstrId id) { return d.gate(*ir.at(id).hw_gate).duration_ns; };

  for (TimeNs m = 0; m <= total; m += kGrid) {
    for (InstrId r : ir.measure_instructions()) s[r] = m;
    auto assign = [&](auto&& self, std::size_t k) -> void {
      if (k == body.size()) {
        for (std::size_t w = 0; w < omegas.size(); ++w) {
          best[w] = std::min(best[w], objective_oracle(ir, d, s, omegas[w], pairs));
        }
        return;
      }
      const InstrId id = body[k];
      TimeNs lo = 0;
      for (InstrId p : ir.predecessors(id)) lo = std::max(lo, s[p] + dur(p));
      for (TimeNs t = lo; t + dur(id) <= m; t += kGrid) {
        s[id] = t;
        bool ok = true;
        for (auto [a, b] : pairs) {
          InstrId other = a == id ? b : b == id ? a : -1;
          if (other < 0 || std::find(body.begin(), body.begin() + k, other) == body.begin() + k) continue;
          if (partially_overlap(t, dur(id), s[other], dur(other))) ok = false;
        }
        if (ok) self(self, k + 1);
      }
    };
    assign(assign, 0);
  }
  return best;
}

// As-late-as-possible starts computed by a backward pass over successors.
std::vector<TimeNs> alap_oracle(const CircuitIR& ir, const DeviceModel& d) {
  const int n = ir.size();
  auto dur = [&](InstrId id) { return ir.at(id).op == OpKind::Barrier ? 0 : d.gate(*ir.at(id).hw_gate).duration_ns; };
  // Work in distance-before-horizon units, then shift to start at zero.
  std::vector<TimeNs> before(n, 0);
  for (int id = n - 1; id >= 0; --id) {
    TimeNs latest_end = 0;
    if (ir.at(id).op != OpKind::Measure) {
      for (InstrId s : ir.successors(id)) latest_end = std::max(latest_end, before[s]);
    }
    before[id] = latest_end + dur(id);
  }
  TimeNs horizon = 0;
  for (int id = 0; id < n; ++id) horizon = std::max(horizon, before[id]);
  std::vector<TimeNs> starts(n);
  for (int id = 0; id < n; ++id) starts[id] = horizon - before[id];
  return starts;
}

bool z3_available() { return std::system("command -v z3 > /dev/null 2>&1") == 0; }

TEST(BuildProblem, ThreeCxConstraintCounts) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto p = build_problem(ir, chain6(), 0.5);
  EXPECT_EQ(p.pairs, (std::vector<std::pair<InstrId, InstrId>>{{1, 2}}));
  EXPECT_EQ(p.counts.dependency, static_cast<std::int64_t>(ir.dag_edges().size()));
  EXPECT_EQ(p.counts.indicator, 1);
  EXPECT_EQ(p.counts.gate_error, 2 + 2 + 1);
  EXPECT_EQ(p.counts.no_partial_overlap, 4);
  EXPECT_EQ(p.counts.readout, 5);
  std::int64_t per_qubit = 0;
  for (const auto& in : ir.instructions()) per_qubit += static_cast<std::int64_t>(in.qubits.size());
  EXPECT_EQ(p.counts.lifetime, ir.size() + 6 + per_qubit);
  EXPECT_EQ(p.counts.total(), p.counts.dependency + 1 + 5 + 4 + 5 + p.counts.lifetime);
  EXPECT_EQ(p.pair_index(2, 1), 0);
  EXPECT_EQ(p.pair_index(1, 3), -1);
}

TEST(BuildProblem, GateErrorCountIsPowerOfCandidates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = fuzz_instance(seed);
    auto p = build_problem(inst.circuit, inst.device, 0.5);
    std::int64_t expected = 0;
    for (InstrId i : inst.circuit.cx_instructions()) expected += std::int64_t{1} << p.model->candidates_of(i).size();
    EXPECT_EQ(p.counts.gate_error, expected);
    EXPECT_EQ(p.counts.no_partial_overlap, 4 * p.counts.indicator);
  }
}

TEST(Backend, NamesRoundTrip) {
  EXPECT_EQ(parse_backend(to_string(Backend::Internal)), Backend::Internal);
  EXPECT_EQ(parse_backend(to_string(Backend::SmtLib)), Backend::SmtLib);
  EXPECT_THROW(parse_backend("cplex"), ArgumentError);
}

TEST(SeriesSchedule, BackToBackInProgramOrder) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = series_schedule(ir, chain6());
  EXPECT_EQ(s.start_ns, (std::vector<TimeNs>{0, 50, 450, 850, 1250, 1250, 1250, 1250, 1250, 1250}));
  EXPECT_EQ(s.makespan_ns, 2250);
  EXPECT_TRUE(verify_schedule(ir, chain6(), s).empty());
}

TEST(ParallelSchedule, MatchesAlapOracle) {
  auto ir = bind_to_device(load_circuit(fixture("three_cx.qc")), chain6());
  auto s = parallel_schedule(ir, chain6());
  EXPECT_EQ(s.start_ns, alap_oracle(ir, chain6()));
  EXPECT_EQ(s.makespan_ns, 1450);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto ir2 = bind_to_device(gen_random_circuit(testing::grid20(), 8, 6, seed), testing::grid20());
    EXPECT_EQ(parallel_schedule(ir2, testing::grid20()).start_ns, alap_oracle(ir2, testing::grid20())) << seed;
  }
}

TEST(Solve, ThreeCxSerializesCrosstalkPairAndShortensQubitTwo) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = solve(build_problem(ir, chain6(), 0.5));
  EXPECT_TRUE(s.stats.optimal);
  EXPECT_FALSE(intervals_overlap(s.start_ns[1], 400, s.start_ns[2], 400));
  // cx(2,3) runs after cx(0,1) so the short-lived qubit 2 starts late.
  EXPECT_GE(s.start_ns[2], s.start_ns[1] + 400);
  EXPECT_EQ(s.per_qubit_lifetime_ns[2], 1400);
  EXPECT_LE(s.objective, series_schedule(ir, chain6()).objective);
  EXPECT_LE(s.objective, parallel_schedule(ir, chain6()).objective);
  EXPECT_TRUE(verify_schedule(ir, chain6(), s).empty());
}

TEST(Solve, MatchesBruteForceOnSmallInstances) {
  const std::vector<double> omegas{0.0, 0.5, 1.0};
  int checked = 0;
  int with_pairs = 0;
  for (std::uint64_t seed = 0; checked < 12 && seed < 400; ++seed) {
    auto inst = fuzz_instance(seed, 4);
    if (inst.circuit.size() - 6 > 5) continue;
    if (ScheduleModel(inst.circuit, inst.device).candidates().pairs.empty()) {
      if (checked - with_pairs >= 4) continue;
    } else {
      ++with_pairs;
    }
    auto oracle = brute_force(inst.circuit, inst.device, omegas);
    for (std::size_t w = 0; w < omegas.size(); ++w) {
      auto s = solve(build_problem(inst.circuit, inst.device, omegas[w]));
      EXPECT_NEAR(s.objective, oracle[w], 1e-9) << "seed " << seed << " omega " << omegas[w];
    }
    ++checked;
  }
  EXPECT_EQ(checked, 12);
  EXPECT_GE(with_pairs, 8);
}

TEST(Solve, OmegaZeroMatchesParallelMakespan) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = fuzz_instance(seed);
    auto s = solve(build_problem(inst.circuit, inst.device, 0.0));
    EXPECT_EQ(s.makespan_ns, parallel_schedule(inst.circuit, inst.device).makespan_ns) << seed;
  }
}

TEST(Solve, OmegaOneAvoidsHighCrosstalkOverlap) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = fuzz_instance(seed);
    auto p = build_problem(inst.circuit, inst.device, 1.0);
    auto s = solve(p);
    for (auto [i, j] : p.pairs) {
      EXPECT_FALSE(intervals_overlap(s.start_ns[i], p.model->duration(i), s.start_ns[j], p.model->duration(j)))
          << seed << ": " << i << " " << j;
    }
  }
}

TEST(Solve, TradeoffIsMonotoneInOmega) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto inst = fuzz_instance(seed);
    double prev_logs = std::numeric_limits<double>::infinity();
    double prev_life = -1.0;
    for (double omega : {0.05, 0.25, 0.45, 0.65, 0.85, 0.95}) {
      auto p = build_problem(inst.circuit, inst.device, omega);
      auto s = solve(p);
      auto eval = evaluate_model(*p.model, s.start_ns);
      EXPECT_LE(eval.log_error_sum, prev_logs + 1e-9) << seed << " " << omega;
      EXPECT_GE(eval.lifetime_sum, prev_life - 1e-9) << seed << " " << omega;
      prev_logs = eval.log_error_sum;
      prev_life = eval.lifetime_sum;
    }
  }
}

TEST(Solve, NodeLimitReportsNonOptimal) {
  auto ir = gen_random_circuit(testing::grid20(), 18, 20, 3);
  SolveOptions options;
  options.node_limit = 1;
  auto s = solve(build_problem(ir, testing::grid20(), 0.5), options);
  EXPECT_FALSE(s.stats.optimal);
  EXPECT_TRUE(verify_schedule(ir, testing::grid20(), s).empty());
}

TEST(Smtlib, EmitsDeclarationsAndObjective) {
  auto p = build_problem(load_circuit(fixture("three_cx.qc")), chain6(), 0.5);
  auto text = emit_smtlib(p);
  for (int id = 0; id < 10; ++id) {
    EXPECT_NE(text.find("(declare-const tau_" + std::to_string(id) + " Real)"), std::string::npos) << id;
  }
  EXPECT_NE(text.find("(minimize"), std::string::npos);
  EXPECT_NE(text.find("(check-sat)"), std::string::npos);
}

TEST(Smtlib, ParsesModelValues) {
  auto starts = parse_smt_model("sat\n((tau_0 5)\n (tau_2 (- 3))\n (tau_1 40))\n", 3);
  EXPECT_EQ(starts, (std::vector<TimeNs>{5, 40, -3}));
  EXPECT_EQ(parse_smt_model("sat\n((tau_0 450.0) (tau_1 (/ 2401.0 2.0)))\n", 2), (std::vector<TimeNs>{450, 1201}));
  EXPECT_THROW(parse_smt_model("unsat\n", 3), SolverError);
  EXPECT_THROW(parse_smt_model("sat\n((tau_0 5))\n", 3), SolverError);
}

TEST(Smtlib, AgreesWithInternalBackend) {
  if (!z3_available()) GTEST_SKIP() << "z3 not installed";
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = fuzz_instance(seed);
    auto p = build_problem(inst.circuit, inst.device, 0.5);
    SolveOptions smt;
    smt.backend = Backend::SmtLib;
    smt.timeout_s = 60;
    EXPECT_NEAR(solve(p, smt).objective, solve(p).objective, 1e-6) << seed;
  }
}

TEST(Smtlib, MissingSolverIsSolverError) {
  auto p = build_problem(load_circuit(fixture("three_cx.qc")), chain6(), 0.5);
  SolveOptions options;
  options.backend = Backend::SmtLib;
  options.solver_cmd = "/nonexistent/solver";
  EXPECT_THROW(solve(p, options), SolverError);
}

TEST(InsertBarriers, ReplayReproducesOverlapSet) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = solve(build_problem(ir, chain6(), 0.5));
  auto out = insert_barriers(ir, chain6(), s);
  EXPECT_GE(out.barriers_added, 1);
  auto replay = parallel_schedule(out.circuit, chain6());
  EXPECT_FALSE(intervals_overlap(replay.start_ns[out.new_id[1]], 400, replay.start_ns[out.new_id[2]], 400));
  EXPECT_EQ(parse_circuit(serialize_circuit(out.circuit)).size(), out.circuit.size());
}

TEST(InsertBarriers, NoBarrierWhenAlapAlreadyMatches) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = parallel_schedule(ir, chain6());
  auto out = insert_barriers(ir, chain6(), s);
  EXPECT_EQ(out.barriers_added, 0);
  EXPECT_EQ(out.circuit.size(), ir.size());
}

TEST(InsertBarriers, FuzzRoundTrip) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = fuzz_instance(seed);
    auto p = build_problem(inst.circuit, inst.device, 0.7);
    auto s = solve(p);
    auto out = insert_barriers(inst.circuit, inst.device, s);
    ScheduleModel replay_model(out.circuit, inst.device);
    auto replay = parallel_schedule(out.circuit, inst.device);
    for (auto [i, j] : p.pairs) {
      bool want = intervals_overlap(s.start_ns[i], p.model->duration(i), s.start_ns[j], p.model->duration(j));
      InstrId a = out.new_id[i], b = out.new_id[j];
      bool got = intervals_overlap(replay.start_ns[a], replay_model.duration(a), replay.start_ns[b],
                                   replay_model.duration(b));
      EXPECT_EQ(got, want) << seed << ": " << i << " " << j;
    }
  }
}

TEST(VerifySchedule, AcceptsAllSchedulers) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  for (const auto& s : {series_schedule(ir, chain6()), parallel_schedule(ir, chain6()),
                        solve(build_problem(ir, chain6(), 0.5))}) {
    EXPECT_TRUE(verify_schedule(ir, chain6(), s).empty()) << s.name;
  }
}

TEST(VerifySchedule, ClassifiesCorruptions) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  const auto good = solve(build_problem(ir, chain6(), 0.5));
  auto kinds = [&](const Schedule& s) {
    std::set<ViolationKind> out;
    for (const auto& v : verify_schedule(ir, chain6(), s)) out.insert(v.kind);
    return out;
  };
  {
    auto s = good;
    s.start_ns.pop_back();
    EXPECT_TRUE(kinds(s).count(ViolationKind::Coverage));
  }
  {
    auto s = good;
    s.start_ns[1] = s.start_ns[0];  // cx(0,1) starts before its u finishes
    EXPECT_TRUE(kinds(s).count(ViolationKind::DataDependency));
  }
  {
    auto s = good;
    s.start_ns[9] += 50;
    EXPECT_TRUE(kinds(s).count(ViolationKind::ReadoutAlignment));
  }
  {
    auto s = good;
    s.start_ns[2] = s.start_ns[1] + 200;
    EXPECT_TRUE(kinds(s).count(ViolationKind::NoPartialOverlap));
  }
  {
    auto s = good;
    s.objective += 0.5;
    EXPECT_EQ(kinds(s), std::set<ViolationKind>{ViolationKind::Objective});
  }
  {
    auto s = good;
    s.makespan_ns += 1;
    EXPECT_EQ(kinds(s), std::set<ViolationKind>{ViolationKind::Makespan});
  }
  {
    auto s = good;
    s.per_gate_error[1] = 0.5;
    EXPECT_EQ(kinds(s), std::set<ViolationKind>{ViolationKind::GateError});
  }
  {
    auto s = good;
    s.per_qubit_lifetime_ns[2] += 10;
    EXPECT_EQ(kinds(s), std::set<ViolationKind>{ViolationKind::Lifetime});
  }
  {
    auto s = good;
    s.start_ns[0] = -5;
    EXPECT_TRUE(kinds(s).count(ViolationKind::NegativeStart));
  }
}

TEST(VerifySchedule, BaselinesMayPartiallyOverlap) {
  // cx(1,2) is longer than cx(3,4), and the trailing single-qubit gates push
  // cx(3,4) to start before cx(1,2) under ALAP.
  auto d = make_chain(5, 400, 0.01, {{{1, 3}, 0.1}});
  ConditionalErrorTable t = d.conditional_errors();
  std::vector<HardwareGate> gates = d.gates();
  gates[1].duration_ns = 600;
  d = DeviceModel(d.qubits(), d.edges(), gates, t);
  auto ir = parse_circuit("cx 1 2\ncx 3 4\nu 4\nu 4\nu 4\nu 4\nu 4\nmeasure 1\nmeasure 2\nmeasure 3\nmeasure 4\n");
  auto base = parallel_schedule(ir, d);
  ASSERT_TRUE(partially_overlap(base.start_ns[0], 600, base.start_ns[1], 400));
  EXPECT_TRUE(verify_schedule(ir, d, base).empty());
  base.barrier_enforced = true;
  EXPECT_FALSE(verify_schedule(ir, d, base).empty());
}

}  // namespace
}  // namespace xtalk
