#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_support.hpp"
#include "xtalk/circuit.hpp"
#include "xtalk/error.hpp"

namespace xtalk {
namespace {

using testing::chain6;
using testing::fixture;
using testing::grid20;
using testing::make_chain;

// Reachability computed from raw per-qubit program order, without reduction.
std::vector<std::vector<bool>> reach_oracle(const CircuitIR& ir) {
  const int n = ir.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      const auto& a = ir.at(i).qubits;
      const auto& b = ir.at(j).qubits;
      bool shared = std::any_of(a.begin(), a.end(), [&](QubitId q) { return std::count(b.begin(), b.end(), q); });
      if (shared) reach[i][j] = true;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (int j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  return reach;
}

TEST(ParseCircuit, ThreeCxFixture) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  EXPECT_EQ(ir.n_qubits(), 6);
  EXPECT_EQ(ir.size(), 10);
  EXPECT_EQ(ir.cx_instructions(), (std::vector<InstrId>{1, 2, 3}));
  EXPECT_EQ(ir.measure_instructions().size(), 6u);
}

TEST(ParseCircuit, NameDefaultsAndComments) {
  auto ir = parse_circuit("u 0 # prep\nu 1 sx\n\n  cx 0 1\n");
  EXPECT_EQ(ir.n_qubits(), 2);
  EXPECT_EQ(ir.at(0).name, "u");
  EXPECT_EQ(ir.at(1).name, "sx");
  EXPECT_EQ(ir.at(2).op, OpKind::Cx);
}

TEST(ParseCircuit, ErrorsCarryLineNumbers) {
  struct Case {
    const char* text;
    int line;
  };
  for (auto [text, line] : std::vector<Case>{{"qreg 2\ncx 0 0\n", 2},
                                             {"qreg 2\nu 0\nfoo 1\n", 3},
                                             {"qreg 2\n\ncx 0 2\n", 3},
                                             {"u 0\nqreg 2\n", 2},
                                             {"barrier 0 1 0\n", 1},
                                             {"measure -1\n", 1},
                                             {"qreg 2\nqreg 3\n", 2},
                                             {"cx 0\n", 1}}) {
    try {
      parse_circuit(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  }
}

TEST(ParseCircuit, MissingFileIsParseError) { EXPECT_THROW(load_circuit(fixture("nope.qc")), ParseError); }

TEST(SerializeCircuit, RoundTripIsIdentity) {
  auto ir = parse_circuit("qreg 4\nu 0 sx\ncx 0 1\nbarrier 1 2\nu 3\ncx 2 3\nmeasure 0\nmeasure 3\n");
  auto again = parse_circuit(serialize_circuit(ir));
  EXPECT_EQ(again, ir);
  EXPECT_EQ(serialize_circuit(again), serialize_circuit(ir));
}

TEST(SerializeCircuit, RandomCircuitsRoundTrip) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ir = gen_random_circuit(grid20(), 12, 9, seed);
    EXPECT_EQ(parse_circuit(serialize_circuit(ir)), ir) << seed;
  }
}

TEST(BuildDag, ChainOfThreeOnOneQubit) {
  auto ir = parse_circuit("u 0\nu 0\nu 0\n");
  EXPECT_EQ(ir.dag_edges(), (std::vector<std::pair<InstrId, InstrId>>{{0, 1}, {1, 2}}));
  EXPECT_TRUE(ir.is_ancestor(0, 2));
  EXPECT_FALSE(ir.is_ancestor(2, 0));
}

TEST(BuildDag, TransitiveEdgeIsRemoved) {
  // cx 0 1 -> u 1 -> cx 1 0 would add a direct 0->2 edge through qubit 0.
  auto ir = parse_circuit("cx 0 1\nu 1\ncx 1 0\n");
  EXPECT_EQ(ir.dag_edges(), (std::vector<std::pair<InstrId, InstrId>>{{0, 1}, {1, 2}}));
}

TEST(BuildDag, BarrierFencesItsQubits) {
  auto ir = parse_circuit("u 0\nu 1\nbarrier 0 1\nu 0\nu 1\nu 2\n");
  EXPECT_TRUE(ir.is_ancestor(0, 4));
  EXPECT_TRUE(ir.is_ancestor(1, 3));
  EXPECT_FALSE(ir.comparable(5, 0));
  EXPECT_EQ(ir.used_qubits(), (std::vector<QubitId>{0, 1, 2}));
}

TEST(BuildDag, MatchesOracleOnRandomCircuits) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ir = gen_random_circuit(grid20(), 10, 8, seed);
    auto reach = reach_oracle(ir);
    for (int i = 0; i < ir.size(); ++i) {
      for (int j = 0; j < ir.size(); ++j) ASSERT_EQ(ir.is_ancestor(i, j), reach[i][j]) << i << " " << j;
    }
    // Transitively reduced: no edge is implied by a longer path.
    for (auto [i, j] : ir.dag_edges()) {
      for (int k = 0; k < ir.size(); ++k) ASSERT_FALSE(reach[i][k] && reach[k][j]) << i << " " << k << " " << j;
    }
  }
}

TEST(CircuitIR, RejectsWrongArity) {
  Instruction in;
  in.op = OpKind::Cx;
  in.qubits = {0};
  EXPECT_THROW(CircuitIR(2, {in}), ArgumentError);
  in.qubits = {0, 0};
  EXPECT_THROW(CircuitIR(2, {in}), ArgumentError);
  in.qubits = {0, 5};
  EXPECT_THROW(CircuitIR(2, {in}), ArgumentError);
}

TEST(BindToDevice, ResolvesHardwareGates) {
  auto ir = bind_to_device(load_circuit(fixture("three_cx.qc")), chain6());
  EXPECT_TRUE(ir.is_bound());
  EXPECT_EQ(ir.at(0).hw_gate, chain6().one_qubit_gate_on(0));
  EXPECT_EQ(ir.at(1).hw_gate, chain6().cx_gate_on(0, 1));
  EXPECT_EQ(instruction_duration(ir.at(1), chain6()), 400);
  EXPECT_EQ(instruction_duration(ir.at(4), chain6()), 1000);
}

TEST(BindToDevice, RejectsUncoupledCx) {
  EXPECT_THROW(bind_to_device(parse_circuit("cx 0 2\n"), chain6()), InvariantError);
  EXPECT_THROW(bind_to_device(parse_circuit("qreg 7\nu 0\n"), chain6()), InvariantError);
}

TEST(CanOverlap, ParallelCrosstalkPair) {
  auto ir = bind_to_device(load_circuit(fixture("three_cx.qc")), chain6());
  EXPECT_EQ(can_overlap(ir, chain6(), 1), (std::vector<InstrId>{2}));
  EXPECT_EQ(can_overlap(ir, chain6(), 2), (std::vector<InstrId>{1}));
  // E(4,5 | 2,3) = 0.012 is below 3 * 0.01.
  EXPECT_TRUE(can_overlap(ir, chain6(), 3).empty());
  CanOverlapOptions loose;
  loose.prune_by_crosstalk = false;
  EXPECT_EQ(can_overlap(ir, chain6(), 3, loose), (std::vector<InstrId>{2}));
}

TEST(CanOverlap, DependentGatesNeverOverlap) {
  auto ir = bind_to_device(parse_circuit("cx 0 1\ncx 1 2\ncx 2 3\n"), chain6());
  for (InstrId i : ir.cx_instructions()) EXPECT_TRUE(can_overlap(ir, chain6(), i).empty());
}

TEST(CanOverlap, RequiresBoundCircuit) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  EXPECT_THROW(can_overlap(ir, chain6(), 1), ArgumentError);
  auto bound = bind_to_device(ir, chain6());
  EXPECT_THROW(can_overlap(bound, chain6(), 0), ArgumentError);
}

TEST(CandidateOverlaps, CapKeepsMostSevereAndStaysSymmetric) {
  // cx on (2,3) sits one hop from three independent partners with rising severity.
  auto d = make_chain(8, 400, 0.01, {{{2, 0}, 0.05}, {{2, 4}, 0.08}, {{2, 6}, 0.2}});
  auto ir = bind_to_device(parse_circuit("cx 2 3\ncx 0 1\ncx 4 5\n"), d);
  CanOverlapOptions options;
  options.require_one_hop = false;
  options.cap = 1;
  auto result = candidate_overlaps(ir, d, options);
  EXPECT_EQ(result.per_instruction[0], (std::vector<InstrId>{2}));
  EXPECT_EQ(result.pairs, (std::vector<std::pair<InstrId, InstrId>>{{0, 2}}));
  EXPECT_FALSE(result.warnings.empty());
  for (auto [i, j] : result.pairs) {
    EXPECT_NE(std::find(result.per_instruction[j].begin(), result.per_instruction[j].end(), i),
              result.per_instruction[j].end());
  }
}

TEST(GenSwapPath, GridZeroToThirteen) {
  auto swap = gen_swap_path(grid20(), 0, 13);
  EXPECT_EQ(swap.path, (std::vector<QubitId>{0, 5, 10, 11, 12, 13}));
  ASSERT_EQ(swap.swaps.size(), 4u);
  EXPECT_EQ(swap.meeting_edge, std::make_pair(10, 11));
  const auto& ir = swap.circuit;
  EXPECT_EQ(ir.at(0).op, OpKind::U);
  EXPECT_EQ(ir.cx_instructions().size(), 13u);
  EXPECT_EQ(ir.measure_instructions().size(), 6u);
  EXPECT_NO_THROW(bind_to_device(ir, grid20()));
}

TEST(GenSwapPath, AdjacentEndpointsNeedNoSwap) {
  auto swap = gen_swap_path(grid20(), 0, 1);
  EXPECT_TRUE(swap.swaps.empty());
  EXPECT_EQ(swap.meeting_edge, std::make_pair(0, 1));
}

TEST(GenSwapPath, OddSplitIsRecorded) {
  auto swap = gen_swap_path(grid20(), 0, 3);
  EXPECT_EQ(swap.swaps.size(), 2u);
  EXPECT_TRUE(swap.note.empty());
  auto odd = gen_swap_path(grid20(), 0, 4);
  EXPECT_EQ(odd.swaps.size(), 3u);
  EXPECT_FALSE(odd.note.empty());
}

TEST(GenSwapPath, RejectsBadEndpoints) {
  EXPECT_THROW(gen_swap_path(grid20(), 3, 3), ArgumentError);
  EXPECT_THROW(gen_swap_path(grid20(), 0, 20), ArgumentError);
}

TEST(GenRandomCircuit, DeterministicAndBindable) {
  auto a = gen_random_circuit(grid20(), 18, 40, 7);
  auto b = gen_random_circuit(grid20(), 18, 40, 7);
  EXPECT_EQ(a, b);
  EXPECT_NE(serialize_circuit(a), serialize_circuit(gen_random_circuit(grid20(), 18, 40, 8)));
  EXPECT_EQ(a.measure_instructions().size(), 18u);
  EXPECT_NO_THROW(bind_to_device(a, grid20()));
  for (const auto& in : a.instructions()) {
    for (QubitId q : in.qubits) EXPECT_LT(q, 18);
  }
}

}  // namespace
}  // namespace xtalk
