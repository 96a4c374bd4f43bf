#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "xtalk/characterization.hpp"
#include "xtalk/error.hpp"

namespace xtalk {
namespace {

using testing::chain6;
using testing::grid20;

// Pairwise k-hop compatibility oracle over the four gates of two pairs.
bool compatible(const DeviceModel& d, const SrbPair& a, const SrbPair& b, int k) {
  for (GateId x : {a.gi, a.gj}) {
    for (GateId y : {b.gi, b.gj}) {
      if (gate_hop_distance(d, x, y) < k) return false;
    }
  }
  return true;
}

TEST(EstimateCost, ExactExecutionCount) {
  auto cost = estimate_cost(221, 100, 1024);
  EXPECT_EQ(cost.experiments, 221);
  EXPECT_EQ(cost.executions, 22'630'400);
  EXPECT_DOUBLE_EQ(cost.wall_time_s, 22'630'400 * kDefaultPerTrialSeconds);
}

TEST(EstimateCost, RejectsInvalidParameters) {
  EXPECT_THROW(estimate_cost(-1, 100, 1024), ArgumentError);
  EXPECT_EQ(estimate_cost(0, 100, 1024).executions, 0);
  EXPECT_THROW(estimate_cost(10, 0, 1024), ArgumentError);
}

TEST(EstimateCost, PlanCountsBins) {
  ExperimentPlan plan;
  plan.bins = {{{0, 2}}, {{1, 3}, {0, 4}}};
  EXPECT_EQ(estimate_cost(plan, 10, 100).executions, 2000);
  EXPECT_EQ(plan.pair_count(), 3u);
}

TEST(EnumeratePairs, PolicyCountsOnChain) {
  const auto& d = chain6();
  EXPECT_EQ(enumerate_pairs(d, PairPolicy::AllPairs).size(), 6u);
  // One hop: (01,23) (12,34) (23,45).
  EXPECT_EQ(enumerate_pairs(d, PairPolicy::OneHop),
            (std::vector<SrbPair>{{0, 2}, {1, 3}, {2, 4}}));
  EXPECT_EQ(enumerate_pairs(d, PairPolicy::HighCrosstalkDaily), (std::vector<SrbPair>{{0, 2}}));
}

TEST(EnumeratePairs, GridOneHopMatchesOracle) {
  const auto& d = grid20();
  auto all = enumerate_pairs(d, PairPolicy::AllPairs);
  std::size_t oracle = 0;
  for (const auto& p : all) oracle += gate_hop_distance(d, p.gi, p.gj) == 1;
  EXPECT_EQ(all.size(), simultaneous_pairs(d).size());
  EXPECT_EQ(enumerate_pairs(d, PairPolicy::OneHop).size(), oracle);
}

TEST(PolicyNames, RoundTrip) {
  for (auto p : {PairPolicy::AllPairs, PairPolicy::OneHop, PairPolicy::HighCrosstalkDaily}) {
    EXPECT_EQ(parse_pair_policy(to_string(p)), p);
  }
  EXPECT_THROW(parse_pair_policy("weekly"), ParseError);
}

TEST(PairDistance, MinimumOverFourGates) {
  const auto& d = chain6();
  EXPECT_EQ(pair_distance(d, {0, 2}, {1, 3}), 0);
  EXPECT_EQ(pair_distance(d, {0, 1}, {3, 4}), 1);
}

TEST(BinPack, BinsAreCompatibleAndPartitionInput) {
  const auto& d = grid20();
  auto pairs = enumerate_pairs(d, PairPolicy::OneHop);
  auto plan = bin_pack(pairs, d, 2, 100, 11);
  EXPECT_TRUE(validate_plan(plan, pairs, d).empty());
  std::multiset<SrbPair> seen;
  for (const auto& bin : plan.bins) {
    for (std::size_t a = 0; a < bin.size(); ++a) {
      seen.insert(bin[a]);
      for (std::size_t b = a + 1; b < bin.size(); ++b) EXPECT_TRUE(compatible(d, bin[a], bin[b], 2));
    }
  }
  EXPECT_EQ(seen, std::multiset<SrbPair>(pairs.begin(), pairs.end()));
  EXPECT_LT(plan.bins.size(), pairs.size());
}

TEST(BinPack, MoreRepeatsNeverWorse) {
  const auto& d = grid20();
  auto pairs = enumerate_pairs(d, PairPolicy::OneHop);
  auto one = bin_pack(pairs, d, 2, 1, 5);
  auto many = bin_pack(pairs, d, 2, 50, 5);
  EXPECT_LE(many.bins.size(), one.bins.size());
  EXPECT_EQ(bin_pack(pairs, d, 2, 50, 5), many);
}

TEST(BinPack, RejectsBadParameters) {
  const auto& d = chain6();
  auto pairs = enumerate_pairs(d, PairPolicy::OneHop);
  EXPECT_THROW(bin_pack(pairs, d, 0, 1, 0), ArgumentError);
  EXPECT_THROW(bin_pack(pairs, d, 2, 0, 0), ArgumentError);
}

TEST(ValidatePlan, DetectsConflictsAndMissingPairs) {
  const auto& d = chain6();
  auto pairs = enumerate_pairs(d, PairPolicy::OneHop);
  ExperimentPlan plan;
  plan.k_min = 2;
  plan.bins = {{{0, 2}, {1, 3}}};
  auto problems = validate_plan(plan, pairs, d);
  EXPECT_GE(problems.size(), 2u);
}

TEST(PlanJson, RoundTrip) {
  const auto& d = grid20();
  auto pairs = enumerate_pairs(d, PairPolicy::OneHop);
  auto plan = bin_pack(pairs, d, 2, 10, 3);
  EXPECT_EQ(parse_plan(plan_to_json(plan)), plan);
  EXPECT_THROW(parse_plan(R"({"policy":"one-hop","k_min":2,"seed":0,"bins":[],"x":1})"), ParseError);
}

TEST(SimulateRb, DeterministicPerSeed) {
  SrbOptions options;
  options.sequences = 10;
  options.trials = 100;
  auto a = simulate_rb(0.01, options, 4);
  auto b = simulate_rb(0.01, options, 4);
  EXPECT_EQ(a.survival, b.survival);
  EXPECT_NE(a.survival, simulate_rb(0.01, options, 5).survival);
  EXPECT_EQ(a.lengths, options.lengths);
}

TEST(SimulateRb, ZeroErrorIsPerfectSurvival) {
  auto curve = simulate_rb(0.0, SrbOptions{}, 1);
  for (double s : curve.survival) EXPECT_DOUBLE_EQ(s, 1.0);
}

TEST(SimulateRb, RejectsOutOfModelError) {
  EXPECT_THROW(simulate_rb(-0.1, SrbOptions{}, 0), ArgumentError);
  EXPECT_THROW(simulate_rb(0.4, SrbOptions{}, 0), ArgumentError);
}

TEST(SimulateSrb, SimultaneousUsesConditionalError) {
  const auto& d = chain6();
  SrbOptions options;
  options.sequences = 20;
  auto ind = simulate_srb(d, {0, 2}, SrbMode::Independent, options, 9);
  auto sim = simulate_srb(d, {0, 2}, SrbMode::Simultaneous, options, 9);
  ASSERT_EQ(sim.size(), 2u);
  EXPECT_EQ(sim[0].gate, 0);
  EXPECT_EQ(sim[0].spectator, 2);
  EXPECT_FALSE(ind[0].spectator.has_value());
  EXPECT_LT(sim[0].survival.back(), ind[0].survival.back());
  EXPECT_THROW(simulate_srb(d, {0, 3}, SrbMode::Simultaneous, options, 9), ArgumentError);
}

TEST(DecayCsv, RoundTrip) {
  SrbOptions options;
  options.sequences = 5;
  auto curve = simulate_rb(0.02, options, 2);
  auto again = parse_decay_csv(decay_to_csv(curve));
  EXPECT_EQ(again.lengths, curve.lengths);
  ASSERT_EQ(again.survival.size(), curve.survival.size());
  for (std::size_t k = 0; k < curve.survival.size(); ++k) EXPECT_NEAR(again.survival[k], curve.survival[k], 1e-12);
  EXPECT_EQ(again.sequences, 5);
}

TEST(DecayCsv, Errors) {
  EXPECT_THROW(parse_decay_csv(""), ParseError);
  EXPECT_THROW(parse_decay_csv("m,p\n"), ParseError);
  try {
    parse_decay_csv("m,survival,sequence_count,trials\n1,0.9,10,100\n2,1.5,10,100\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

}  // namespace
}  // namespace xtalk
