#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "xtalk/error.hpp"
#include "xtalk/evaluator.hpp"
#include "xtalk/scheduler.hpp"

namespace xtalk {
namespace {

using testing::chain6;
using testing::fixture;
using testing::fuzz_instance;

TEST(WilsonInterval, KnownEndpoints) {
  auto none = wilson_interval(0, 10);
  EXPECT_DOUBLE_EQ(none.low, 0.0);
  EXPECT_NEAR(none.high, 0.2775, 1e-4);
  auto all = wilson_interval(10, 10);
  EXPECT_NEAR(all.low, 0.7225, 1e-4);
  EXPECT_DOUBLE_EQ(all.high, 1.0);
  auto half = wilson_interval(50, 100);
  EXPECT_NEAR(half.low + half.high, 1.0, 1e-12);
  EXPECT_THROW(wilson_interval(3, 2), ArgumentError);
  EXPECT_THROW(wilson_interval(0, 0), ArgumentError);
}

TEST(SampleAllClear, DeterministicAndShardStable) {
  const std::vector<double> p{0.1, 0.05, 0.2};
  auto a = sample_all_clear(p, 20000, 3);
  auto b = sample_all_clear(p, 20000, 3);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_NE(a.successes, sample_all_clear(p, 20000, 4).successes);
  // The first shard is a prefix of any longer run.
  auto first = sample_all_clear(p, 8192, 3);
  auto two = sample_all_clear(p, 16384, 3);
  EXPECT_LE(first.successes, two.successes);
  EXPECT_EQ(sample_all_clear(std::vector<double>{}, 100, 0).successes, 100);
  EXPECT_EQ(sample_all_clear(std::vector<double>{1.0}, 100, 0).successes, 0);
}

TEST(AnalyticSuccess, ThreeCxParallelByHand) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = parallel_schedule(ir, chain6());
  auto r = analytic_success(ir, chain6(), s);
  // ALAP: u at 0, all cx in parallel at 50, readouts at 450, horizon 1450.
  double expected = (1 - 0.001) * (1 - 0.11) * (1 - 0.11) * (1 - 0.01);
  const double t[6] = {1450, 1400, 1400, 1400, 1400, 1400};
  const double T[6] = {60000, 60000, 6000, 60000, 60000, 60000};
  for (int q = 0; q < 6; ++q) expected *= std::exp(-t[q] / T[q]);
  EXPECT_NEAR(r.analytic_success, expected, 1e-12);
  EXPECT_NEAR(r.analytic_error, 1 - expected, 1e-12);
  EXPECT_NEAR(r.per_qubit_decoherence[2], 1 - std::exp(-1400.0 / 6000.0), 1e-12);
  EXPECT_EQ(r.makespan_ns, 1450);
}

TEST(AnalyticSuccess, RejectsInvalidSchedule) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  auto s = parallel_schedule(ir, chain6());
  s.start_ns[4] += 50;
  EXPECT_THROW(analytic_success(ir, chain6(), s), VerificationError);
}

TEST(AnalyticSuccess, LongerCoherenceNeverHurts) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = fuzz_instance(seed);
    auto s = parallel_schedule(inst.circuit, inst.device);
    double base = analytic_success(inst.circuit, inst.device, s).analytic_success;
    for (QubitId q = 0; q < 6; ++q) {
      auto qubits = inst.device.qubits();
      qubits[q].t1_us *= 2;
      qubits[q].t2_us *= 2;
      DeviceModel better(qubits, inst.device.edges(), inst.device.gates(), inst.device.conditional_errors());
      auto s2 = parallel_schedule(inst.circuit, better);
      EXPECT_GE(analytic_success(inst.circuit, better, s2).analytic_success, base - 1e-15) << seed << " " << q;
    }
  }
}

TEST(MonteCarlo, WithinThreeSigmaOfAnalytic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = fuzz_instance(seed);
    auto s = solve(build_problem(inst.circuit, inst.device, 0.5));
    auto r = monte_carlo_success(inst.circuit, inst.device, s, 100000, seed);
    const double p = r.analytic_success;
    const double sigma = std::sqrt(p * (1 - p) / 100000);
    EXPECT_LE(std::abs(r.mc_success - p), 3 * sigma) << seed;
    EXPECT_LE(r.mc_ci_low, r.mc_success);
    EXPECT_GE(r.mc_ci_high, r.mc_success);
  }
}

TEST(Compare, RatiosAndCsv) {
  auto ir = load_circuit(fixture("three_cx.qc"));
  std::vector<Schedule> schedules{series_schedule(ir, chain6()), parallel_schedule(ir, chain6()),
                                  solve(build_problem(ir, chain6(), 0.5))};
  auto rows = compare(ir, chain6(), schedules, 0, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].ratio_vs_baseline, 1.0);
  EXPECT_NEAR(rows[2].ratio_vs_baseline, rows[2].report.analytic_error / rows[0].report.analytic_error, 1e-15);
  EXPECT_LT(rows[2].report.analytic_error, rows[0].report.analytic_error);
  EXPECT_LT(rows[2].report.analytic_error, rows[1].report.analytic_error);
  auto csv = comparison_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "schedule_name,omega,analytic_error,mc_error,mc_ci_low,mc_ci_high,makespan_ns,ratio_vs_baseline");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  auto sampled = compare(ir, chain6(), schedules, 1000, 1);
  EXPECT_EQ(sampled[1].report.mc_trials, 1000);
  EXPECT_EQ(comparison_to_csv(sampled), comparison_to_csv(compare(ir, chain6(), schedules, 1000, 1)));
}

}  // namespace
}  // namespace xtalk
