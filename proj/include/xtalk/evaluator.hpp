#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xtalk/circuit.hpp"
#include "xtalk/device.hpp"
#include "xtalk/schedule.hpp"

namespace xtalk {

/// Success-probability estimate of a schedule under independent gate and
/// decoherence failures. Readout error is not modeled.
struct EvalReport {
  std::string schedule_name;
  double omega = 0.0;
  double analytic_success = 1.0;
  double analytic_error = 0.0;
  // Monte Carlo fields; mc_trials == 0 when not sampled.
  std::int64_t mc_trials = 0;
  double mc_success = 0.0;
  double mc_ci_low = 0.0;
  double mc_ci_high = 0.0;
  TimeNs makespan_ns = 0;
  std::map<InstrId, double> per_gate_error;
  std::vector<double> per_qubit_decoherence;  // 1 - exp(-t/T)
};

struct BinomialEstimate {
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double p = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval; z = 1.96 gives 95 % coverage.
BinomialEstimate wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.96);

/// Fraction of trials in which none of the independent events fires.
/// Trials are split into fixed-size shards seeded from `seed`, so the
/// result depends only on the arguments.
BinomialEstimate sample_all_clear(std::span<const double> failure_probabilities, std::int64_t trials,
                                  std::uint64_t seed);

/// Throws VerificationError when the schedule fails verify_schedule.
EvalReport analytic_success(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule);

/// analytic_success plus a sampled estimate with a Wilson interval.
EvalReport monte_carlo_success(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule,
                               std::int64_t trials, std::uint64_t seed);

struct ComparisonRow {
  EvalReport report;
  double ratio_vs_baseline = 1.0;  // analytic error / analytic error of the first row
};

/// Evaluates every schedule; trials == 0 skips sampling.
std::vector<ComparisonRow> compare(const CircuitIR& ir, const DeviceModel& device,
                                   const std::vector<Schedule>& schedules, std::int64_t trials, std::uint64_t seed);

/// Columns: schedule_name, omega, analytic_error, mc_error, mc_ci_low,
/// mc_ci_high, makespan_ns, ratio_vs_baseline. The interval bounds refer to
/// the error rate.
std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

}  // namespace xtalk
