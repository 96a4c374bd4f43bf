#include "xtalk/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "xtalk/error.hpp"
#include "xtalk/rng.hpp"
#include "xtalk/scheduler.hpp"

namespace xtalk {

namespace {

constexpr std::int64_t kShardTrials = 8192;

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

}  // namespace

BinomialEstimate wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) throw ArgumentError("trials must be >= 1");
  if (successes < 0 || successes > trials) throw ArgumentError("successes out of range");
  BinomialEstimate est;
  est.successes = successes;
  est.trials = trials;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  est.p = p;
  est.low = std::max(0.0, center - half);
  est.high = std::min(1.0, center + half);
  return est;
}

BinomialEstimate sample_all_clear(std::span<const double> failure_probabilities, std::int64_t trials,
                                  std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("trials must be >= 1");
  std::int64_t clear = 0;
  std::int64_t done = 0;
  for (std::uint64_t shard = 0; done < trials; ++shard) {
    const std::int64_t count = std::min(kShardTrials, trials - done);
    SplitMix64 rng(derive_seed(seed, shard));
    for (std::int64_t t = 0; t < count; ++t) {
      bool ok = true;
      for (double p : failure_probabilities) {
        if (rng.uniform() < p) {
          ok = false;
          break;
        }
      }
      clear += ok ? 1 : 0;
    }
    done += count;
  }
  return wilson_interval(clear, trials);
}

EvalReport analytic_success(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule) {
  auto violations = verify_schedule(ir, device, schedule);
  if (!violations.empty()) {
    throw VerificationError("schedule '" + schedule.name + "' fails verification: " + violations.front().message);
  }
  CanOverlapOptions options;
  options.gamma = schedule.gamma;
  ScheduleModel model(ir, device, options);
  auto ev = evaluate_model(model, schedule.start_ns);

  EvalReport r;
  r.schedule_name = schedule.name;
  r.omega = schedule.omega;
  r.makespan_ns = ev.makespan_ns;
  r.per_gate_error = ev.per_gate_error;
  double log_success = 0.0;
  for (const auto& [id, e] : ev.per_gate_error) log_success += std::log1p(-e);
  r.per_qubit_decoherence.assign(ir.n_qubits(), 0.0);
  for (QubitId q = 0; q < ir.n_qubits(); ++q) {
    double x = static_cast<double>(ev.per_qubit_lifetime_ns[q]) / model.coherence_ns(q);
    r.per_qubit_decoherence[q] = -std::expm1(-x);
    log_success -= x;
  }
  r.analytic_success = std::exp(log_success);
  r.analytic_error = -std::expm1(log_success);
  return r;
}

EvalReport monte_carlo_success(const CircuitIR& ir, const DeviceModel& device, const Schedule& schedule,
                               std::int64_t trials, std::uint64_t seed) {
  EvalReport r = analytic_success(ir, device, schedule);
  std::vector<double> probabilities;
  for (const auto& [id, e] : r.per_gate_error) probabilities.push_back(e);
  for (double d : r.per_qubit_decoherence) {
    if (d > 0.0) probabilities.push_back(d);
  }
  auto est = sample_all_clear(probabilities, trials, seed);
  r.mc_trials = trials;
  r.mc_success = est.p;
  r.mc_ci_low = est.low;
  r.mc_ci_high = est.high;
  return r;
}

std::vector<ComparisonRow> compare(const CircuitIR& ir, const DeviceModel& device,
                                   const std::vector<Schedule>& schedules, std::int64_t trials, std::uint64_t seed) {
  std::vector<ComparisonRow> rows;
  for (std::size_t k = 0; k < schedules.size(); ++k) {
    ComparisonRow row;
    row.report = trials > 0 ? monte_carlo_success(ir, device, schedules[k], trials, derive_seed(seed, k))
                            : analytic_success(ir, device, schedules[k]);
    rows.push_back(std::move(row));
  }
  if (!rows.empty()) {
    const double base = rows.front().report.analytic_error;
    for (auto& row : rows) {
      row.ratio_vs_baseline = base > 0.0 ? row.report.analytic_error / base : 1.0;
    }
  }
  return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "schedule_name,omega,analytic_error,mc_error,mc_ci_low,mc_ci_high,makespan_ns,ratio_vs_baseline\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << r.schedule_name << "," << format_number(r.omega) << "," << format_number(r.analytic_error) << ",";
    if (r.mc_trials > 0) {
      out << format_number(1.0 - r.mc_success) << "," << format_number(1.0 - r.mc_ci_high) << ","
          << format_number(1.0 - r.mc_ci_low);
    } else {
      out << ",,";
    }
    out << "," << r.makespan_ns << "," << format_number(row.ratio_vs_baseline) << "\n";
  }
  return out.str();
}

}  // namespace xtalk
