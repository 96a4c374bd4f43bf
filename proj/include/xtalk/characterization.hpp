#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtalk/device.hpp"

namespace xtalk {

/// Unordered pair of cx gates measured together by simultaneous RB.
struct SrbPair {
  GateId gi = 0;
  GateId gj = 0;
  friend bool operator==(const SrbPair&, const SrbPair&) = default;
  friend auto operator<=>(const SrbPair&, const SrbPair&) = default;
};

enum class PairPolicy { AllPairs, OneHop, HighCrosstalkDaily };

std::string_view to_string(PairPolicy policy);
PairPolicy parse_pair_policy(std::string_view text);

/// Gate pairs to characterize under `policy`, ascending.
std::vector<SrbPair> enumerate_pairs(const DeviceModel& device, PairPolicy policy, double gamma = kDefaultGamma);

/// Minimum gate hop distance across the four gates of two pairs.
int pair_distance(const DeviceModel& device, const SrbPair& a, const SrbPair& b);

/// Bins of pairs that run in one experiment. Within a bin every two pairs
/// are at least `k_min` hops apart.
struct ExperimentPlan {
  std::vector<std::vector<SrbPair>> bins;
  int k_min = 2;
  PairPolicy policy = PairPolicy::OneHop;
  std::uint64_t seed = 0;
  int repeats = 1;

  std::size_t pair_count() const;
  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

/// One first-fit pass over `pairs` in the given order.
std::vector<std::vector<SrbPair>> first_fit(const std::vector<SrbPair>& pairs, const DeviceModel& device, int k_min);

/// Randomized first fit: `repeats` passes over shuffled orders, keeping the
/// partition with the fewest bins (earliest wins ties).
ExperimentPlan bin_pack(const std::vector<SrbPair>& pairs, const DeviceModel& device, int k_min, int repeats,
                        std::uint64_t seed, PairPolicy policy = PairPolicy::OneHop);

/// Checks the partition and k-hop compatibility against `pairs`; returns
/// human-readable problems, empty when valid.
std::vector<std::string> validate_plan(const ExperimentPlan& plan, const std::vector<SrbPair>& pairs,
                                       const DeviceModel& device);

inline constexpr double kDefaultPerTrialSeconds = 1.28e-3;

struct CostEstimate {
  std::int64_t experiments = 0;
  std::int64_t executions = 0;
  double wall_time_s = 0.0;
};

CostEstimate estimate_cost(std::int64_t experiments, int sequences, int trials,
                           double per_trial_s = kDefaultPerTrialSeconds);
/// Each bin of the plan is one experiment batch.
CostEstimate estimate_cost(const ExperimentPlan& plan, int sequences, int trials,
                           double per_trial_s = kDefaultPerTrialSeconds);

// ---------------------------------------------------------------------------
// Randomized benchmarking

struct RbFit {
  double A = 0.0;
  double alpha = 0.0;
  double B = 0.0;
  double epc = 0.0;       // error per Clifford, (3/4)(1 - alpha)
  double cx_error = 0.0;  // epc / 1.5
  double residual = 0.0;  // sum of squared residuals
  int iterations = 0;
};

struct RbDecayCurve {
  GateId gate = 0;
  std::optional<GateId> spectator;  // set for simultaneous curves
  std::vector<int> lengths;
  std::vector<double> survival;
  int sequences = 0;
  int trials = 0;
  std::optional<RbFit> fitted;
};

inline constexpr double kCxPerClifford = 1.5;

inline double epc_from_alpha(double alpha) { return 0.75 * (1.0 - alpha); }
inline double cx_error_from_epc(double epc) { return epc / kCxPerClifford; }
/// alpha implied by a true cx error under the two-qubit depolarizing model.
inline double alpha_from_cx_error(double cx_error) { return 1.0 - (4.0 / 3.0) * kCxPerClifford * cx_error; }

struct SrbOptions {
  std::vector<int> lengths{1, 5, 10, 15, 20, 25, 30, 35, 40};
  int sequences = 100;
  int trials = 1024;
  double A = 0.75;
  double B = 0.25;
};

enum class SrbMode { Independent, Simultaneous };

/// Sampled RB decay for a gate with the given true cx error.
RbDecayCurve simulate_rb(double cx_error, const SrbOptions& options, std::uint64_t seed);

/// Independent mode: one curve per gate at E(g). Simultaneous mode: one
/// curve per gate at E(g | other). Returns curves for gi then gj.
std::vector<RbDecayCurve> simulate_srb(const DeviceModel& truth, const SrbPair& pair, SrbMode mode,
                                       const SrbOptions& options, std::uint64_t seed);

/// Bounded least-squares fit of y = A alpha^m + B. Throws ArgumentError for
/// bad input and FitError when the decay cannot be identified.
RbFit fit_rb(std::span<const int> lengths, std::span<const double> survival);
RbFit fit_rb(const RbDecayCurve& curve);

// ---------------------------------------------------------------------------
// File formats

std::string plan_to_json(const ExperimentPlan& plan);
ExperimentPlan parse_plan(std::string_view text);

/// CSV columns: m,survival,sequence_count,trials.
std::string decay_to_csv(const RbDecayCurve& curve);
RbDecayCurve parse_decay_csv(std::string_view text);

}  // namespace xtalk
