#include "xtalk/characterization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xtalk/error.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

using nlohmann::json;

std::string_view to_string(PairPolicy policy) {
  switch (policy) {
    case PairPolicy::AllPairs:
      return "all-pairs";
    case PairPolicy::OneHop:
      return "one-hop";
    case PairPolicy::HighCrosstalkDaily:
      return "high-crosstalk-daily";
  }
  return "?";
}

PairPolicy parse_pair_policy(std::string_view text) {
  if (text == "all-pairs") return PairPolicy::AllPairs;
  if (text == "one-hop") return PairPolicy::OneHop;
  if (text == "high-crosstalk-daily") return PairPolicy::HighCrosstalkDaily;
  throw ParseError("unknown pair policy '" + std::string(text) + "'", 0, "policy");
}

std::vector<SrbPair> enumerate_pairs(const DeviceModel& device, PairPolicy policy, double gamma) {
  std::vector<SrbPair> out;
  for (auto [gi, gj] : simultaneous_pairs(device)) {
    if (policy != PairPolicy::AllPairs && gate_hop_distance(device, gi, gj) != 1) continue;
    if (policy == PairPolicy::HighCrosstalkDaily && !is_high_crosstalk(device, gi, gj, gamma)) continue;
    out.push_back({gi, gj});
  }
  return out;
}

int pair_distance(const DeviceModel& device, const SrbPair& a, const SrbPair& b) {
  int best = gate_hop_distance(device, a.gi, b.gi);
  best = std::min(best, gate_hop_distance(device, a.gi, b.gj));
  best = std::min(best, gate_hop_distance(device, a.gj, b.gi));
  best = std::min(best, gate_hop_distance(device, a.gj, b.gj));
  return best;
}

std::size_t ExperimentPlan::pair_count() const {
  std::size_t n = 0;
  for (const auto& bin : bins) n += bin.size();
  return n;
}

std::vector<std::vector<SrbPair>> first_fit(const std::vector<SrbPair>& pairs, const DeviceModel& device, int k_min) {
  std::vector<std::vector<SrbPair>> bins;
  for (const auto& pair : pairs) {
    bool placed = false;
    for (auto& bin : bins) {
      bool compatible = std::all_of(bin.begin(), bin.end(),
                                    [&](const SrbPair& other) { return pair_distance(device, pair, other) >= k_min; });
      if (compatible) {
        bin.push_back(pair);
        placed = true;
        break;
      }
    }
    if (!placed) bins.push_back({pair});
  }
  return bins;
}

ExperimentPlan bin_pack(const std::vector<SrbPair>& pairs, const DeviceModel& device, int k_min, int repeats,
                        std::uint64_t seed, PairPolicy policy) {
  if (k_min < 1) throw ArgumentError("k_min must be >= 1");
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");
  ExperimentPlan plan;
  plan.k_min = k_min;
  plan.policy = policy;
  plan.seed = seed;
  plan.repeats = repeats;

  SplitMix64 rng(seed);
  bool have = false;
  for (int r = 0; r < repeats; ++r) {
    auto order = pairs;
    rng.shuffle(order);
    auto bins = first_fit(order, device, k_min);
    if (!have || bins.size() < plan.bins.size()) {
      plan.bins = std::move(bins);
      have = true;
    }
  }
  return plan;
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan, const std::vector<SrbPair>& pairs,
                                       const DeviceModel& device) {
  std::vector<std::string> problems;
  std::multiset<SrbPair> placed;
  for (std::size_t b = 0; b < plan.bins.size(); ++b) {
    const auto& bin = plan.bins[b];
    for (std::size_t i = 0; i < bin.size(); ++i) {
      placed.insert(bin[i]);
      for (std::size_t j = i + 1; j < bin.size(); ++j) {
        int d = pair_distance(device, bin[i], bin[j]);
        if (d < plan.k_min) {
          problems.push_back("bin " + std::to_string(b) + ": pairs " + std::to_string(i) + " and " +
                             std::to_string(j) + " are " + std::to_string(d) + " hops apart");
        }
      }
    }
  }
  std::multiset<SrbPair> expected(pairs.begin(), pairs.end());
  if (placed != expected) problems.push_back("bins do not partition the input pairs");
  return problems;
}

CostEstimate estimate_cost(std::int64_t experiments, int sequences, int trials, double per_trial_s) {
  if (experiments < 0 || sequences <= 0 || trials <= 0 || per_trial_s < 0.0) {
    throw ArgumentError("cost parameters must be positive");
  }
  CostEstimate cost;
  cost.experiments = experiments;
  cost.executions = experiments * sequences * trials;
  cost.wall_time_s = static_cast<double>(cost.executions) * per_trial_s;
  return cost;
}

CostEstimate estimate_cost(const ExperimentPlan& plan, int sequences, int trials, double per_trial_s) {
  return estimate_cost(static_cast<std::int64_t>(plan.bins.size()), sequences, trials, per_trial_s);
}

// ---------------------------------------------------------------------------
// Decay simulation

RbDecayCurve simulate_rb(double cx_error, const SrbOptions& options, std::uint64_t seed) {
  const double per_clifford = kCxPerClifford * cx_error;
  if (!(cx_error >= 0.0)) throw ArgumentError("cx error must be non-negative");
  if (per_clifford >= 0.5) throw ArgumentError("error per Clifford >= 0.5 is outside the decay model");
  if (options.sequences <= 0 || options.trials <= 0) throw ArgumentError("sequences and trials must be positive");
  const double alpha = 1.0 - (4.0 / 3.0) * per_clifford;

  RbDecayCurve curve;
  curve.lengths = options.lengths;
  curve.sequences = options.sequences;
  curve.trials = options.trials;
  SplitMix64 rng(seed);
  for (int m : options.lengths) {
    const double p = std::clamp(options.A * std::pow(alpha, m) + options.B, 0.0, 1.0);
    double total = 0.0;
    for (int s = 0; s < options.sequences; ++s) {
      int survived = 0;
      for (int t = 0; t < options.trials; ++t) survived += rng.uniform() < p ? 1 : 0;
      total += static_cast<double>(survived) / options.trials;
    }
    curve.survival.push_back(total / options.sequences);
  }
  return curve;
}

std::vector<RbDecayCurve> simulate_srb(const DeviceModel& truth, const SrbPair& pair, SrbMode mode,
                                       const SrbOptions& options, std::uint64_t seed) {
  auto error_of = [&](GateId g, GateId other) {
    if (mode == SrbMode::Independent) return truth.gate(g).independent_error;
    auto e = truth.conditional_error(g, other);
    if (!e) {
      throw ArgumentError("ground truth lacks E(" + std::to_string(g) + "|" + std::to_string(other) + ")");
    }
    return *e;
  };
  std::vector<RbDecayCurve> curves;
  std::uint64_t stream = 0;
  for (auto [g, other] : {std::pair{pair.gi, pair.gj}, std::pair{pair.gj, pair.gi}}) {
    auto curve = simulate_rb(error_of(g, other), options, derive_seed(seed, stream++));
    curve.gate = g;
    if (mode == SrbMode::Simultaneous) curve.spectator = other;
    curves.push_back(std::move(curve));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// File formats

std::string plan_to_json(const ExperimentPlan& plan) {
  json doc;
  doc["policy"] = std::string(to_string(plan.policy));
  doc["k_min"] = plan.k_min;
  doc["seed"] = plan.seed;
  doc["repeats"] = plan.repeats;
  doc["bins"] = json::array();
  for (const auto& bin : plan.bins) {
    json jb = json::array();
    for (const auto& p : bin) jb.push_back({p.gi, p.gj});
    doc["bins"].push_back(std::move(jb));
  }
  return doc.dump(2) + "\n";
}

ExperimentPlan parse_plan(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!doc.is_object()) throw ParseError("expected an object", 0, "plan");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> allowed{"policy", "k_min", "seed", "repeats", "bins"};
    if (!allowed.count(it.key())) throw ParseError("unknown key '" + it.key() + "'", 0, "plan");
  }
  ExperimentPlan plan;
  try {
    plan.policy = parse_pair_policy(doc.at("policy").get<std::string>());
    plan.k_min = doc.at("k_min").get<int>();
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.repeats = doc.value("repeats", 1);
    for (const auto& jb : doc.at("bins")) {
      std::vector<SrbPair> bin;
      for (const auto& jp : jb) {
        if (!jp.is_array() || jp.size() != 2) throw ParseError("expected [gate, gate]", 0, "bins");
        bin.push_back({jp[0].get<int>(), jp[1].get<int>()});
      }
      plan.bins.push_back(std::move(bin));
    }
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 0, "plan");
  }
  return plan;
}

std::string decay_to_csv(const RbDecayCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "m,survival,sequence_count,trials\n";
  for (std::size_t k = 0; k < curve.lengths.size(); ++k) {
    out << curve.lengths[k] << "," << curve.survival[k] << "," << curve.sequences << "," << curve.trials << "\n";
  }
  return out.str();
}

namespace {

template <typename T>
T parse_number(std::string_view word, int line, const char* field) {
  T value{};
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    throw ParseError("invalid number '" + std::string(word) + "'", line, field);
  }
  return value;
}

}  // namespace

RbDecayCurve parse_decay_csv(std::string_view text) {
  RbDecayCurve curve;
  int line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!header_seen) {
      if (cells.size() != 4 || cells[0] != "m" || cells[1] != "survival" || cells[2] != "sequence_count" ||
          cells[3] != "trials") {
        throw ParseError("expected header m,survival,sequence_count,trials", line_no);
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 4) throw ParseError("expected 4 columns", line_no);
    curve.lengths.push_back(parse_number<int>(cells[0], line_no, "m"));
    double survival = parse_number<double>(cells[1], line_no, "survival");
    if (survival < 0.0 || survival > 1.0) throw ParseError("survival outside [0,1]", line_no, "survival");
    curve.survival.push_back(survival);
    int sequences = parse_number<int>(cells[2], line_no, "sequence_count");
    int trials = parse_number<int>(cells[3], line_no, "trials");
    if (curve.lengths.size() == 1) {
      curve.sequences = sequences;
      curve.trials = trials;
    } else if (sequences != curve.sequences || trials != curve.trials) {
      throw ParseError("sequence_count and trials must be constant", line_no);
    }
  }
  if (!header_seen) throw ParseError("empty decay file");
  return curve;
}

}  // namespace xtalk
