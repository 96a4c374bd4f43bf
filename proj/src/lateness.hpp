#pragma once

// Start times expressed as lateness L(g) = H - start(g), where H is the end
// of the schedule. Every scheduling constraint used here has the form
// L(to) >= L(from) + weight, so the least fixpoint is the as-late-as-possible
// schedule and also minimizes every qubit lifetime at once.

#include <algorithm>
#include <deque>
#include <limits>
#include <vector>

#include "xtalk/schedule.hpp"

namespace xtalk::detail {

inline constexpr TimeNs kUnreachable = std::numeric_limits<TimeNs>::min() / 4;

struct Arc {
  int to;
  TimeNs weight;
};

class LatenessGraph {
 public:
  explicit LatenessGraph(const ScheduleModel& model) : n_(model.size()), out_(n_), bound_(model.total_duration()) {
    const auto& ir = model.ir();
    for (auto [i, j] : ir.dag_edges()) add_static(j, i, model.duration(i));
    auto readouts = ir.measure_instructions();
    if (readouts.size() > 1) {
      for (std::size_t k = 0; k < readouts.size(); ++k) add_static(readouts[k], readouts[(k + 1) % readouts.size()], 0);
    }
    floor_ = model.durations();
    dynamic_.assign(n_, {});
  }

  int size() const { return n_; }

  void push_arc(int from, int to, TimeNs weight) { dynamic_[from].push_back({to, weight}); }
  void pop_arc(int from) { dynamic_[from].pop_back(); }

  /// Least fixpoint of the static arcs and currently pushed arcs.
  bool fixpoint(std::vector<TimeNs>& lateness) const {
    lateness = floor_;
    std::vector<int> seeds(n_);
    for (int k = 0; k < n_; ++k) seeds[k] = n_ - 1 - k;
    return propagate(lateness, seeds);
  }

  /// Raises `lateness` until all arcs hold, starting from `seeds`. Returns
  /// false when the constraints contain a positive cycle.
  bool propagate(std::vector<TimeNs>& lateness, const std::vector<int>& seeds) const {
    std::deque<int> work(seeds.begin(), seeds.end());
    std::vector<char> queued(n_, 0);
    for (int s : seeds) queued[s] = 1;
    while (!work.empty()) {
      int u = work.front();
      work.pop_front();
      queued[u] = 0;
      auto relax = [&](const Arc& arc) {
        TimeNs want = lateness[u] + arc.weight;
        if (lateness[arc.to] < want) {
          lateness[arc.to] = want;
          if (want > bound_) return false;
          if (!queued[arc.to]) {
            queued[arc.to] = 1;
            work.push_back(arc.to);
          }
        }
        return true;
      };
      for (const Arc& arc : out_[u]) {
        if (!relax(arc)) return false;
      }
      for (const Arc& arc : dynamic_[u]) {
        if (!relax(arc)) return false;
      }
    }
    return true;
  }

  /// Calls f(to) for every arc leaving `from`.
  template <class F>
  void for_each_arc(int from, F&& f) const {
    for (const Arc& arc : out_[from]) f(arc.to);
    for (const Arc& arc : dynamic_[from]) f(arc.to);
  }

  /// Longest arc distance from `source` to every node, or kUnreachable.
  void distances_from(int source, std::vector<TimeNs>& dist) const {
    dist.assign(n_, kUnreachable);
    dist[source] = 0;
    std::deque<int> work{source};
    std::vector<char> queued(n_, 0);
    queued[source] = 1;
    while (!work.empty()) {
      int u = work.front();
      work.pop_front();
      queued[u] = 0;
      auto relax = [&](const Arc& arc) {
        TimeNs want = dist[u] + arc.weight;
        if (dist[arc.to] < want) {
          dist[arc.to] = want;
          if (!queued[arc.to]) {
            queued[arc.to] = 1;
            work.push_back(arc.to);
          }
        }
      };
      for (const Arc& arc : out_[u]) relax(arc);
      for (const Arc& arc : dynamic_[u]) relax(arc);
    }
  }

  /// Adds arc from -> to to a lateness vector already at a fixpoint.
  bool raise(std::vector<TimeNs>& lateness, int from, int to, TimeNs weight) const {
    if (lateness[to] >= lateness[from] + weight) return true;
    lateness[to] = lateness[from] + weight;
    if (lateness[to] > bound_) return false;
    return propagate(lateness, {to});
  }

  static std::vector<TimeNs> to_starts(const std::vector<TimeNs>& lateness) {
    std::vector<TimeNs> starts(lateness.size());
    if (lateness.empty()) return starts;
    TimeNs horizon = *std::max_element(lateness.begin(), lateness.end());
    for (std::size_t k = 0; k < lateness.size(); ++k) starts[k] = horizon - lateness[k];
    return starts;
  }

 private:
  void add_static(int from, int to, TimeNs weight) { out_[from].push_back({to, weight}); }

  int n_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> dynamic_;
  std::vector<TimeNs> floor_;
  TimeNs bound_;
};

}  // namespace xtalk::detail
