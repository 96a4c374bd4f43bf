// Exact branch and bound over the relative placement of candidate pairs.
//
// Each candidate pair ends up in one of four relations: i before j, j before
// i, i within j, j within i. Once every pair is fixed, the gate errors are
// fixed and the least lateness fixpoint minimizes every qubit lifetime, so
// that fixpoint is the optimal completion. A node fixes some pairs; its
// fixpoint ignores the free ones and therefore bounds every completion from
// below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <cstdio>
#include <cstdlib>

#include "lateness.hpp"
#include "solvers.hpp"
#include "xtalk/error.hpp"
#include "xtalk/rng.hpp"

namespace xtalk::detail {
namespace {

constexpr double kTolerance = 1e-9;
constexpr std::size_t kMemoLimit = 4'000'000;

enum Relation : signed char { kFree = -1, kIBeforeJ = 0, kJBeforeI = 1, kIWithinJ = 2, kJWithinI = 3 };

struct PairData {
  InstrId i;
  InstrId j;
  double log_ij;  // log E(i | j)
  double log_ji;  // log E(j | i)
};

struct Partner {
  int pair;
  double log_cond;  // log E(this gate | partner)
};

class Search {
 public:
  Search(const OptimizationProblem& problem, const SolveOptions& options)
      : problem_(problem), model_(*problem.model), graph_(model_), omega_(problem.omega) {
    const auto& ir = model_.ir();
    partners_.assign(ir.size(), {});
    log_independent_.assign(ir.size(), 0.0);
    for (InstrId i : ir.cx_instructions()) {
      cx_.push_back(i);
      log_independent_[i] = std::log(model_.independent_error(i));
    }
    for (std::size_t k = 0; k < problem.pairs.size(); ++k) {
      auto [i, j] = problem.pairs[k];
      PairData d{i, j, std::log(model_.conditional_error(i, j)), std::log(model_.conditional_error(j, i))};
      pairs_.push_back(d);
      partners_[i].push_back({static_cast<int>(k), d.log_ij});
      partners_[j].push_back({static_cast<int>(k), d.log_ji});
    }
    relation_.assign(pairs_.size(), kFree);
    for (QubitId q : model_.used_qubits()) {
      first_.push_back(model_.qubit_instructions()[q].front());
      first_weight_.push_back((1.0 - omega_) / model_.coherence_ns(q));
    }

    if (options.timeout_s > 0) {
      deadline_ = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(options.timeout_s));
      has_deadline_ = true;
    }
    node_limit_ = options.node_limit;
  }

  void run() {
    auto serial = serial_starts(model_);
    offer(serial, evaluate_model(model_, serial).objective(omega_));

    std::vector<TimeNs> lateness;
    if (!graph_.fixpoint(lateness)) throw SolverError("dependency constraints are cyclic");
    explore(lateness);
  }

  const std::vector<TimeNs>& best_starts() const { return best_starts_; }
  std::int64_t nodes() const { return nodes_; }
  bool complete() const { return !stopped_; }

 private:
  // ----- bounds -------------------------------------------------------------

  double gate_term(InstrId i) const {
    bool forced = false;
    double worst = -std::numeric_limits<double>::infinity();
    double cheapest = log_independent_[i];
    for (const Partner& p : partners_[i]) {
      Relation r = static_cast<Relation>(relation_[p.pair]);
      if (r == kIWithinJ || r == kJWithinI) {
        forced = true;
        worst = std::max(worst, p.log_cond);
      } else if (r == kFree) {
        cheapest = std::min(cheapest, p.log_cond);
      }
    }
    return forced ? worst : cheapest;
  }

  // The first instruction on a qubit is the latest one in lateness terms.
  double lifetime_term(const std::vector<TimeNs>& lateness) const {
    double total = 0.0;
    for (std::size_t k = 0; k < first_.size(); ++k) total += first_weight_[k] * static_cast<double>(lateness[first_[k]]);
    return total;
  }

  double error_bound() const {
    double total = 0.0;
    for (InstrId i : cx_) total += gate_term(i);
    return total;
  }

  double bound(const std::vector<TimeNs>& lateness) const {
    return omega_ * error_bound() + lifetime_term(lateness);
  }

  // Extra error of the cheapest nesting choice among the free pairs.
  double cheapest_nesting() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (relation_[k] != kFree) continue;
      const auto& d = pairs_[k];
      auto raised = [&](InstrId g, double log_cond) {
        double now = gate_term(g);
        bool forced = false;
        double worst = -std::numeric_limits<double>::infinity();
        for (const Partner& p : partners_[g]) {
          Relation r = static_cast<Relation>(relation_[p.pair]);
          if (r == kIWithinJ || r == kJWithinI) {
            forced = true;
            worst = std::max(worst, p.log_cond);
          }
        }
        double next = forced ? std::max(worst, log_cond) : log_cond;
        return std::max(0.0, next - now);
      };
      best = std::min(best, raised(d.i, d.log_ij) + raised(d.j, d.log_ji));
    }
    return best;
  }

  // Lifetime bound for completions that order every free pair. One gate of
  // each free pair runs first and inherits the other's lateness, so every
  // common ancestor of the two is at least as late as the cheaper order
  // allows. Ancestors are processed after their descendants, which lets the
  // raises of later pairs feed the earlier ones.
  double ordered_lifetime(const std::vector<TimeNs>& lateness, const std::vector<char>& inside) {
    std::vector<int> free;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (relation_[k] == kFree && inside[pairs_[k].i]) free.push_back(static_cast<int>(k));
    }
    if (free.empty()) return lifetime_term(lateness);
    std::vector<int> slot(graph_.size(), -1);
    int used = 0;
    for (int k : free) {
      for (InstrId g : {pairs_[k].i, pairs_[k].j}) {
        if (slot[g] < 0) slot[g] = used++;
      }
    }
    dist_.resize(used);
    for (InstrId g = 0; g < graph_.size(); ++g) {
      if (slot[g] >= 0) graph_.distances_from(g, dist_[slot[g]]);
    }
    std::vector<TimeNs> lb = lateness;
    for (int v = graph_.size() - 1; v >= 0; --v) {
      TimeNs want = lb[v];
      for (int k : free) {
        const auto& d = pairs_[k];
        TimeNs to_i = dist_[slot[d.i]][v];
        TimeNs to_j = dist_[slot[d.j]][v];
        if (to_i == kUnreachable || to_j == kUnreachable) continue;
        TimeNs li = lb[d.i], lj = lb[d.j];
        TimeNs di = model_.duration(d.i), dj = model_.duration(d.j);
        // i first: L(i) >= L(j) + di. j first: L(j) >= L(i) + dj.
        TimeNs i_first = std::max(std::max(li, lj + di) + to_i, lj + to_j);
        TimeNs j_first = std::max(li + to_i, std::max(lj, li + dj) + to_j);
        want = std::max(want, std::min(i_first, j_first));
      }
      if (want > lb[v]) {
        lb[v] = want;
        graph_.propagate(lb, {v});
      }
    }
    return lifetime_term(lb);
  }

  // ----- relations ----------------------------------------------------------

  bool option_allowed(int pair, Relation r) const {
    const auto& d = pairs_[pair];
    TimeNs di = model_.duration(d.i);
    TimeNs dj = model_.duration(d.j);
    if (r == kIWithinJ) return di <= dj;
    if (r == kJWithinI) return dj < di;  // equal durations: identical to kIWithinJ
    return true;
  }

  void push_relation(int pair, Relation r) {
    const auto& d = pairs_[pair];
    TimeNs di = model_.duration(d.i);
    TimeNs dj = model_.duration(d.j);
    switch (r) {
      case kIBeforeJ:
        graph_.push_arc(d.j, d.i, di);
        break;
      case kJBeforeI:
        graph_.push_arc(d.i, d.j, dj);
        break;
      case kIWithinJ:
        graph_.push_arc(d.i, d.j, 0);
        graph_.push_arc(d.j, d.i, di - dj);
        break;
      case kJWithinI:
        graph_.push_arc(d.j, d.i, 0);
        graph_.push_arc(d.i, d.j, dj - di);
        break;
      case kFree:
        break;
    }
    relation_[pair] = r;
  }

  void pop_relation(int pair, Relation r) {
    const auto& d = pairs_[pair];
    switch (r) {
      case kIBeforeJ:
        graph_.pop_arc(d.j);
        break;
      case kJBeforeI:
        graph_.pop_arc(d.i);
        break;
      case kIWithinJ:
      case kJWithinI:
        graph_.pop_arc(d.j);
        graph_.pop_arc(d.i);
        break;
      case kFree:
        break;
    }
    relation_[pair] = kFree;
  }

  // Lateness after fixing relation r on top of a parent fixpoint; the
  // relation's arcs must already be pushed. False if infeasible.
  bool child_lateness(int pair, std::vector<TimeNs>& lateness) const {
    const auto& d = pairs_[pair];
    return graph_.propagate(lateness, {d.i, d.j});
  }

  // ----- search -------------------------------------------------------------

  bool out_of_budget() {
    if (node_limit_ > 0 && nodes_ >= node_limit_) stopped_ = true;
    if (has_deadline_ && (nodes_ & 63) == 0 && std::chrono::steady_clock::now() > deadline_) stopped_ = true;
    return stopped_;
  }

  void offer(const std::vector<TimeNs>& starts, double objective) {
    if (objective < best_ - kTolerance ||
        (objective <= best_ + kTolerance && (best_starts_.empty() || starts < best_starts_))) {
      best_ = std::min(best_, objective);
      best_starts_ = starts;
    }
  }

  struct Child {
    Relation relation;
    double bound;
    std::vector<TimeNs> lateness;
  };

  void explore(const std::vector<TimeNs>& lateness) {
    ++nodes_;
    if (out_of_budget()) return;

    const double life = lifetime_term(lateness);
    const double lower = omega_ * error_bound() + life;
    if (lower >= best_ - kTolerance) return;

    // Natural placement: every free pair sits where the fixpoint puts it.
    auto starts = LatenessGraph::to_starts(lateness);
    std::vector<int> branch_on;
    std::vector<char> overlaps(pairs_.size(), 0);
    bool feasible = true;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto& d = pairs_[k];
      TimeNs si = starts[d.i], sj = starts[d.j];
      TimeNs di = model_.duration(d.i), dj = model_.duration(d.j);
      overlaps[k] = intervals_overlap(si, di, sj, dj);
      if (relation_[k] == kFree && partially_overlap(si, di, sj, dj)) {
        feasible = false;
        branch_on.push_back(static_cast<int>(k));
      }
    }

    std::vector<double> natural_term(model_.size(), 0.0);
    double natural_error = 0.0;
    for (InstrId i : cx_) {
      double term = log_independent_[i];
      bool any = false;
      double worst = -std::numeric_limits<double>::infinity();
      for (const Partner& p : partners_[i]) {
        if (overlaps[p.pair]) {
          any = true;
          worst = std::max(worst, p.log_cond);
        }
      }
      if (any) term = worst;
      natural_term[i] = term;
      natural_error += term;
      // A gate above its bound term points at the pairs to branch on.
      double floor = gate_term(i);
      if (feasible && term > floor + kTolerance) {
        int cheapest = -1;
        for (const Partner& p : partners_[i]) {
          if (relation_[p.pair] != kFree) continue;
          if (overlaps[p.pair] && p.log_cond > floor + kTolerance) branch_on.push_back(p.pair);
          if (!overlaps[p.pair] && (cheapest < 0 || p.log_cond < partners_of(i, cheapest))) cheapest = p.pair;
        }
        if (!any && cheapest >= 0) branch_on.push_back(cheapest);
      }
    }
    if (feasible) {
      const double natural = omega_ * natural_error + life;
      offer(starts, natural);
      if (natural <= lower + kTolerance) return;
    }

    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (relation_[k] == kFree && overlaps[k]) branch_on.push_back(static_cast<int>(k));
    }
    std::sort(branch_on.begin(), branch_on.end());
    branch_on.erase(std::unique(branch_on.begin(), branch_on.end()), branch_on.end());
    if (branch_on.empty()) return;

    Region region = open_region(branch_on, lateness, natural_term);
    if (auto it = memo_.find(region.key); it != memo_.end() && region.offset + it->second >= best_ - kTolerance) {
      return;
    }
    const double strong =
        omega_ * error_bound() + std::min(ordered_lifetime(lateness, region.inside), life + omega_ * cheapest_nesting());
    if (strong >= best_ - kTolerance) return;

    // Evaluate every option of every conflict. The cheapest option of a
    // conflict raises the bound by at least its score; conflicts that share
    // no gate and raise no common qubit add up.
    struct Conflict {
      int pair;
      double score;
      std::vector<char> touched;  // per entry of first_
      std::vector<Child> children;
    };
    std::vector<Conflict> conflicts;
    for (int pair : branch_on) {
      Conflict c{pair, std::numeric_limits<double>::infinity(), std::vector<char>(first_.size(), 0), {}};
      for (Relation r : {kIBeforeJ, kJBeforeI, kIWithinJ, kJWithinI}) {
        if (!option_allowed(pair, r)) continue;
        Child child{r, 0.0, lateness};
        push_relation(pair, r);
        bool ok = child_lateness(pair, child.lateness);
        if (ok) child.bound = bound(child.lateness);
        pop_relation(pair, r);
        if (!ok) continue;
        for (std::size_t k = 0; k < first_.size(); ++k) {
          if (child.lateness[first_[k]] > lateness[first_[k]]) c.touched[k] = 1;
        }
        c.score = std::min(c.score, child.bound - lower);
        c.children.push_back(std::move(child));
      }
      if (lower + c.score >= best_ - kTolerance) return;
      conflicts.push_back(std::move(c));
    }
    std::stable_sort(conflicts.begin(), conflicts.end(),
                     [](const Conflict& a, const Conflict& b) { return a.score > b.score; });

    double packed = 0.0;
    std::vector<char> used_qubit(first_.size(), 0);
    std::vector<InstrId> used_gates;
    for (const Conflict& c : conflicts) {
      if (c.score <= kTolerance) break;
      const auto& d = pairs_[c.pair];
      if (std::find(used_gates.begin(), used_gates.end(), d.i) != used_gates.end() ||
          std::find(used_gates.begin(), used_gates.end(), d.j) != used_gates.end()) {
        continue;
      }
      bool clash = false;
      for (std::size_t k = 0; k < first_.size() && !clash; ++k) clash = c.touched[k] && used_qubit[k];
      if (clash) continue;
      packed += c.score;
      used_gates.push_back(d.i);
      used_gates.push_back(d.j);
      for (std::size_t k = 0; k < first_.size(); ++k) used_qubit[k] |= c.touched[k];
    }
    if (lower + packed >= best_ - kTolerance) return;
    // Deciding the latest conflict first leaves an upstream region whose
    // shape repeats across branches, which the memo exploits.
    std::size_t pick = 0;
    auto position = [&](const Conflict& c) { return std::max(pairs_[c.pair].i, pairs_[c.pair].j); };
    for (std::size_t k = 1; k < conflicts.size(); ++k) {
      if (position(conflicts[k]) > position(conflicts[pick])) pick = k;
    }
    const int chosen = conflicts[pick].pair;
    std::vector<Child> chosen_children = std::move(conflicts[pick].children);

    std::stable_sort(chosen_children.begin(), chosen_children.end(),
                     [](const Child& a, const Child& b) { return a.bound < b.bound; });
    for (auto& child : chosen_children) {
      if (child.bound >= best_ - kTolerance) continue;
      push_relation(chosen, child.relation);
      explore(child.lateness);
      pop_relation(chosen, child.relation);
      if (stopped_) return;
    }
    remember(region);
  }

  // ----- memo ---------------------------------------------------------------

  // Free decisions only raise the lateness of `nodes`: the gates of pairs
  // still in play and everything their raises reach. Two nodes whose
  // lateness on that region differs by a constant shift have the same best
  // completion up to that shift, so completions are keyed on the shape of
  // the region. `offset` is the part of the objective fixed outside the
  // region plus the shift.
  struct Region {
    std::pair<std::uint64_t, std::uint64_t> key;
    double offset = 0.0;
    std::vector<char> inside;
  };

  struct KeyHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
      return static_cast<std::size_t>(k.first ^ (k.second * 0x9e3779b97f4a7c15ULL));
    }
  };

  Region open_region(const std::vector<int>& seeds, const std::vector<TimeNs>& lateness,
                     const std::vector<double>& natural_term) {
    const int n = graph_.size();
    std::vector<char> inside(n, 0);
    std::vector<int> stack;
    auto add = [&](int v) {
      if (!inside[v]) {
        inside[v] = 1;
        stack.push_back(v);
      }
    };
    for (int k : seeds) {
      add(pairs_[k].i);
      add(pairs_[k].j);
    }
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      graph_.for_each_arc(v, add);
      for (const Partner& p : partners_[v]) {
        if (relation_[p.pair] != kFree) continue;
        add(pairs_[p.pair].i);
        add(pairs_[p.pair].j);
      }
    }

    TimeNs shift = std::numeric_limits<TimeNs>::max();
    for (int v = 0; v < n; ++v) {
      if (inside[v]) shift = std::min(shift, lateness[v]);
    }
    std::uint64_t h1 = 0x243f6a8885a308d3ULL, h2 = 0x13198a2e03707344ULL;
    auto mix = [&](std::uint64_t x) {
      h1 = derive_seed(h1 ^ x, 1);
      h2 = derive_seed(h2 + x, 2);
    };
    double offset = 0.0;
    double inside_weight = 0.0;
    for (std::size_t k = 0; k < first_.size(); ++k) {
      if (inside[first_[k]]) {
        inside_weight += first_weight_[k];
      } else {
        offset += first_weight_[k] * static_cast<double>(lateness[first_[k]]);
      }
    }
    offset += inside_weight * static_cast<double>(shift);
    for (InstrId i : cx_) {
      if (!inside[i]) offset += omega_ * natural_term[i];
    }
    for (int v = 0; v < n; ++v) {
      if (!inside[v]) continue;
      mix(static_cast<std::uint64_t>(v));
      mix(static_cast<std::uint64_t>(lateness[v] - shift));
    }
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (inside[pairs_[k].i] || inside[pairs_[k].j]) {
        mix((static_cast<std::uint64_t>(k) << 8) | static_cast<std::uint8_t>(relation_[k]));
      }
    }
    return {{h1, h2}, offset, std::move(inside)};
  }

  // Every completion below a finished node is at least the incumbent.
  void remember(const Region& region) {
    if (stopped_ || memo_.size() >= kMemoLimit) return;
    double value = best_ - kTolerance - region.offset;
    auto [it, inserted] = memo_.emplace(region.key, value);
    if (!inserted) it->second = std::max(it->second, value);
  }

  double partners_of(InstrId i, int pair) const {
    for (const Partner& p : partners_[i]) {
      if (p.pair == pair) return p.log_cond;
    }
    return 0.0;
  }

  const OptimizationProblem& problem_;
  const ScheduleModel& model_;
  LatenessGraph graph_;
  double omega_;
  std::vector<InstrId> cx_;
  std::vector<PairData> pairs_;
  std::vector<std::vector<Partner>> partners_;
  std::vector<double> log_independent_;
  std::vector<std::vector<TimeNs>> dist_;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, double, KeyHash> memo_;
  std::vector<InstrId> first_;  // first instruction of each used qubit
  std::vector<double> first_weight_;
  std::vector<signed char> relation_;

  double best_ = std::numeric_limits<double>::infinity();
  std::vector<TimeNs> best_starts_;
  std::int64_t nodes_ = 0;
  std::int64_t node_limit_ = 0;
  bool has_deadline_ = false;
  std::chrono::steady_clock::time_point deadline_;
  bool stopped_ = false;
};

}  // namespace

Schedule solve_internal(const OptimizationProblem& problem, const SolveOptions& options) {
  auto begin = std::chrono::steady_clock::now();
  Search search(problem, options);
  search.run();
  SolverStats stats;
  stats.backend = "internal";
  stats.nodes = search.nodes();
  stats.optimal = search.complete();
  stats.solve_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return make_schedule(*problem.model, search.best_starts(), problem.omega, "xtalk", true, stats);
}

}  // namespace xtalk::detail
