#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/cost_model.hpp"
#include "flowmon/flow_state.hpp"

namespace flowmon {

/// One selected query: poll every entry on a switch, or one flow's entry at a
/// switch on its path. cost is the query's weight when the scheme was built.
struct PollTarget {
  enum class Kind { PollAll, PollSingle };
  Kind kind = Kind::PollAll;
  int switch_id = 0;
  int controller = 0;
  Cost cost = 0;
  std::string flow_id;  // PollSingle only

  bool operator==(const PollTarget&) const = default;
};

/// A candidate query for the set-cover instance: what it covers (dense flow
/// indices from the snapshot) and what it costs.
struct CandidateSet {
  PollTarget target;
  std::vector<int> covered;
};

struct PollingScheme {
  std::vector<PollTarget> poll_alls;               // sorted by switch id
  std::map<std::string, PollTarget> poll_singles;  // flow id -> query
  Cost total_cost = 0;

  int poll_all_count() const { return static_cast<int>(poll_alls.size()); }
  int poll_single_count() const { return static_cast<int>(poll_singles.size()); }

  bool operator==(const PollingScheme&) const = default;
};

/// Builds the full candidate list: one PollAll per switch (empty switches
/// included; they cover nothing and are never picked) followed by one
/// PollSingle per flow at its cheapest on-path switch. Greedy and optimal
/// solvers both consume this list.
inline std::vector<CandidateSet> construct_candidates(const TrackerSnapshot& snap,
                                                      const MessageConstants& mc,
                                                      const ControlDistances& dists) {
  mc.validate();
  if (dists.switch_count() != snap.switch_count)
    throw Error("construct_candidates: distance table does not match the snapshot");
  std::vector<CandidateSet> out;
  out.reserve(static_cast<std::size_t>(snap.switch_count) + snap.flow_ids.size());
  for (int v = 0; v < snap.switch_count; ++v) {
    const auto& flows = snap.switch_flows[static_cast<std::size_t>(v)];
    const CostAt at = poll_all_cost(mc, dists, v, static_cast<std::int64_t>(flows.size()));
    out.push_back({PollTarget{PollTarget::Kind::PollAll, v, at.controller, at.cost, {}}, flows});
  }
  for (int f = 0; f < snap.flow_count(); ++f) {
    const SingleChoice sc =
        min_single_cost(mc, dists, snap.flow_paths[static_cast<std::size_t>(f)]);
    out.push_back({PollTarget{PollTarget::Kind::PollSingle, sc.switch_id, sc.controller,
                              sc.cost, snap.flow_ids[static_cast<std::size_t>(f)]},
                   {f}});
  }
  return out;
}

namespace detail {

// Flow universe spanned by a candidate list (dense indices 0..m-1).
inline int candidate_flow_count(const std::vector<CandidateSet>& candidates) {
  int m = 0;
  for (const auto& c : candidates)
    for (int f : c.covered) m = std::max(m, f + 1);
  return m;
}

// Assembles a scheme from chosen candidate indices, dropping PollSingle
// entries whose flow a chosen PollAll already covers.
inline PollingScheme assemble_scheme(const std::vector<CandidateSet>& candidates,
                                     const std::vector<int>& chosen, int flow_count) {
  PollingScheme scheme;
  std::vector<char> by_poll_all(static_cast<std::size_t>(flow_count), 0);
  for (int c : chosen)
    if (candidates[static_cast<std::size_t>(c)].target.kind == PollTarget::Kind::PollAll)
      for (int f : candidates[static_cast<std::size_t>(c)].covered)
        by_poll_all[static_cast<std::size_t>(f)] = 1;
  for (int c : chosen) {
    const auto& cand = candidates[static_cast<std::size_t>(c)];
    if (cand.target.kind == PollTarget::Kind::PollAll) {
      scheme.poll_alls.push_back(cand.target);
      scheme.total_cost += cand.target.cost;
    } else if (!by_poll_all[static_cast<std::size_t>(cand.covered.front())]) {
      scheme.poll_singles.emplace(cand.target.flow_id, cand.target);
      scheme.total_cost += cand.target.cost;
    }
  }
  std::sort(scheme.poll_alls.begin(), scheme.poll_alls.end(),
            [](const PollTarget& a, const PollTarget& b) { return a.switch_id < b.switch_id; });
  return scheme;
}

}  // namespace detail

/// Greedy weighted set cover: repeatedly take the candidate with the smallest
/// weight per newly covered flow. Ties prefer lower weight, then PollAll over
/// PollSingle, then the lower switch id, then candidate order. Uses a lazy
/// priority queue (stale entries are re-keyed when popped), so the total work
/// is O(total coverage * log #candidates).
inline PollingScheme greedy_scheme(const std::vector<CandidateSet>& candidates) {
  const int m = detail::candidate_flow_count(candidates);

  std::vector<std::vector<int>> covering(static_cast<std::size_t>(m));
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c)
    for (int f : candidates[static_cast<std::size_t>(c)].covered)
      covering[static_cast<std::size_t>(f)].push_back(c);
  for (int f = 0; f < m; ++f)
    if (covering[static_cast<std::size_t>(f)].empty())
      throw Error("greedy_scheme: flow index " + std::to_string(f) + " is uncoverable");

  std::vector<int> fresh_count(candidates.size());
  struct Entry {
    Cost weight;
    int count;  // uncovered coverage when pushed
    int idx;
  };
  // Strict order "a is picked before b"; integer cross-multiplication keeps
  // the ratio comparison exact.
  auto before = [&candidates](const Entry& a, const Entry& b) {
    const auto lhs = static_cast<__int128>(a.weight) * b.count;
    const auto rhs = static_cast<__int128>(b.weight) * a.count;
    if (lhs != rhs) return lhs < rhs;
    if (a.weight != b.weight) return a.weight < b.weight;
    const auto& ta = candidates[static_cast<std::size_t>(a.idx)].target;
    const auto& tb = candidates[static_cast<std::size_t>(b.idx)].target;
    if (ta.kind != tb.kind) return ta.kind == PollTarget::Kind::PollAll;
    if (ta.switch_id != tb.switch_id) return ta.switch_id < tb.switch_id;
    return a.idx < b.idx;
  };
  auto heap_less = [&before](const Entry& a, const Entry& b) { return before(b, a); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(heap_less)> heap(heap_less);
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    fresh_count[static_cast<std::size_t>(c)] =
        static_cast<int>(candidates[static_cast<std::size_t>(c)].covered.size());
    if (fresh_count[static_cast<std::size_t>(c)] > 0)
      heap.push({candidates[static_cast<std::size_t>(c)].target.cost,
                 fresh_count[static_cast<std::size_t>(c)], c});
  }

  std::vector<char> covered(static_cast<std::size_t>(m), 0);
  int covered_count = 0;
  std::vector<int> chosen;
  while (covered_count < m) {
    Entry top = heap.top();  // never empty: every flow keeps a live candidate
    heap.pop();
    const int live = fresh_count[static_cast<std::size_t>(top.idx)];
    if (live == 0) continue;
    if (live != top.count) {
      top.count = live;
      heap.push(top);
      continue;
    }
    chosen.push_back(top.idx);
    for (int f : candidates[static_cast<std::size_t>(top.idx)].covered) {
      if (covered[static_cast<std::size_t>(f)]) continue;
      covered[static_cast<std::size_t>(f)] = 1;
      ++covered_count;
      for (int c : covering[static_cast<std::size_t>(f)])
        --fresh_count[static_cast<std::size_t>(c)];
    }
  }
  return detail::assemble_scheme(candidates, chosen, m);
}

/// Exhaustive minimum-cost cover via include/exclude search with cost and
/// reachability pruning. Ties go to the first solution in candidate order
/// (include branches explored first). Refuses instances above the cap:
/// the search is exponential and meant as an oracle, not a production path.
inline PollingScheme optimal_scheme(const std::vector<CandidateSet>& candidates,
                                    int max_candidates = 24) {
  if (static_cast<int>(candidates.size()) > max_candidates)
    throw Error("optimal_scheme: " + std::to_string(candidates.size()) +
                " candidates exceed the cap of " + std::to_string(max_candidates));
  const int m = detail::candidate_flow_count(candidates);
  if (m > 63) throw Error("optimal_scheme: too many flows for the subset search");

  // Candidates that cover nothing only add cost; skip them up front.
  std::vector<int> live;
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c)
    if (!candidates[static_cast<std::size_t>(c)].covered.empty()) live.push_back(c);

  std::vector<std::uint64_t> mask(live.size(), 0);
  for (std::size_t i = 0; i < live.size(); ++i)
    for (int f : candidates[static_cast<std::size_t>(live[i])].covered)
      mask[i] |= std::uint64_t{1} << f;
  std::uint64_t full = 0;
  for (std::uint64_t msk : mask) full |= msk;

  std::vector<std::uint64_t> suffix(live.size() + 1, 0);
  for (std::size_t i = live.size(); i-- > 0;) suffix[i] = suffix[i + 1] | mask[i];

  Cost best_cost = std::numeric_limits<Cost>::max();
  std::vector<int> best, current;

  auto search = [&](auto&& self, std::size_t i, std::uint64_t cover, Cost cost) -> void {
    if (cover == full) {
      if (cost < best_cost) {
        best_cost = cost;
        best = current;
      }
      return;
    }
    if (i == live.size() || cost >= best_cost) return;
    if ((cover | suffix[i]) != full) return;
    if (mask[i] & ~cover) {  // adding nothing new can never be optimal
      current.push_back(live[i]);
      self(self, i + 1, cover | mask[i],
           cost + candidates[static_cast<std::size_t>(live[i])].target.cost);
      current.pop_back();
    }
    self(self, i + 1, cover, cost);
  };
  search(search, 0, 0, 0);

  if (best_cost == std::numeric_limits<Cost>::max()) {
    if (full != 0) throw Error("optimal_scheme: no cover found");  // unreachable
    best_cost = 0;
  }
  PollingScheme scheme = detail::assemble_scheme(candidates, best, m);
  if (scheme.total_cost != best_cost)
    throw Error("optimal_scheme: assembled cost mismatch");  // would be a solver bug
  return scheme;
}

/// True iff every snapshot flow is covered by a selected PollAll on its path
/// or by its own PollSingle entry (whose switch must sit on the path).
inline bool verify_coverage(const PollingScheme& scheme, const TrackerSnapshot& snap) {
  std::vector<char> pa(static_cast<std::size_t>(snap.switch_count), 0);
  for (const auto& t : scheme.poll_alls) {
    if (t.switch_id < 0 || t.switch_id >= snap.switch_count) return false;
    pa[static_cast<std::size_t>(t.switch_id)] = 1;
  }
  for (int f = 0; f < snap.flow_count(); ++f) {
    const auto& path = snap.flow_paths[static_cast<std::size_t>(f)];
    bool ok = std::any_of(path.begin(), path.end(),
                          [&](int v) { return pa[static_cast<std::size_t>(v)]; });
    if (!ok) {
      auto it = scheme.poll_singles.find(snap.flow_ids[static_cast<std::size_t>(f)]);
      ok = it != scheme.poll_singles.end() &&
           std::count(path.begin(), path.end(), it->second.switch_id) > 0;
    }
    if (!ok) return false;
  }
  return true;
}

/// Reprices a scheme against the current active set: PollAll replies are
/// sized by the switch's live flow count, PollSingle queries are flat.
/// Dynamic-scheme bookkeeping is checked against this.
inline Cost scheme_cost(const PollingScheme& scheme, const TrackerSnapshot& snap,
                        const MessageConstants& mc, const ControlDistances& dists) {
  Cost total = 0;
  for (const auto& t : scheme.poll_alls) {
    const auto entries = static_cast<std::int64_t>(
        snap.switch_flows[static_cast<std::size_t>(t.switch_id)].size());
    total += (mc.request + reply_len(mc, entries)) *
             dists.hops[static_cast<std::size_t>(t.controller)]
                       [static_cast<std::size_t>(t.switch_id)];
  }
  for (const auto& [id, t] : scheme.poll_singles)
    total += (mc.request + reply_len(mc, 1)) *
             dists.hops[static_cast<std::size_t>(t.controller)]
                       [static_cast<std::size_t>(t.switch_id)];
  return total;
}

enum class PerFlowBaseline { Random, MinCost };

/// Cost of querying every flow individually. MinCost picks each flow's
/// cheapest on-path switch; Random draws a uniform on-path switch (and a
/// uniform controller when there are several), seeded for reproducibility.
inline Cost per_flow_baseline(const TrackerSnapshot& snap, const MessageConstants& mc,
                              const ControlDistances& dists, PerFlowBaseline strategy,
                              std::uint64_t seed = 0) {
  Cost total = 0;
  if (strategy == PerFlowBaseline::MinCost) {
    for (const auto& path : snap.flow_paths) total += min_single_cost(mc, dists, path).cost;
    return total;
  }
  Rng rng(derive_seed(seed, 0));
  const Cost per_hop = mc.request + reply_len(mc, 1);
  for (const auto& path : snap.flow_paths) {
    const int v = path[rng_below(rng, path.size())];
    const int c = dists.controller_count() > 1
                      ? static_cast<int>(rng_below(
                            rng, static_cast<std::uint64_t>(dists.controller_count())))
                      : 0;
    total += per_hop * dists.hops[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
  }
  return total;
}

/// H(p) = 1 + 1/2 + ... + 1/p; the greedy cover's approximation factor is
/// H(largest candidate coverage).
inline double harmonic(int p) {
  double h = 0.0;
  for (int k = 1; k <= p; ++k) h += 1.0 / k;
  return h;
}

}  // namespace flowmon
