#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/mcps.hpp"

namespace flowmon {

/// When to throw the patched scheme away and re-run the greedy solver:
/// on a fixed cadence, or adaptively when too few of the flows the scheme
/// was built for are still alive.
struct ReconstructionPolicy {
  enum class Kind { Fixed, Adaptive };
  Kind kind = Kind::Fixed;
  double interval = 10.0;   // Fixed: seconds between rebuilds
  double threshold = 0.3;   // Adaptive: rebuild when survival ratio drops below

  static ReconstructionPolicy fixed(double interval) {
    if (!(interval > 0)) throw Error("reconstruction interval must be positive");
    return {Kind::Fixed, interval, 0.0};
  }
  static ReconstructionPolicy adaptive(double threshold) {
    if (!(threshold >= 0.0) || threshold > 1.0)
      throw Error("reconstruction threshold must be in [0, 1]");
    return {Kind::Adaptive, 0.0, threshold};
  }
};

/// Survival ratio of the reference flow set: |reference ∩ current| / |reference|.
/// Both id lists must be sorted (they come from deterministic snapshots).
inline double flow_variance_rate(const std::vector<std::string>& reference,
                                 const std::vector<std::string>& current) {
  if (reference.empty())
    throw Error("flow_variance_rate: empty reference set (reconstruct unconditionally)");
  std::size_t both = 0;
  auto it = current.begin();
  for (const auto& id : reference) {
    it = std::lower_bound(it, current.end(), id);
    if (it == current.end()) break;
    if (*it == id) ++both;
  }
  return static_cast<double>(both) / static_cast<double>(reference.size());
}

/// A polling scheme kept alive under churn. Arrivals and expiries patch the
/// scheme in place (an uncovered arrival gains a poll-single; an expiry drops
/// its entry or just shrinks poll-all replies); the policy decides when to
/// rebuild from scratch. total_cost is maintained as the cost of issuing the
/// scheme against the *current* active set, so poll-all reply sizes track
/// the flows actually present.
class DynamicScheme {
public:
  DynamicScheme(MessageConstants mc, ControlDistances dists, ReconstructionPolicy policy)
      : mc_(mc), dists_(std::move(dists)), policy_(policy) {
    mc_.validate();
    if (dists_.controller_count() == 0) throw Error("dynamic scheme: no controllers");
  }

  /// Full greedy rebuild from the tracker's current state. The initial build
  /// does not count as a reconstruction; policy-triggered ones do.
  void rebuild(const FlowStateTracker& tracker, double now) {
    const TrackerSnapshot snap = tracker.snapshot();
    scheme_ = greedy_scheme(construct_candidates(snap, mc_, dists_));
    reference_ = snap.flow_ids;
    last_rebuild_ = now;
    built_ = true;
    poll_all_ctrl_.assign(static_cast<std::size_t>(dists_.switch_count()), -1);
    for (const auto& t : scheme_.poll_alls)
      poll_all_ctrl_[static_cast<std::size_t>(t.switch_id)] = t.controller;
  }

  /// Arrival patch: a flow crossing a polled switch rides along in that
  /// switch's (now longer) reply; anything else gets its own cheapest
  /// poll-single entry.
  void on_arrival(const Flow& f) {
    require_built();
    const Cost ride = poll_all_entry_cost(f.path);
    if (ride > 0) {
      scheme_.total_cost += ride;
      return;
    }
    const SingleChoice sc = min_single_cost(mc_, dists_, f.path);
    PollTarget t{PollTarget::Kind::PollSingle, sc.switch_id, sc.controller, sc.cost, f.id};
    if (!scheme_.poll_singles.emplace(f.id, t).second)
      throw Error("dynamic scheme: flow " + f.id + " already has a poll-single entry");
    scheme_.total_cost += sc.cost;
  }

  /// Expiry patch: drop the flow's poll-single entry if it has one; otherwise
  /// the flow only vanishes from poll-all replies, which get cheaper.
  void on_expiry(const Flow& f) {
    require_built();
    auto it = scheme_.poll_singles.find(f.id);
    if (it != scheme_.poll_singles.end()) {
      scheme_.total_cost -= it->second.cost;
      scheme_.poll_singles.erase(it);
      return;
    }
    scheme_.total_cost -= poll_all_entry_cost(f.path);
  }

  /// Policy check, meant to run once per simulator tick. Returns true when
  /// the scheme was rebuilt.
  bool maybe_reconstruct(const FlowStateTracker& tracker, double now) {
    require_built();
    bool fire = false;
    if (policy_.kind == ReconstructionPolicy::Kind::Fixed) {
      fire = now - last_rebuild_ >= policy_.interval - 1e-9;
    } else if (reference_.empty()) {
      fire = true;  // nothing to compare against: rebuild unconditionally
    } else {
      fire = flow_variance_rate(reference_, tracker.active_ids()) < policy_.threshold;
    }
    if (fire) {
      rebuild(tracker, now);
      ++reconstruction_count_;
    }
    return fire;
  }

  const PollingScheme& scheme() const { return scheme_; }
  const std::vector<std::string>& reference_flows() const { return reference_; }
  int reconstruction_count() const { return reconstruction_count_; }
  double last_rebuild_time() const { return last_rebuild_; }

private:
  void require_built() const {
    if (!built_) throw Error("dynamic scheme: rebuild() must run before patches");
  }

  // Combined per-entry reply cost of every selected poll-all switch on a
  // path; 0 means no poll-all covers the flow. A flow crossing several polled
  // switches appears in each reply, so each one is charged.
  Cost poll_all_entry_cost(const std::vector<int>& path) const {
    Cost sum = 0;
    for (int v : path) {
      const int c = poll_all_ctrl_[static_cast<std::size_t>(v)];
      if (c >= 0)
        sum += mc_.flow_entry *
               dists_.hops[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
    }
    return sum;
  }

  MessageConstants mc_;
  ControlDistances dists_;
  ReconstructionPolicy policy_;
  PollingScheme scheme_;
  std::vector<int> poll_all_ctrl_;      // switch -> controller of its poll-all, or -1
  std::vector<std::string> reference_;  // flow ids the scheme was built for
  int reconstruction_count_ = 0;
  double last_rebuild_ = 0.0;
  bool built_ = false;
};

}  // namespace flowmon
