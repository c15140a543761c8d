#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/topology.hpp"

namespace flowmon {

/// Sizes (bytes) of the statistics-request message and of the reply parts.
/// A reply carrying n flow entries is reply_header + n * flow_entry long.
struct MessageConstants {
  Cost request = 122;
  Cost reply_header = 78;
  Cost flow_entry = 96;

  void validate() const {
    if (request <= 0 || reply_header <= 0 || flow_entry <= 0)
      throw Error("message constants must be positive");
  }
};

inline Cost reply_len(const MessageConstants& mc, std::int64_t entries) {
  if (entries < 0) throw Error("reply_len: negative entry count");
  return mc.reply_header + mc.flow_entry * entries;
}

/// How the controller plane reaches switches:
///  - OutOfBand: dedicated management links, every switch one hop away.
///  - InBand: one controller attached at a switch, control messages share
///    the data network and pay shortest-path hops.
///  - Multi: several in-band controllers; each query goes to whichever
///    controller is cheapest for it.
struct DeploymentMode {
  enum class Kind { OutOfBand, InBand, Multi };
  Kind kind = Kind::OutOfBand;
  std::vector<int> attachments;

  static DeploymentMode out_of_band() { return {Kind::OutOfBand, {}}; }
  static DeploymentMode in_band(int attach) { return {Kind::InBand, {attach}}; }
  static DeploymentMode multi(std::vector<int> attach) {
    return {Kind::Multi, std::move(attach)};
  }
};

/// Hop distance from each controller to each switch. Out-of-band deployments
/// collapse to a single pseudo-controller one hop from everything, which lets
/// every cost formula downstream ignore the deployment kind.
struct ControlDistances {
  std::vector<std::vector<int>> hops;  // [controller][switch]

  int controller_count() const { return static_cast<int>(hops.size()); }
  int switch_count() const {
    return hops.empty() ? 0 : static_cast<int>(hops.front().size());
  }
};

inline ControlDistances control_distances(const Topology& t, const DeploymentMode& mode) {
  ControlDistances d;
  switch (mode.kind) {
    case DeploymentMode::Kind::OutOfBand:
      if (!mode.attachments.empty())
        throw Error("out-of-band mode takes no attachment switches");
      d.hops.emplace_back(static_cast<std::size_t>(t.switch_count()), 1);
      break;
    case DeploymentMode::Kind::InBand:
      if (mode.attachments.size() != 1)
        throw Error("in-band mode needs exactly one attachment switch");
      d.hops.push_back(hop_counts(t, mode.attachments.front()));
      break;
    case DeploymentMode::Kind::Multi: {
      if (mode.attachments.empty())
        throw Error("multi-controller mode needs at least one attachment switch");
      std::vector<int> sorted = mode.attachments;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error("multi-controller attachments must be distinct");
      for (int attach : mode.attachments) d.hops.push_back(hop_counts(t, attach));
      break;
    }
  }
  return d;
}

/// A cost together with the controller that realizes it (ties go to the
/// lowest controller index, so results are deterministic).
struct CostAt {
  Cost cost = 0;
  int controller = 0;
};

/// Cost of querying every flow entry on one switch: request plus a reply
/// carrying flow_count entries, carried hop-distance times, from the
/// cheapest controller.
inline CostAt poll_all_cost(const MessageConstants& mc, const ControlDistances& d,
                            int switch_id, std::int64_t flow_count) {
  if (switch_id < 0 || switch_id >= d.switch_count())
    throw Error("poll_all_cost: switch id out of range");
  const Cost per_hop = mc.request + reply_len(mc, flow_count);
  CostAt best;
  for (int c = 0; c < d.controller_count(); ++c) {
    const Cost cost =
        per_hop * d.hops[static_cast<std::size_t>(c)][static_cast<std::size_t>(switch_id)];
    if (c == 0 || cost < best.cost) best = {cost, c};
  }
  return best;
}

/// Cost of querying one flow's entry at one switch (single-entry reply).
inline CostAt poll_single_cost(const MessageConstants& mc, const ControlDistances& d,
                               int switch_id) {
  if (switch_id < 0 || switch_id >= d.switch_count())
    throw Error("poll_single_cost: switch id out of range");
  const Cost per_hop = mc.request + reply_len(mc, 1);
  CostAt best;
  for (int c = 0; c < d.controller_count(); ++c) {
    const Cost cost =
        per_hop * d.hops[static_cast<std::size_t>(c)][static_cast<std::size_t>(switch_id)];
    if (c == 0 || cost < best.cost) best = {cost, c};
  }
  return best;
}

struct SingleChoice {
  Cost cost = 0;
  int switch_id = 0;
  int controller = 0;
};

/// Cheapest single-flow query along a path: minimize over (switch on path,
/// controller); ties prefer the lower switch id, then the lower controller.
inline SingleChoice min_single_cost(const MessageConstants& mc, const ControlDistances& d,
                                    std::span<const int> path) {
  if (path.empty()) throw Error("min_single_cost: empty path");
  SingleChoice best{-1, -1, -1};
  for (int v : path) {
    const CostAt at = poll_single_cost(mc, d, v);
    if (best.switch_id < 0 || at.cost < best.cost ||
        (at.cost == best.cost && v < best.switch_id))
      best = {at.cost, v, at.controller};
  }
  return best;
}

/// Fractional saving of a scheme against a baseline: (baseline - scheme) / baseline.
inline double scheme_savings(Cost scheme_cost, Cost baseline_cost) {
  if (baseline_cost <= 0) throw Error("scheme_savings: baseline must be positive");
  return static_cast<double>(baseline_cost - scheme_cost) / static_cast<double>(baseline_cost);
}

}  // namespace flowmon
