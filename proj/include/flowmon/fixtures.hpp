#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowmon/cost_model.hpp"
#include "flowmon/flow_state.hpp"

namespace flowmon::fixtures {

/// Hand-checked regression instance used across the test suite: six switches,
/// six flows between five hosts. Every cost below was worked out by hand.
///
///   switches 0..5, edges 0-1, 1-2, 2-3, 2-5, 0-5, 3-5, 4-5:
///
///        0 --- 1 --- 2 --- 3
///        |          /     /
///        +-------- 5 ----+
///                  |
///                  4
///
///   flows (shortest paths, low-id tie-breaks):
///     f1: 0->2  [0,1,2]      f4: 2->3  [2,3]
///     f2: 0->2  [0,1,2]      f5: 2->4  [2,5,4]
///     f3: 0->3  [0,5,3]      f6: 3->4  [3,5,4]
///
///   per-switch flow sets: s0={f1,f2,f3} s1={f1,f2} s2={f1,f2,f4,f5}
///                         s3={f3,f4,f6} s4={f5,f6} s5={f3,f5,f6}
///
///   expected costs (defaults 122/78/96):
///     out-of-band:  best scheme 1072 (two poll-alls, e.g. s2+s3 or s2+s5),
///                   per-flow 296*6 = 1776, savings 704/1776 = 39.6%
///     in-band at switch 2 (hops [3,2,1,2,3,2]):
///                   best scheme 1560, fixed per-flow assignment below 4144
///                   (savings 62.4%), min-cost per-flow 2368 (savings 34.1%)
struct WorkedExample {
  Topology topo;
  std::vector<Flow> flows;
  MessageConstants constants;
  int in_band_attach;
  // The fixed per-flow assignment (flow -> queried switch) priced at 4144
  // under the in-band deployment: f1,f2,f3 -> switch 0; f4,f5 -> 2; f6 -> 4.
  std::map<std::string, int> fixed_assignment;
};

inline WorkedExample worked_example() {
  Topology topo(6, {{0, 1}, {1, 2}, {2, 3}, {2, 5}, {0, 5}, {5, 4}, {3, 5}});
  const std::vector<std::pair<int, int>> endpoints = {
      {0, 2}, {0, 2}, {0, 3}, {2, 3}, {2, 4}, {3, 4}};
  std::vector<Flow> flows;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    Flow f;
    f.id = "f" + std::to_string(i + 1);
    f.src_switch = endpoints[i].first;
    f.dst_switch = endpoints[i].second;
    f.path = shortest_path(topo, f.src_switch, f.dst_switch);
    flows.push_back(std::move(f));
  }
  return WorkedExample{std::move(topo),
                       std::move(flows),
                       MessageConstants{},
                       2,
                       {{"f1", 0}, {"f2", 0}, {"f3", 0}, {"f4", 2}, {"f5", 2}, {"f6", 4}}};
}

/// Prices a fixed flow->switch per-flow assignment (each flow queried with a
/// single-entry request at its assigned switch, cheapest controller).
inline Cost assigned_per_flow_cost(const MessageConstants& mc, const ControlDistances& dists,
                                   const std::vector<Flow>& flows,
                                   const std::map<std::string, int>& assignment) {
  Cost total = 0;
  for (const auto& f : flows) {
    auto it = assignment.find(f.id);
    if (it == assignment.end()) throw Error("assignment missing flow " + f.id);
    total += poll_single_cost(mc, dists, it->second).cost;
  }
  return total;
}

}  // namespace flowmon::fixtures
