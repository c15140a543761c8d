#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "flowmon/dynamics.hpp"
#include "flowmon/fixtures.hpp"

using namespace flowmon;

namespace {

std::vector<std::string> ids(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

}  // namespace

TEST_CASE("flow variance rate") {
  CHECK(flow_variance_rate(ids({"a", "b"}), ids({"a", "b"})) == 1.0);
  CHECK(flow_variance_rate(ids({"a", "b"}), ids({"c", "d"})) == 0.0);
  // 10 reference flows, 3 survivors
  std::vector<std::string> ref, cur;
  for (int i = 0; i < 10; ++i) ref.push_back("f" + std::to_string(i));
  cur = {"f0", "f3", "f7", "zz"};
  std::sort(cur.begin(), cur.end());
  CHECK(flow_variance_rate(ref, cur) == 0.3);
  CHECK_THROWS_AS(flow_variance_rate({}, cur), Error);
  // extra current flows never raise D above 1
  CHECK(flow_variance_rate(ids({"a"}), ids({"a", "b", "c"})) == 1.0);
}

TEST_CASE("arrival and expiry patches on the worked example") {
  auto ex = fixtures::worked_example();
  auto dists = control_distances(ex.topo, DeploymentMode::out_of_band());
  FlowStateTracker tracker(ex.topo);
  for (const auto& f : ex.flows) tracker.arrive(f);

  DynamicScheme dyn(ex.constants, dists, ReconstructionPolicy::fixed(10.0));
  dyn.rebuild(tracker, 0.0);
  CHECK(dyn.scheme().total_cost == 1072);  // greedy picks two poll-alls
  REQUIRE(dyn.scheme().poll_all_count() == 2);
  const int pa0 = dyn.scheme().poll_alls[0].switch_id;  // switch 2
  const int pa1 = dyn.scheme().poll_alls[1].switch_id;  // switch 3
  CHECK(pa0 == 2);
  CHECK(pa1 == 3);

  // New flow crossing polled switch 2: rides along for one reply entry (96·1).
  Flow ride;
  ride.id = "x1";
  ride.src_switch = 1;
  ride.dst_switch = 2;
  ride.path = {1, 2};
  tracker.arrive(ride);
  dyn.on_arrival(ride);
  CHECK(dyn.scheme().poll_all_count() == 2);
  CHECK(dyn.scheme().poll_single_count() == 0);
  CHECK(dyn.scheme().total_cost == 1072 + 96);

  // New flow crossing both polled switches: charged in both replies.
  Flow both;
  both.id = "x2";
  both.src_switch = 2;
  both.dst_switch = 3;
  both.path = {2, 3};
  tracker.arrive(both);
  dyn.on_arrival(both);
  CHECK(dyn.scheme().total_cost == 1072 + 96 + 2 * 96);

  // New flow avoiding switches 2 and 3 entirely: needs its own query (296).
  Flow lone;
  lone.id = "x3";
  lone.src_switch = 0;
  lone.dst_switch = 5;
  lone.path = {0, 5};
  tracker.arrive(lone);
  dyn.on_arrival(lone);
  CHECK(dyn.scheme().poll_single_count() == 1);
  CHECK(dyn.scheme().total_cost == 1072 + 96 + 2 * 96 + 296);

  // The running total always equals a from-scratch repricing.
  CHECK(dyn.scheme().total_cost ==
        scheme_cost(dyn.scheme(), tracker.snapshot(), ex.constants, dists));
  CHECK(verify_coverage(dyn.scheme(), tracker.snapshot()));

  // Expiries undo exactly what arrivals added.
  dyn.on_expiry(tracker.expire("x3").flow);
  CHECK(dyn.scheme().poll_single_count() == 0);
  dyn.on_expiry(tracker.expire("x2").flow);
  dyn.on_expiry(tracker.expire("x1").flow);
  CHECK(dyn.scheme().total_cost == 1072);

  // Expiry of a poll-all-covered original flow: structure unchanged, reply
  // shrinks at every polling switch on its path (f4 crosses both 2 and 3).
  dyn.on_expiry(tracker.expire("f4").flow);
  CHECK(dyn.scheme().poll_all_count() == 2);
  CHECK(dyn.scheme().poll_single_count() == 0);
  CHECK(dyn.scheme().total_cost == 1072 - 2 * 96);
  CHECK(dyn.scheme().total_cost ==
        scheme_cost(dyn.scheme(), tracker.snapshot(), ex.constants, dists));
}

TEST_CASE("patches require an initial build") {
  auto ex = fixtures::worked_example();
  auto dists = control_distances(ex.topo, DeploymentMode::out_of_band());
  DynamicScheme dyn(ex.constants, dists, ReconstructionPolicy::fixed(10.0));
  CHECK_THROWS_AS(dyn.on_arrival(ex.flows[0]), Error);
}

TEST_CASE("fixed policy fires on the cadence: six rebuilds in sixty ticks") {
  auto ex = fixtures::worked_example();
  auto dists = control_distances(ex.topo, DeploymentMode::out_of_band());
  FlowStateTracker tracker(ex.topo);
  for (const auto& f : ex.flows) tracker.arrive(f);

  DynamicScheme dyn(ex.constants, dists, ReconstructionPolicy::fixed(10.0));
  dyn.rebuild(tracker, 0.0);
  int fired = 0;
  for (int t = 1; t <= 60; ++t)
    if (dyn.maybe_reconstruct(tracker, static_cast<double>(t))) ++fired;
  CHECK(fired == 6);
  CHECK(dyn.reconstruction_count() == 6);
}

TEST_CASE("adaptive policy fires only when survival drops below the threshold") {
  auto ex = fixtures::worked_example();
  auto dists = control_distances(ex.topo, DeploymentMode::out_of_band());
  FlowStateTracker tracker(ex.topo);
  for (const auto& f : ex.flows) tracker.arrive(f);

  DynamicScheme dyn(ex.constants, dists, ReconstructionPolicy::adaptive(0.3));
  dyn.rebuild(tracker, 0.0);

  // 5 of 6 reference flows alive: D = 0.83 — no rebuild.
  dyn.on_expiry(tracker.expire("f1").flow);
  CHECK_FALSE(dyn.maybe_reconstruct(tracker, 1.0));
  CHECK(dyn.reconstruction_count() == 0);

  // D decreases monotonically as reference flows expire.
  std::vector<double> d_values;
  auto reference = dyn.reference_flows();
  for (const auto& id : {"f2", "f3", "f4", "f5"}) {
    dyn.on_expiry(tracker.expire(id).flow);
    d_values.push_back(flow_variance_rate(reference, tracker.active_ids()));
  }
  for (std::size_t i = 1; i < d_values.size(); ++i) CHECK(d_values[i] <= d_values[i - 1]);

  // Down to 1 of 6 (D = 0.166 < 0.3): rebuild fires and resets the reference.
  CHECK(dyn.maybe_reconstruct(tracker, 2.0));
  CHECK(dyn.reconstruction_count() == 1);
  CHECK(dyn.reference_flows() == tracker.active_ids());
  CHECK_FALSE(dyn.maybe_reconstruct(tracker, 3.0));  // fresh reference: D = 1
}

TEST_CASE("bookkeeping and coverage survive heavy random churn") {
  Topology topo = gen_erdos_renyi(12, 0.3, 21);
  MessageConstants mc;
  auto dists = control_distances(topo, DeploymentMode::in_band(0));
  FlowStateTracker tracker(topo);
  DynamicScheme dyn(mc, dists, ReconstructionPolicy::adaptive(0.3));
  dyn.rebuild(tracker, 0.0);

  Rng rng(99);
  std::vector<Flow> live;
  int next_id = 0;
  for (int step = 1; step <= 10000; ++step) {
    const bool expire = !live.empty() && rng_below(rng, 100) < 45;
    if (expire) {
      const auto pick = rng_below(rng, live.size());
      Flow gone = live[pick];
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(pick));
      dyn.on_expiry(tracker.expire(gone.id).flow);
    } else {
      const int src = static_cast<int>(rng_below(rng, 12));
      int dst = static_cast<int>(rng_below(rng, 11));
      if (dst >= src) ++dst;
      Flow f;
      f.id = "c" + std::to_string(next_id++);
      f.src_switch = src;
      f.dst_switch = dst;
      f.path = shortest_path(topo, src, dst);
      tracker.arrive(f);
      dyn.on_arrival(f);
      live.push_back(std::move(f));
    }
    // Exact bookkeeping after every patch; full coverage check periodically.
    if (step % 10 == 0)
      REQUIRE(dyn.scheme().total_cost ==
              scheme_cost(dyn.scheme(), tracker.snapshot(), mc, dists));
    if (step % 100 == 0) {
      const auto snap = tracker.snapshot();
      REQUIRE(verify_coverage(dyn.scheme(), snap));
      // Patched cost never exceeds: polling every current flow individually
      // plus whatever the scheme's poll-alls cost now.
      Cost poll_all_live = 0;
      for (const auto& t : dyn.scheme().poll_alls) {
        const auto entries = static_cast<std::int64_t>(
            snap.switch_flows[static_cast<std::size_t>(t.switch_id)].size());
        poll_all_live +=
            (mc.request + reply_len(mc, entries)) *
            dists.hops[static_cast<std::size_t>(t.controller)]
                      [static_cast<std::size_t>(t.switch_id)];
      }
      REQUIRE(dyn.scheme().total_cost <=
              per_flow_baseline(snap, mc, dists, PerFlowBaseline::MinCost) + poll_all_live);
    }
    if (step % 500 == 0) dyn.maybe_reconstruct(tracker, static_cast<double>(step));
  }
  CHECK(dyn.scheme().total_cost ==
        scheme_cost(dyn.scheme(), tracker.snapshot(), mc, dists));
}

TEST_CASE("static workload: patched scheme equals a fresh recompute") {
  auto ex = fixtures::worked_example();
  auto dists = control_distances(ex.topo, DeploymentMode::in_band(2));
  FlowStateTracker tracker(ex.topo);
  for (const auto& f : ex.flows) tracker.arrive(f);

  DynamicScheme dyn(ex.constants, dists, ReconstructionPolicy::fixed(10.0));
  dyn.rebuild(tracker, 0.0);
  const PollingScheme at_build = dyn.scheme();
  for (int t = 1; t <= 9; ++t) dyn.maybe_reconstruct(tracker, static_cast<double>(t));
  CHECK(dyn.scheme() == at_build);  // nothing changed, nothing fired
  const auto fresh = greedy_scheme(
      construct_candidates(tracker.snapshot(), ex.constants, dists));
  CHECK(dyn.scheme() == fresh);
}
