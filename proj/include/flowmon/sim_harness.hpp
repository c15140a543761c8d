#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowmon/afps.hpp"
#include "flowmon/core.hpp"
#include "flowmon/cost_model.hpp"
#include "flowmon/dynamics.hpp"
#include "flowmon/flow_state.hpp"
#include "flowmon/loss_accuracy.hpp"
#include "flowmon/mcps.hpp"
#include "flowmon/rng.hpp"
#include "flowmon/topology.hpp"

namespace flowmon {

// ---------------------------------------------------------------------------
// Synthetic workload generation
// ---------------------------------------------------------------------------

/// Knobs for the seeded trace generator. Two stock characters: TcpLike is a
/// swarm of short flows with a minority of long ones; UdpLike is a small
/// population of long flows. Per-flow traffic is front-loaded: within one
/// flow the rate decays geometrically toward a floor, which is what gives
/// adaptive samplers something to exploit.
struct SyntheticProfile {
  enum class Kind { TcpLike, UdpLike };
  Kind kind = Kind::TcpLike;
  int target_flow_count = 2668;
  // When set, event times snap to whole seconds and the generator steers the
  // concurrency curve so its maximum equals this value exactly.
  std::optional<int> peak_concurrent;
  double short_mean_s = 5.0;
  double short_cap_s = 10.0;  // soft timeout for the short-flow class
  double long_mean_s = 30.0;
  double long_cap_s = 60.0;
  double long_fraction = 0.14;
  // Per-flow byte process: a front-loaded burst that decays geometrically
  // toward an idle floor. Bursty-then-quiet flows are what let adaptive
  // samplers back off without losing accuracy.
  double base_rate_bps = 40000.0;  // per-flow initial rate scale, bytes/second
  double rate_floor = 0.0;         // fraction of the initial rate a flow decays to
  double rate_decay = 0.1;         // per-second geometric decay toward the floor

  static SyntheticProfile tcp_like(int flows = 2668) {
    SyntheticProfile p;
    p.kind = Kind::TcpLike;
    p.target_flow_count = flows;
    return p;
  }

  static SyntheticProfile udp_like(int flows = 111) {
    SyntheticProfile p;
    p.kind = Kind::UdpLike;
    p.target_flow_count = flows;
    p.long_fraction = 1.0;
    p.long_mean_s = 30.0;
    p.long_cap_s = 60.0;
    p.base_rate_bps = 120000.0;
    p.rate_floor = 0.0;
    p.rate_decay = 0.5;
    return p;
  }

  void validate() const {
    if (target_flow_count < 0) throw Error("synthetic profile: negative flow count");
    if (peak_concurrent && *peak_concurrent < 1)
      throw Error("synthetic profile: peak concurrency must be >= 1");
    if (!(short_mean_s > 0) || !(long_mean_s > 0) || !(short_cap_s > 0) ||
        !(long_cap_s > 0))
      throw Error("synthetic profile: durations must be positive");
    if (long_fraction < 0 || long_fraction > 1)
      throw Error("synthetic profile: long fraction must be in [0, 1]");
    if (!(base_rate_bps > 0) || rate_floor < 0 || rate_floor > 1 || rate_decay < 0 ||
        rate_decay > 1)
      throw Error("synthetic profile: bad rate process parameters");
  }
};

namespace detail {

inline const char* profile_kind_name(SyntheticProfile::Kind k) {
  return k == SyntheticProfile::Kind::TcpLike ? "tcp_like" : "udp_like";
}

// One flow's working data while the generator runs.
struct GenFlow {
  Flow flow;
  double rate0 = 0.0;  // initial rate; decays per SyntheticProfile
};

inline double flow_duration(const SyntheticProfile& p, Rng& rng) {
  const bool is_long = rng_unit(rng) < p.long_fraction;
  const double mean = is_long ? p.long_mean_s : p.short_mean_s;
  const double cap = is_long ? p.long_cap_s : p.short_cap_s;
  return std::clamp(rng_exponential(rng, mean), 0.3, cap);
}

inline GenFlow spawn_flow(const Topology& t, const SyntheticProfile& p, Rng& rng,
                          int index, double arrival) {
  const int n = t.switch_count();
  const int src = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(n)));
  int dst = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(n - 1)));
  if (dst >= src) ++dst;
  GenFlow g;
  g.flow.id = "f" + std::to_string(index);
  g.flow.src_switch = src;
  g.flow.dst_switch = dst;
  g.flow.path = shortest_path(t, src, dst);
  g.flow.arrival_time = arrival;
  g.rate0 = p.base_rate_bps * (0.5 + rng_unit(rng));
  return g;
}

// Bytes a flow pushes between elapsed offsets [e0, e1] since its arrival,
// under the piecewise-constant decaying rate R_j = R0*(floor + (1-floor)*decay^j).
inline double accrued_bytes(const SyntheticProfile& p, double rate0, double e0, double e1) {
  double total = 0.0;
  double pos = e0;
  int j = static_cast<int>(std::floor(e0 + 1e-9));
  while (pos < e1 - 1e-9) {
    const double seg_end = std::min(e1, static_cast<double>(j + 1));
    const double rate = rate0 * (p.rate_floor + (1.0 - p.rate_floor) * std::pow(p.rate_decay, j));
    total += rate * (seg_end - pos);
    pos = seg_end;
    ++j;
  }
  return total;
}

// Trace events carry a sort priority so same-instant events serialize as
// byte counts, then expiries, then arrivals: an expiring flow still owns its
// final byte delta, and arrivals never transiently overshoot a concurrency
// target.
struct PendingEvent {
  double time = 0.0;
  int priority = 0;  // 0 = bytes, 1 = expiry, 2 = arrival
  std::size_t seq = 0;
  TraceEvent event;
};

inline std::vector<TraceEvent> order_events(std::vector<PendingEvent> pending) {
  std::sort(pending.begin(), pending.end(), [](const PendingEvent& a, const PendingEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.seq < b.seq;
  });
  std::vector<TraceEvent> events;
  events.reserve(pending.size());
  for (auto& p : pending) events.push_back(std::move(p.event));
  return events;
}

// Free-running mode: a fixed number of flows with jittered arrival instants.
inline std::vector<TraceEvent> generate_jittered(const Topology& t,
                                                 const SyntheticProfile& p,
                                                 double duration, Rng& rng) {
  std::vector<PendingEvent> pending;
  std::size_t seq = 0;
  auto push = [&](double time, int priority, TraceEvent e) {
    pending.push_back({time, priority, seq++, std::move(e)});
  };
  for (int i = 0; i < p.target_flow_count; ++i) {
    const double arrival = rng_unit(rng) * duration;
    GenFlow g = spawn_flow(t, p, rng, i, arrival);
    const double expiry = std::min(arrival + flow_duration(p, rng), duration);
    g.flow.expiry_time = expiry;
    push(arrival, 2, TraceEvent{arrival, FlowArrival{g.flow}});
    // Byte deltas at whole seconds of flow age (the per-second rate profile
    // ticks from the flow's own start), plus the final partial shred.
    double prev = arrival;
    for (double b = arrival + 1.0; b < expiry - 1e-9; b += 1.0) {
      const auto bytes =
          std::llround(accrued_bytes(p, g.rate0, prev - arrival, b - arrival));
      push(b, 0, TraceEvent{b, ByteDelta{g.flow.id, bytes}});
      prev = b;
    }
    const auto tail =
        std::llround(accrued_bytes(p, g.rate0, prev - arrival, expiry - arrival));
    push(expiry, 0, TraceEvent{expiry, ByteDelta{g.flow.id, tail}});
    push(expiry, 1, TraceEvent{expiry, FlowExpiry{g.flow.id}});
  }
  return order_events(std::move(pending));
}

// Peak-pinned mode: whole-second ticks, concurrency steered along a humped
// target curve whose maximum is exactly the requested peak. Excess flows are
// force-expired (earliest scheduled expiry first), deficits trigger spawns.
inline std::vector<TraceEvent> generate_peaked(const Topology& t, const SyntheticProfile& p,
                                               double duration, Rng& rng) {
  const int ticks = static_cast<int>(std::llround(duration));
  const int peak = *p.peak_concurrent;
  std::vector<int> target(static_cast<std::size_t>(std::max(ticks, 0)), 0);
  if (ticks > 0) {
    int argmax = 0;
    for (int k = 0; k < ticks; ++k) {
      const double phase = (static_cast<double>(k) + 1.0) / (static_cast<double>(ticks) + 1.0);
      const double hump = 0.35 + 0.65 * std::sin(phase * 3.14159265358979323846);
      const double noise = 0.9 + 0.2 * rng_unit(rng);
      target[static_cast<std::size_t>(k)] = std::clamp(
          static_cast<int>(std::llround(peak * hump * noise)), 1, peak);
      if (target[static_cast<std::size_t>(k)] > target[static_cast<std::size_t>(argmax)])
        argmax = k;
    }
    target[static_cast<std::size_t>(argmax)] = peak;
  }

  std::vector<PendingEvent> pending;
  std::size_t seq = 0;
  auto push = [&](double time, int priority, TraceEvent e) {
    pending.push_back({time, priority, seq++, std::move(e)});
  };

  struct Live {
    GenFlow gen;
    int arrival_tick = 0;
    int expiry_tick = 0;
  };
  std::map<int, Live> live;  // keyed by spawn index; deterministic iteration
  // (expiry_tick, index) min-heap for scheduled and forced expiries.
  using HeapItem = std::pair<int, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> by_expiry;
  int next_index = 0;

  auto expire_now = [&](int tick, int index) {
    live.erase(index);
    push(static_cast<double>(tick), 1,
         TraceEvent{static_cast<double>(tick), FlowExpiry{"f" + std::to_string(index)}});
  };

  for (int tick = 0; tick <= ticks; ++tick) {
    const double now = static_cast<double>(tick);
    // Bytes for the second that just elapsed, credited before any expiry.
    if (tick > 0) {
      for (const auto& [index, fl] : live) {
        const double e1 = static_cast<double>(tick - fl.arrival_tick);
        const auto bytes = std::llround(accrued_bytes(p, fl.gen.rate0, e1 - 1.0, e1));
        push(now, 0, TraceEvent{now, ByteDelta{fl.gen.flow.id, bytes}});
      }
    }
    // Scheduled expiries; at the horizon everything goes.
    while (!by_expiry.empty() &&
           (by_expiry.top().first <= tick || tick == ticks)) {
      const auto [etick, index] = by_expiry.top();
      by_expiry.pop();
      if (live.count(index)) expire_now(tick, index);
    }
    if (tick == ticks) break;
    // Steer concurrency to the target: shed the soonest-to-expire, then fill.
    while (static_cast<int>(live.size()) > target[static_cast<std::size_t>(tick)] &&
           !by_expiry.empty()) {
      const auto [etick, index] = by_expiry.top();
      by_expiry.pop();
      if (live.count(index)) expire_now(tick, index);
    }
    while (static_cast<int>(live.size()) < target[static_cast<std::size_t>(tick)]) {
      GenFlow g = spawn_flow(t, p, rng, next_index, now);
      const int dur = std::max(1, static_cast<int>(std::llround(flow_duration(p, rng))));
      const int etick = std::min(tick + dur, ticks);
      g.flow.expiry_time = static_cast<double>(etick);
      push(now, 2, TraceEvent{now, FlowArrival{g.flow}});
      live.emplace(next_index, Live{std::move(g), tick, etick});
      by_expiry.emplace(etick, next_index);
      ++next_index;
    }
  }
  return order_events(std::move(pending));
}

}  // namespace detail

inline std::vector<TraceEvent> generate_synthetic_events(const Topology& t,
                                                         const SyntheticProfile& profile,
                                                         double duration,
                                                         std::uint64_t seed) {
  profile.validate();
  if (duration < 0) throw Error("synthetic trace: negative duration");
  if (t.switch_count() < 2) throw Error("synthetic trace: need at least 2 switches");
  Rng rng(derive_seed(seed, 0x7ac3));
  if (duration == 0.0) return {};
  return profile.peak_concurrent ? detail::generate_peaked(t, profile, duration, rng)
                                 : detail::generate_jittered(t, profile, duration, rng);
}

inline std::string generate_synthetic_trace(const Topology& t, const SyntheticProfile& profile,
                                            double duration, std::uint64_t seed) {
  return serialize_trace(generate_synthetic_events(t, profile, duration, seed));
}

// ---------------------------------------------------------------------------
// Trace replay helpers
// ---------------------------------------------------------------------------

struct ReplayedFlow {
  Flow flow;
  CounterSeries series;
};

/// Reconstructs each flow's cumulative counter curve from a trace. Flows the
/// trace never expires are closed at the last event time.
inline std::map<std::string, ReplayedFlow> flow_series_from_trace(
    const std::vector<TraceEvent>& events) {
  std::map<std::string, ReplayedFlow> out;
  std::map<std::string, double> cumulative;
  double last_time = 0.0;
  for (const auto& e : events) {
    last_time = std::max(last_time, e.time);
    if (const auto* arr = std::get_if<FlowArrival>(&e.body)) {
      ReplayedFlow rf;
      rf.flow = arr->flow;
      rf.series.arrival = e.time;
      rf.series.expiry = e.time;
      rf.series.times = {e.time};
      rf.series.values = {0.0};
      if (!out.emplace(arr->flow.id, std::move(rf)).second)
        throw Error("flow series: duplicate arrival for flow " + arr->flow.id);
      cumulative[arr->flow.id] = 0.0;
      continue;
    }
    if (const auto* byt = std::get_if<ByteDelta>(&e.body)) {
      auto it = out.find(byt->flow_id);
      if (it == out.end()) throw Error("flow series: bytes for unknown flow " + byt->flow_id);
      auto& series = it->second.series;
      const double cum = (cumulative[byt->flow_id] += static_cast<double>(byt->bytes));
      if (series.times.back() == e.time)
        series.values.back() = cum;
      else {
        series.times.push_back(e.time);
        series.values.push_back(cum);
      }
      continue;
    }
    const auto& exp = std::get<FlowExpiry>(e.body);
    auto it = out.find(exp.flow_id);
    if (it == out.end()) throw Error("flow series: expiry for unknown flow " + exp.flow_id);
    auto& series = it->second.series;
    series.expiry = e.time;
    if (series.times.back() != e.time) {
      series.times.push_back(e.time);
      series.values.push_back(series.values.back());
    }
  }
  for (auto& [id, rf] : out) {
    if (rf.series.expiry <= rf.series.times.front() && rf.series.times.size() > 1)
      rf.series.expiry = last_time;
    if (rf.series.expiry < rf.series.times.back()) rf.series.expiry = rf.series.times.back();
    rf.series.validate();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct RandomFlowsWorkload {
  int count = 0;
};

struct TraceWorkload {
  std::string text;  // trace CSV content
};

struct SyntheticWorkload {
  SyntheticProfile profile;
};

using Workload = std::variant<RandomFlowsWorkload, TraceWorkload, SyntheticWorkload>;

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct ExperimentConfig {
  Topology topo;
  Workload workload;
  DeploymentMode mode = DeploymentMode::out_of_band();
  MessageConstants constants;
  ReconstructionPolicy fixed_policy = ReconstructionPolicy::fixed(10.0);
  ReconstructionPolicy adaptive_policy = ReconstructionPolicy::adaptive(0.3);
  SamplerConfig sampler;
  double loss_switch_ratio = 0.0;
  double packet_loss_rate = 0.0;
  double tick = 1.0;
  double duration = 60.0;
  double polling_interval = 5.0;  // cadence for scheme-cost experiments
  std::uint64_t seed = 1;

  ExperimentConfig(Topology t, Workload w) : topo(std::move(t)), workload(std::move(w)) {}

  void validate() const {
    if (!(tick > 0)) throw Error("experiment: tick must be positive");
    if (duration < tick) throw Error("experiment: duration must be at least one tick");
    if (!(polling_interval > 0)) throw Error("experiment: polling interval must be positive");
    constants.validate();
    sampler.validate();
    if (loss_switch_ratio < 0 || loss_switch_ratio > 1)
      throw Error("experiment: loss switch ratio must be in [0, 1]");
    if (packet_loss_rate < 0 || !(packet_loss_rate < 1))
      throw Error("experiment: packet loss rate must be in [0, 1)");
    if (const auto* rf = std::get_if<RandomFlowsWorkload>(&workload); rf && rf->count < 0)
      throw Error("experiment: negative flow count");
  }

  /// Stable key=value rendering of every knob; hashing this pins a run.
  std::string resolved_text() const {
    std::ostringstream out;
    out << "topology.switches=" << topo.switch_count() << "\n";
    out << "topology.digest=" << fnv1a64(to_edge_list(topo)) << "\n";
    out << "mode=";
    switch (mode.kind) {
      case DeploymentMode::Kind::OutOfBand:
        out << "oob";
        break;
      case DeploymentMode::Kind::InBand:
        out << "inband:" << mode.attachments.front();
        break;
      case DeploymentMode::Kind::Multi:
        out << "multi:";
        for (std::size_t i = 0; i < mode.attachments.size(); ++i)
          out << (i ? "," : "") << mode.attachments[i];
        break;
    }
    out << "\n";
    if (const auto* rf = std::get_if<RandomFlowsWorkload>(&workload))
      out << "workload=random_flows:" << rf->count << "\n";
    else if (const auto* tw = std::get_if<TraceWorkload>(&workload))
      out << "workload=trace:" << fnv1a64(tw->text) << "\n";
    else {
      const auto& p = std::get<SyntheticWorkload>(workload).profile;
      out << "workload=synthetic:" << detail::profile_kind_name(p.kind) << ","
          << p.target_flow_count << ",peak:"
          << (p.peak_concurrent ? std::to_string(*p.peak_concurrent) : "none") << "\n";
    }
    out << "message.request=" << constants.request << "\n";
    out << "message.reply_header=" << constants.reply_header << "\n";
    out << "message.flow_entry=" << constants.flow_entry << "\n";
    out << "policy.fixed=" << detail::format_double(fixed_policy.interval) << "\n";
    out << "policy.adaptive=" << detail::format_double(adaptive_policy.threshold) << "\n";
    out << "sampler.algorithm=" << to_string(sampler.algorithm) << "\n";
    out << "sampler.tau_min=" << detail::format_double(sampler.tau_min) << "\n";
    out << "sampler.tau_max=" << detail::format_double(sampler.tau_max) << "\n";
    out << "sampler.initial=" << detail::format_double(sampler.initial_interval) << "\n";
    out << "sampler.alpha=" << detail::format_double(sampler.alpha) << "\n";
    out << "sampler.coefficient="
        << (sampler.traffic_coefficient
                ? detail::format_double(*sampler.traffic_coefficient)
                : std::string("auto"))
        << "\n";
    out << "loss.p=" << detail::format_double(loss_switch_ratio) << "\n";
    out << "loss.r=" << detail::format_double(packet_loss_rate) << "\n";
    out << "tick=" << detail::format_double(tick) << "\n";
    out << "duration=" << detail::format_double(duration) << "\n";
    out << "polling_interval=" << detail::format_double(polling_interval) << "\n";
    out << "seed=" << seed << "\n";
    return out.str();
  }
};

/// Reproducibility record: hash of the resolved config plus the seed.
inline std::string run_manifest(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "config_hash=" << fnv1a64(cfg.resolved_text()) << "\n";
  out << "seed=" << cfg.seed << "\n";
  return out.str();
}

namespace detail {

// Seed streams for the independent random choices inside one experiment.
enum : std::uint64_t {
  kStreamRandomFlows = 1,
  kStreamSynthetic = 2,
  kStreamBaseline = 3,
  kStreamLoss = 4,
};

inline std::vector<TraceEvent> workload_events(const ExperimentConfig& cfg) {
  if (const auto* rf = std::get_if<RandomFlowsWorkload>(&cfg.workload)) {
    std::vector<TraceEvent> events;
    for (auto& f : generate_random_flows(cfg.topo, rf->count,
                                         derive_seed(cfg.seed, kStreamRandomFlows)))
      events.push_back(TraceEvent{0.0, FlowArrival{std::move(f)}});
    return events;
  }
  if (const auto* tw = std::get_if<TraceWorkload>(&cfg.workload))
    return parse_trace(tw->text, cfg.topo);
  const auto& profile = std::get<SyntheticWorkload>(cfg.workload).profile;
  return generate_synthetic_events(cfg.topo, profile, cfg.duration,
                                   derive_seed(cfg.seed, kStreamSynthetic));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scheme-cost experiment (periodic polling)
// ---------------------------------------------------------------------------

struct McpsTickRow {
  double time = 0.0;
  int active_flows = 0;
  Cost greedy_cost = 0;
  Cost per_flow_random = 0;
  Cost per_flow_min = 0;
  double savings = 0.0;  // vs the random per-flow baseline
};

struct McpsResult {
  std::vector<McpsTickRow> rows;
  double mean_savings = 0.0;
  std::string csv;
};

inline McpsResult run_mcps_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dists = control_distances(cfg.topo, cfg.mode);
  const auto events = detail::workload_events(cfg);
  FlowStateTracker tracker(cfg.topo);
  std::size_t next_event = 0;

  McpsResult res;
  std::ostringstream csv;
  csv << "time,active_flows,greedy_cost,per_flow_random_cost,per_flow_min_cost,savings\n";
  double savings_sum = 0.0;
  int poll_index = 0;
  for (double t = cfg.polling_interval; t <= cfg.duration + 1e-9; t += cfg.polling_interval) {
    while (next_event < events.size() && events[next_event].time <= t + 1e-9)
      tracker.apply_event(events[next_event++]);
    const auto snap = tracker.snapshot();
    McpsTickRow row;
    row.time = t;
    row.active_flows = static_cast<int>(snap.flow_ids.size());
    if (!snap.flow_ids.empty()) {
      row.greedy_cost = greedy_scheme(construct_candidates(snap, cfg.constants, dists)).total_cost;
      row.per_flow_random = per_flow_baseline(
          snap, cfg.constants, dists, PerFlowBaseline::Random,
          derive_seed(derive_seed(cfg.seed, detail::kStreamBaseline),
                      static_cast<std::uint64_t>(poll_index)));
      row.per_flow_min =
          per_flow_baseline(snap, cfg.constants, dists, PerFlowBaseline::MinCost);
      row.savings = 1.0 - static_cast<double>(row.greedy_cost) /
                              static_cast<double>(row.per_flow_random);
    }
    savings_sum += row.savings;
    csv << detail::format_double(row.time) << "," << row.active_flows << ","
        << row.greedy_cost << "," << row.per_flow_random << "," << row.per_flow_min << ","
        << detail::format_double(row.savings) << "\n";
    res.rows.push_back(row);
    ++poll_index;
  }
  if (!res.rows.empty()) res.mean_savings = savings_sum / static_cast<double>(res.rows.size());
  res.csv = csv.str();
  return res;
}

// ---------------------------------------------------------------------------
// Flow-dynamics experiment (patching vs recomputation)
// ---------------------------------------------------------------------------

struct DynamicsTickRow {
  double time = 0.0;
  int active_flows = 0;
  Cost per_flow = 0;
  Cost recompute = 0;
  Cost dapr_fixed = 0;
  Cost dapr_adaptive = 0;
  bool reconstructed_fixed = false;
  bool reconstructed_adaptive = false;
};

struct DynamicsResult {
  std::vector<DynamicsTickRow> rows;
  int fixed_reconstructions = 0;
  int adaptive_reconstructions = 0;
  double mean_per_flow = 0.0;
  double mean_recompute = 0.0;
  double mean_dapr_fixed = 0.0;
  double mean_dapr_adaptive = 0.0;
  bool coverage_ok = true;
  std::string csv;
};

inline DynamicsResult run_dynamics_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dists = control_distances(cfg.topo, cfg.mode);
  const auto events = detail::workload_events(cfg);
  FlowStateTracker tracker(cfg.topo);

  DynamicScheme fixed(cfg.constants, dists, cfg.fixed_policy);
  DynamicScheme adaptive(cfg.constants, dists, cfg.adaptive_policy);

  std::size_t next_event = 0;
  bool built = false;
  auto apply_until = [&](double t) {
    while (next_event < events.size() && events[next_event].time <= t + 1e-9) {
      const TraceEvent& e = events[next_event++];
      if (const auto* arr = std::get_if<FlowArrival>(&e.body)) {
        tracker.arrive(arr->flow);
        if (built) {
          fixed.on_arrival(arr->flow);
          adaptive.on_arrival(arr->flow);
        }
        continue;
      }
      if (const auto* byt = std::get_if<ByteDelta>(&e.body)) {
        tracker.add_bytes(byt->flow_id, byt->bytes);
        continue;
      }
      const auto& exp = std::get<FlowExpiry>(e.body);
      const Flow* f = tracker.find(exp.flow_id);
      if (!f) throw Error("dynamics experiment: expiry for unknown flow " + exp.flow_id);
      if (built) {
        fixed.on_expiry(*f);
        adaptive.on_expiry(*f);
      }
      tracker.expire(exp.flow_id);
    }
  };

  // Initial construction at t=0 over whatever arrives at the trace head.
  apply_until(0.0);
  fixed.rebuild(tracker, 0.0);
  adaptive.rebuild(tracker, 0.0);
  built = true;

  DynamicsResult res;
  std::ostringstream csv;
  csv << "time,active_flows,per_flow_cost,recompute_cost,dapr_fixed_cost,"
         "dapr_adaptive_cost,reconstructed_fixed,reconstructed_adaptive\n";
  double sums[4] = {0, 0, 0, 0};
  for (double t = cfg.tick; t <= cfg.duration + 1e-9; t += cfg.tick) {
    apply_until(t);
    const auto snap = tracker.snapshot();
    DynamicsTickRow row;
    row.time = t;
    row.active_flows = static_cast<int>(snap.flow_ids.size());
    if (!snap.flow_ids.empty()) {
      row.per_flow = per_flow_baseline(snap, cfg.constants, dists, PerFlowBaseline::MinCost);
      row.recompute =
          greedy_scheme(construct_candidates(snap, cfg.constants, dists)).total_cost;
    }
    row.dapr_fixed = fixed.scheme().total_cost;
    row.dapr_adaptive = adaptive.scheme().total_cost;
    if (!verify_coverage(fixed.scheme(), snap) || !verify_coverage(adaptive.scheme(), snap))
      res.coverage_ok = false;
    row.reconstructed_fixed = fixed.maybe_reconstruct(tracker, t);
    row.reconstructed_adaptive = adaptive.maybe_reconstruct(tracker, t);
    sums[0] += static_cast<double>(row.per_flow);
    sums[1] += static_cast<double>(row.recompute);
    sums[2] += static_cast<double>(row.dapr_fixed);
    sums[3] += static_cast<double>(row.dapr_adaptive);
    csv << detail::format_double(row.time) << "," << row.active_flows << "," << row.per_flow
        << "," << row.recompute << "," << row.dapr_fixed << "," << row.dapr_adaptive << ","
        << (row.reconstructed_fixed ? 1 : 0) << "," << (row.reconstructed_adaptive ? 1 : 0)
        << "\n";
    res.rows.push_back(row);
  }
  res.fixed_reconstructions = fixed.reconstruction_count();
  res.adaptive_reconstructions = adaptive.reconstruction_count();
  if (!res.rows.empty()) {
    const auto n = static_cast<double>(res.rows.size());
    res.mean_per_flow = sums[0] / n;
    res.mean_recompute = sums[1] / n;
    res.mean_dapr_fixed = sums[2] / n;
    res.mean_dapr_adaptive = sums[3] / n;
  }
  res.csv = csv.str();
  return res;
}

// ---------------------------------------------------------------------------
// Adaptive-sampling experiment
// ---------------------------------------------------------------------------

struct AfpsResult {
  std::vector<double> times;                             // window right edges
  std::map<std::string, std::vector<double>> utilization;  // "actual" + one per algorithm
  std::map<std::string, long long> poll_counts;
  std::map<std::string, double> errors;  // vs the actual series
  std::string utilization_csv;
  std::string sample_log_csv;
};

inline AfpsResult run_afps_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto events = detail::workload_events(cfg);
  const auto flows = flow_series_from_trace(events);

  static constexpr SamplingAlgorithm kAll[] = {SamplingAlgorithm::Periodic,
                                               SamplingAlgorithm::PT, SamplingAlgorithm::Ewmat,
                                               SamplingAlgorithm::Swt};
  AfpsResult res;
  const double tau = cfg.tick;
  for (double t = 2 * tau; t <= cfg.duration + 1e-9; t += tau) res.times.push_back(t);

  auto& actual = res.utilization["actual"];
  for (double t : res.times) {
    double u = 0.0;
    for (const auto& [id, rf] : flows) u += rf.series.at(t) - rf.series.at(t - tau);
    actual.push_back(u);
  }
  res.errors["actual"] = 0.0;

  std::ostringstream samples_csv;
  samples_csv << "flow_id,time,counter,interval_used,algorithm\n";
  for (SamplingAlgorithm algo : kAll) {
    SamplerConfig scfg = cfg.sampler;
    scfg.algorithm = algo;
    std::vector<SampleLog> logs;
    long long polls = 0;
    for (const auto& [id, rf] : flows) {
      logs.push_back(schedule(id, rf.series, scfg));
      polls += logs.back().poll_count;
      for (const auto& s : logs.back().samples)
        samples_csv << id << "," << detail::format_double(s.time) << ","
                    << detail::format_double(s.counter) << ","
                    << detail::format_double(s.interval_used) << "," << to_string(algo)
                    << "\n";
    }
    auto& series = res.utilization[to_string(algo)];
    for (double t : res.times) series.push_back(link_utilization(logs, t, tau));
    res.poll_counts[to_string(algo)] = polls;
    res.errors[to_string(algo)] =
        res.times.empty() ? 0.0 : measurement_error(actual, series);
  }

  std::ostringstream util_csv;
  util_csv << "time,actual";
  for (SamplingAlgorithm algo : kAll) util_csv << "," << to_string(algo);
  util_csv << "\n";
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    util_csv << detail::format_double(res.times[i]) << ","
             << detail::format_double(actual[i]);
    for (SamplingAlgorithm algo : kAll)
      util_csv << "," << detail::format_double(res.utilization[to_string(algo)][i]);
    util_csv << "\n";
  }
  res.utilization_csv = util_csv.str();
  res.sample_log_csv = samples_csv.str();
  return res;
}

// ---------------------------------------------------------------------------
// Measurement-accuracy experiment (loss sweep)
// ---------------------------------------------------------------------------

struct AccuracyRow {
  double r = 0.0;
  double p = 0.0;
  double afr_value = 0.0;
  double tm_exact = 0.0;
  double tm_mean_relative = 0.0;
};

struct AccuracyResult {
  std::vector<AccuracyRow> rows;
  std::string csv;
};

/// Builds one greedy scheme for the workload's flows, draws per-flow true
/// counters, then sweeps the loss grid. The scheme never sees the loss
/// model, so metric degradation is purely a measurement artifact.
inline AccuracyResult run_accuracy_experiment(const ExperimentConfig& cfg,
                                              const std::vector<double>& loss_rates,
                                              const std::vector<double>& switch_ratios) {
  cfg.validate();
  const auto dists = control_distances(cfg.topo, cfg.mode);
  const auto events = detail::workload_events(cfg);
  FlowStateTracker tracker(cfg.topo);
  std::vector<Flow> flows;
  for (const auto& e : events)
    if (const auto* arr = std::get_if<FlowArrival>(&e.body)) {
      tracker.arrive(arr->flow);
      flows.push_back(arr->flow);
    }
  const auto snap = tracker.snapshot();
  AccuracyResult res;
  std::ostringstream csv;
  csv << "r,p,afr,tm_exact,tm_mean_relative\n";
  if (snap.flow_ids.empty()) {
    res.csv = csv.str();
    return res;
  }
  const auto scheme = greedy_scheme(construct_candidates(snap, cfg.constants, dists));

  std::map<std::string, long long> truth;
  Rng rng(derive_seed(cfg.seed, detail::kStreamLoss));
  for (const auto& id : snap.flow_ids)
    truth[id] = 100000 + static_cast<long long>(rng_below(rng, 900000));
  const TrafficMatrix real_tm = traffic_matrix(flows, truth);

  for (double r : loss_rates)
    for (double p : switch_ratios) {
      const auto model =
          assign_loss_switches(cfg.topo, p, r, derive_seed(cfg.seed, detail::kStreamLoss));
      const auto measured = measure_flows(snap, scheme, truth, model);
      const auto acc = tm_accuracy(traffic_matrix(flows, measured.measured), real_tm);
      AccuracyRow row;
      row.r = r;
      row.p = p;
      row.afr_value = afr(measured.measured, measured.real);
      row.tm_exact = acc.exact;
      row.tm_mean_relative = acc.mean_relative;
      res.rows.push_back(row);
      csv << detail::format_double(r) << "," << detail::format_double(p) << ","
          << detail::format_double(row.afr_value) << "," << detail::format_double(row.tm_exact)
          << "," << detail::format_double(row.tm_mean_relative) << "\n";
    }
  res.csv = csv.str();
  return res;
}

}  // namespace flowmon
