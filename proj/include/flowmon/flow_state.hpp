#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/topology.hpp"

namespace flowmon {

/// A monitored flow: endpoints are the switches the end hosts attach to,
/// and path is the full switch sequence the flow traverses (inclusive).
struct Flow {
  std::string id;
  int src_switch = 0;
  int dst_switch = 0;
  std::vector<int> path;
  double arrival_time = 0.0;
  std::optional<double> expiry_time;

  bool operator==(const Flow&) const = default;
};

/// Checks that a path is a simple walk over topology edges with the given
/// endpoints. Throws Error with a reason otherwise.
inline void validate_path(const Topology& t, const Flow& f) {
  if (f.path.empty()) throw Error("flow " + f.id + ": empty path");
  if (f.path.front() != f.src_switch || f.path.back() != f.dst_switch)
    throw Error("flow " + f.id + ": path endpoints do not match src/dst");
  std::unordered_set<int> seen;
  for (int v : f.path) {
    t.check_switch(v);
    if (!seen.insert(v).second)
      throw Error("flow " + f.id + ": path revisits switch " + std::to_string(v));
  }
  for (std::size_t i = 0; i + 1 < f.path.size(); ++i)
    if (!t.has_edge(f.path[i], f.path[i + 1]))
      throw Error("flow " + f.id + ": path hops over a missing edge " +
                  std::to_string(f.path[i]) + "-" + std::to_string(f.path[i + 1]));
}

// Trace events. A trace is a time-sorted sequence of these.
struct FlowArrival {
  Flow flow;
  bool operator==(const FlowArrival&) const = default;
};
struct FlowExpiry {
  std::string flow_id;
  bool operator==(const FlowExpiry&) const = default;
};
struct ByteDelta {
  std::string flow_id;
  std::int64_t bytes = 0;
  bool operator==(const ByteDelta&) const = default;
};

struct TraceEvent {
  double time = 0.0;
  std::variant<FlowArrival, FlowExpiry, ByteDelta> body;
  bool operator==(const TraceEvent&) const = default;
};

namespace detail {

inline std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

/// CSV line per event: time,kind,flow_id[,src,dst,path][,bytes] where kind is
/// ARR / EXP / BYT and path is ';'-separated switch ids. Exactly what
/// parse_trace reads back.
inline std::string serialize_trace(const std::vector<TraceEvent>& events) {
  std::ostringstream out;
  for (const auto& e : events) {
    out << detail::format_time(e.time) << ',';
    if (const auto* arr = std::get_if<FlowArrival>(&e.body)) {
      const Flow& f = arr->flow;
      out << "ARR," << f.id << ',' << f.src_switch << ',' << f.dst_switch << ',';
      for (std::size_t i = 0; i < f.path.size(); ++i) {
        if (i) out << ';';
        out << f.path[i];
      }
    } else if (const auto* exp = std::get_if<FlowExpiry>(&e.body)) {
      out << "EXP," << exp->flow_id;
    } else {
      const auto& byt = std::get<ByteDelta>(e.body);
      out << "BYT," << byt.flow_id << ',' << byt.bytes;
    }
    out << '\n';
  }
  return out.str();
}

/// Parses a flow trace, validating paths against the topology and the
/// event sequencing (EXP/BYT must refer to a flow that arrived and has not
/// expired). Events are returned sorted by time, input order preserved
/// within a timestamp.
inline std::vector<TraceEvent> parse_trace(std::istream& in, const Topology& topo) {
  struct Row {
    TraceEvent event;
    int line_no;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  auto fail = [](int ln, const std::string& why) -> void {
    throw Error("trace line " + std::to_string(ln) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() < 3) fail(line_no, "expected time,kind,flow_id");
    TraceEvent ev;
    try {
      ev.time = std::stod(fields[0]);
    } catch (const std::exception&) {
      fail(line_no, "bad timestamp '" + fields[0] + "'");
    }
    const std::string& kind = fields[1];
    const std::string& id = fields[2];
    if (id.empty()) fail(line_no, "empty flow id");
    if (kind == "ARR") {
      if (fields.size() != 6) fail(line_no, "ARR needs time,ARR,id,src,dst,path");
      Flow f;
      f.id = id;
      f.arrival_time = ev.time;
      try {
        f.src_switch = std::stoi(fields[3]);
        f.dst_switch = std::stoi(fields[4]);
        for (const auto& part : detail::split(fields[5], ';'))
          f.path.push_back(std::stoi(part));
      } catch (const std::exception&) {
        fail(line_no, "bad ARR fields");
      }
      try {
        validate_path(topo, f);
      } catch (const Error& err) {
        fail(line_no, err.what());
      }
      ev.body = FlowArrival{std::move(f)};
    } else if (kind == "EXP") {
      if (fields.size() != 3) fail(line_no, "EXP needs time,EXP,id");
      ev.body = FlowExpiry{id};
    } else if (kind == "BYT") {
      if (fields.size() != 4) fail(line_no, "BYT needs time,BYT,id,bytes");
      std::int64_t bytes = 0;
      try {
        bytes = std::stoll(fields[3]);
      } catch (const std::exception&) {
        fail(line_no, "bad byte count '" + fields[3] + "'");
      }
      if (bytes < 0) fail(line_no, "negative byte count");
      ev.body = ByteDelta{id, bytes};
    } else {
      fail(line_no, "unknown event kind '" + kind + "'");
    }
    rows.push_back({std::move(ev), line_no});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.event.time < b.event.time; });
  // Sequencing check in time order: ids must arrive before they are touched.
  std::unordered_set<std::string> live;
  for (const auto& row : rows) {
    if (const auto* arr = std::get_if<FlowArrival>(&row.event.body)) {
      if (!live.insert(arr->flow.id).second)
        fail(row.line_no, "flow " + arr->flow.id + " arrives while already active");
    } else if (const auto* exp = std::get_if<FlowExpiry>(&row.event.body)) {
      if (!live.erase(exp->flow_id))
        fail(row.line_no, "flow " + exp->flow_id + " expires without arriving");
    } else {
      const auto& byt = std::get<ByteDelta>(row.event.body);
      if (!live.count(byt.flow_id))
        fail(row.line_no, "bytes for inactive flow " + byt.flow_id);
    }
  }
  std::vector<TraceEvent> events;
  events.reserve(rows.size());
  for (auto& row : rows) events.push_back(std::move(row.event));
  return events;
}

inline std::vector<TraceEvent> parse_trace(const std::string& text, const Topology& topo) {
  std::istringstream in(text);
  return parse_trace(in, topo);
}

/// Immutable view of the active flow set, indexed for scheme construction:
/// flows get dense indices 0..m-1 and switch_flows[i] lists the flows whose
/// path crosses switch i.
struct TrackerSnapshot {
  int switch_count = 0;
  std::vector<std::string> flow_ids;
  std::vector<std::vector<int>> flow_paths;    // parallel to flow_ids
  std::vector<std::vector<int>> switch_flows;  // ascending flow indices per switch

  int flow_count() const { return static_cast<int>(flow_ids.size()); }

  static TrackerSnapshot from_flows(int switch_count, const std::vector<Flow>& flows) {
    TrackerSnapshot s;
    s.switch_count = switch_count;
    s.flow_ids.reserve(flows.size());
    s.flow_paths.reserve(flows.size());
    s.switch_flows.resize(static_cast<std::size_t>(switch_count));
    for (const auto& f : flows) {
      const int idx = static_cast<int>(s.flow_ids.size());
      s.flow_ids.push_back(f.id);
      s.flow_paths.push_back(f.path);
      for (int v : f.path) s.switch_flows[static_cast<std::size_t>(v)].push_back(idx);
    }
    return s;
  }
};

/// Tracks the active flow set and per-flow byte counters while a trace (or a
/// live event feed) replays. Keeps a per-switch index in sync incrementally.
class FlowStateTracker {
public:
  explicit FlowStateTracker(const Topology& topo)
      : topo_(&topo), index_(static_cast<std::size_t>(topo.switch_count())) {}

  struct Removal {
    Flow flow;
    std::int64_t final_counter = 0;
  };

  void arrive(Flow f) {
    validate_path(*topo_, f);
    std::string id = f.id;
    auto [it, fresh] = active_.try_emplace(std::move(id), Record{std::move(f), 0});
    if (!fresh) throw Error("tracker: flow " + it->first + " is already active");
    for (int v : it->second.flow.path)
      index_[static_cast<std::size_t>(v)].insert(it->first);
  }

  void add_bytes(const std::string& id, std::int64_t bytes) {
    if (bytes < 0) throw Error("tracker: negative byte delta for flow " + id);
    find_record(id).counter += bytes;
  }

  Removal expire(const std::string& id) {
    auto it = active_.find(id);
    if (it == active_.end()) throw Error("tracker: flow " + id + " is not active");
    Removal out{std::move(it->second.flow), it->second.counter};
    for (int v : out.flow.path) index_[static_cast<std::size_t>(v)].erase(id);
    active_.erase(it);
    return out;
  }

  /// Applies one trace event; expiries report the removed flow and its final
  /// counter so callers can take the closing reading for free.
  std::optional<Removal> apply_event(const TraceEvent& e) {
    if (const auto* arr = std::get_if<FlowArrival>(&e.body)) {
      arrive(arr->flow);
      return std::nullopt;
    }
    if (const auto* exp = std::get_if<FlowExpiry>(&e.body)) return expire(exp->flow_id);
    const auto& byt = std::get<ByteDelta>(e.body);
    add_bytes(byt.flow_id, byt.bytes);
    return std::nullopt;
  }

  int active_count() const { return static_cast<int>(active_.size()); }

  const Flow* find(const std::string& id) const {
    auto it = active_.find(id);
    return it == active_.end() ? nullptr : &it->second.flow;
  }

  std::int64_t counter(const std::string& id) const { return find_record(id).counter; }

  /// Flow ids crossing a switch (the live per-switch index).
  const std::set<std::string, std::less<>>& flows_at(int v) const {
    topo_->check_switch(v);
    return index_[static_cast<std::size_t>(v)];
  }

  std::size_t flows_at_count(int v) const { return flows_at(v).size(); }

  /// Active flow ids in deterministic (lexicographic) order.
  std::vector<std::string> active_ids() const {
    std::vector<std::string> ids;
    ids.reserve(active_.size());
    for (const auto& [id, rec] : active_) ids.push_back(id);
    return ids;
  }

  TrackerSnapshot snapshot() const {
    std::vector<Flow> flows;
    flows.reserve(active_.size());
    for (const auto& [id, rec] : active_) flows.push_back(rec.flow);
    return TrackerSnapshot::from_flows(topo_->switch_count(), flows);
  }

private:
  struct Record {
    Flow flow;
    std::int64_t counter = 0;
  };

  const Record& find_record(const std::string& id) const {
    auto it = active_.find(id);
    if (it == active_.end()) throw Error("tracker: flow " + id + " is not active");
    return it->second;
  }
  Record& find_record(const std::string& id) {
    return const_cast<Record&>(std::as_const(*this).find_record(id));
  }

  const Topology* topo_;
  std::map<std::string, Record> active_;  // ordered: snapshots come out deterministic
  std::vector<std::set<std::string, std::less<>>> index_;
};

/// m random flows with distinct uniform endpoints, routed on shortest paths.
/// Ids are f0..f{m-1}. BFS parents are cached per source, so this stays fast
/// even for six-figure flow counts.
inline std::vector<Flow> generate_random_flows(const Topology& t, int m, std::uint64_t seed) {
  if (m < 0) throw Error("generate_random_flows: negative flow count");
  if (t.switch_count() < 2 && m > 0)
    throw Error("generate_random_flows: need at least 2 switches");
  Rng rng(derive_seed(seed, 0));
  const int n = t.switch_count();

  std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
  auto parents_for = [&](int src) -> const std::vector<int>& {
    auto& par = parents[static_cast<std::size_t>(src)];
    if (par.empty()) {
      par.assign(static_cast<std::size_t>(n), -1);
      par[static_cast<std::size_t>(src)] = src;
      std::queue<int> work;
      work.push(src);
      while (!work.empty()) {
        const int u = work.front();
        work.pop();
        for (int w : t.neighbors(u)) {
          if (par[static_cast<std::size_t>(w)] >= 0) continue;
          par[static_cast<std::size_t>(w)] = u;
          work.push(w);
        }
      }
    }
    return par;
  };

  std::vector<Flow> flows;
  flows.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int src = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(n)));
    int dst = static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(n - 1)));
    if (dst >= src) ++dst;
    const auto& par = parents_for(src);
    Flow f;
    f.id = "f" + std::to_string(i);
    f.src_switch = src;
    f.dst_switch = dst;
    for (int at = dst; at != src; at = par[static_cast<std::size_t>(at)])
      f.path.push_back(at);
    f.path.push_back(src);
    std::reverse(f.path.begin(), f.path.end());
    flows.push_back(std::move(f));
  }
  return flows;
}

}  // namespace flowmon
