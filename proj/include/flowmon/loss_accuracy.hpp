#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/mcps.hpp"
#include "flowmon/rng.hpp"
#include "flowmon/topology.hpp"

namespace flowmon {

/// A designated subset of switches drops each transiting packet with
/// probability r; drops happen before the flow counter increments, so a lossy
/// switch's own counter is already attenuated.
struct LossModel {
  double loss_switch_ratio = 0.0;  // p
  double packet_loss_rate = 0.0;   // r
  std::set<int> loss_switches;
  std::uint64_t seed = 0;
};

/// Picks round(p*n) loss switches uniformly without replacement. The choice
/// is a prefix of one seeded permutation, so for a fixed seed the sets are
/// nested across p: raising p only ever adds switches.
inline LossModel assign_loss_switches(const Topology& t, double p, double r,
                                      std::uint64_t seed) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw Error("loss switch ratio must be in [0, 1]");
  if (!(r >= 0.0) || !(r < 1.0)) throw Error("packet loss rate must be in [0, 1)");
  const int n = t.switch_count();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, 0x10551));
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng_below(rng, i))]);
  const auto k = static_cast<std::size_t>(std::llround(p * n));
  LossModel model;
  model.loss_switch_ratio = p;
  model.packet_loss_rate = r;
  model.seed = seed;
  model.loss_switches.insert(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  return model;
}

/// u_k for each path position: how many loss switches the traffic has crossed
/// by the time switch k counts it, including switch k itself.
inline std::vector<int> loss_attenuation_exponents(const std::vector<int>& path,
                                                   const std::set<int>& loss_switches) {
  std::vector<int> exps;
  exps.reserve(path.size());
  int crossed = 0;
  for (int s : path) {
    if (loss_switches.count(s)) ++crossed;
    exps.push_back(crossed);
  }
  return exps;
}

/// Expected counter at each path switch: c* * (1-r)^{u_k}.
inline std::vector<double> expected_counters_along_path(long long true_source_count,
                                                        const std::vector<int>& path,
                                                        const LossModel& model) {
  if (true_source_count < 0) throw Error("true source count must be non-negative");
  if (path.empty()) throw Error("counters need a non-empty path");
  const auto exps = loss_attenuation_exponents(path, model.loss_switches);
  std::vector<double> out;
  out.reserve(path.size());
  for (int u : exps)
    out.push_back(static_cast<double>(true_source_count) *
                  std::pow(1.0 - model.packet_loss_rate, u));
  return out;
}

/// Deterministic integer counters (expected values rounded to the nearest
/// packet). Non-increasing along the path.
inline std::vector<long long> counters_along_path(long long true_source_count,
                                                  const std::vector<int>& path,
                                                  const LossModel& model) {
  const auto expected = expected_counters_along_path(true_source_count, path, model);
  std::vector<long long> out;
  out.reserve(expected.size());
  for (double v : expected) out.push_back(std::llround(v));
  return out;
}

/// Stochastic counters: every lossy switch thins the surviving packet stream
/// binomially with keep probability 1-r. Validation aid for the closed form;
/// experiments use the deterministic variant.
inline std::vector<long long> mc_counters_along_path(long long true_source_count,
                                                     const std::vector<int>& path,
                                                     const LossModel& model, Rng& rng) {
  if (true_source_count < 0) throw Error("true source count must be non-negative");
  if (path.empty()) throw Error("counters need a non-empty path");
  std::vector<long long> out;
  out.reserve(path.size());
  long long surviving = true_source_count;
  for (int s : path) {
    if (model.loss_switches.count(s) && surviving > 0) {
      std::binomial_distribution<long long> keep(surviving, 1.0 - model.packet_loss_rate);
      surviving = keep(rng);
    }
    out.push_back(surviving);
  }
  return out;
}

/// Expected relative undercount of a polled counter when the polled switch
/// sits behind j loss switches, j uniform over 0..l*p:
///   1 - (lp+1) * r * (1-r)^{lp} / (1 - (1-r)^{lp+1})
/// Evaluates to 0 in the r -> 0 limit. This is an undercount (0 = perfectly
/// accurate), despite sometimes being read as an accuracy score.
inline double expected_relative_undercount(double path_length, double p, double r) {
  if (!(path_length >= 1.0)) throw Error("path length must be at least 1");
  if (!(p >= 0.0) || !(p <= 1.0)) throw Error("loss switch ratio must be in [0, 1]");
  if (!(r >= 0.0) || !(r < 1.0)) throw Error("packet loss rate must be in [0, 1)");
  if (r == 0.0) return 0.0;
  const double lp = path_length * p;
  const double q = 1.0 - r;
  return 1.0 - (lp + 1.0) * r * std::pow(q, lp) / (1.0 - std::pow(q, lp + 1.0));
}

/// Accurate flow ratio: fraction of flows whose measured counter equals the
/// real one exactly. Empty input counts as vacuously accurate.
inline double afr(const std::map<std::string, long long>& measured,
                  const std::map<std::string, long long>& real) {
  if (measured.size() != real.size()) throw Error("afr: flow key sets differ");
  std::size_t equal = 0;
  auto it = real.begin();
  for (const auto& [id, count] : measured) {
    if (it->first != id) throw Error("afr: flow key sets differ");
    if (it->second == count) ++equal;
    ++it;
  }
  if (real.empty()) return 1.0;
  return static_cast<double>(equal) / static_cast<double>(real.size());
}

/// Host-pair traffic matrix: flows with the same (source, destination) pair
/// aggregate into one cell.
using TrafficMatrix = std::map<std::pair<int, int>, long long>;

inline TrafficMatrix traffic_matrix(const std::vector<Flow>& flows,
                                    const std::map<std::string, long long>& counts) {
  TrafficMatrix tm;
  for (const Flow& f : flows) {
    auto it = counts.find(f.id);
    if (it == counts.end()) throw Error("traffic matrix: no counter for flow " + f.id);
    tm[{f.src_switch, f.dst_switch}] += it->second;
  }
  return tm;
}

struct TmAccuracy {
  double exact = 1.0;          // fraction of cells with relative error < threshold
  double mean_relative = 1.0;  // mean over cells of min/max ratio
};

inline TmAccuracy tm_accuracy(const TrafficMatrix& measured, const TrafficMatrix& real,
                              double threshold = 1e-6) {
  if (measured.size() != real.size())
    throw Error("tm accuracy: matrices cover different host pairs");
  TmAccuracy acc;
  if (real.empty()) return acc;
  std::size_t exact = 0;
  double ratio_sum = 0.0;
  auto mit = measured.begin();
  for (const auto& [pair, rv] : real) {
    if (mit->first != pair) throw Error("tm accuracy: matrices cover different host pairs");
    const auto mv = mit->second;
    ++mit;
    if (rv == 0) {
      if (mv == 0) {
        ++exact;
        ratio_sum += 1.0;
      }
      continue;
    }
    const double rel = std::abs(static_cast<double>(mv - rv)) / static_cast<double>(rv);
    if (rel < threshold) ++exact;
    const auto lo = std::min(mv, rv);
    const auto hi = std::max(mv, rv);
    if (hi > 0 && lo >= 0)
      ratio_sum += static_cast<double>(lo) / static_cast<double>(hi);
  }
  acc.exact = static_cast<double>(exact) / static_cast<double>(real.size());
  acc.mean_relative = ratio_sum / static_cast<double>(real.size());
  return acc;
}

/// Where each flow's counter is actually read under a scheme: the first
/// chosen poll-all switch along its path, else its assigned single switch.
inline std::map<std::string, int> reading_switches(const PollingScheme& scheme,
                                                   const TrackerSnapshot& snap) {
  std::set<int> poll_all_switches;
  for (const auto& t : scheme.poll_alls) poll_all_switches.insert(t.switch_id);
  std::map<std::string, int> out;
  for (std::size_t f = 0; f < snap.flow_ids.size(); ++f) {
    const auto& path = snap.flow_paths[f];
    int where = -1;
    for (int s : path)
      if (poll_all_switches.count(s)) {
        where = s;
        break;
      }
    if (where < 0) {
      auto it = scheme.poll_singles.find(snap.flow_ids[f]);
      if (it == scheme.poll_singles.end())
        throw Error("reading switches: scheme does not cover flow " + snap.flow_ids[f]);
      where = it->second.switch_id;
    }
    out.emplace(snap.flow_ids[f], where);
  }
  return out;
}

/// Full measurement pass: real vs measured per-flow counters when the given
/// scheme polls under the given loss model. The scheme itself is built
/// without loss knowledge; loss only corrupts the read counters.
struct MeasurementResult {
  std::map<std::string, long long> real;
  std::map<std::string, long long> measured;
};

inline MeasurementResult measure_flows(const TrackerSnapshot& snap,
                                       const PollingScheme& scheme,
                                       const std::map<std::string, long long>& true_counts,
                                       const LossModel& model) {
  const auto readers = reading_switches(scheme, snap);
  MeasurementResult res;
  for (std::size_t f = 0; f < snap.flow_ids.size(); ++f) {
    const auto& id = snap.flow_ids[f];
    auto cit = true_counts.find(id);
    if (cit == true_counts.end()) throw Error("measurement: no true counter for flow " + id);
    const auto& path = snap.flow_paths[f];
    const auto counters = counters_along_path(cit->second, path, model);
    const int reader = readers.at(id);
    const auto pos = std::find(path.begin(), path.end(), reader);
    if (pos == path.end()) throw Error("measurement: reading switch is off the flow path");
    res.real.emplace(id, cit->second);
    res.measured.emplace(id, counters[static_cast<std::size_t>(pos - path.begin())]);
  }
  return res;
}

}  // namespace flowmon
