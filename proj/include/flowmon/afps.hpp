#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "flowmon/core.hpp"

namespace flowmon {

enum class SamplingAlgorithm { Periodic, PT, Ewmat, Swt };

inline const char* to_string(SamplingAlgorithm a) {
  switch (a) {
    case SamplingAlgorithm::Periodic: return "periodic";
    case SamplingAlgorithm::PT: return "pt";
    case SamplingAlgorithm::Ewmat: return "ewmat";
    case SamplingAlgorithm::Swt: return "swt";
  }
  return "?";
}

struct SamplerConfig {
  double tau_min = 0.5;
  double tau_max = 5.0;
  double initial_interval = 1.0;
  double alpha = 0.5;  // EWMA smoothing weight on the fresh estimate
  // Traffic coefficient for proportional tuning: target bytes/second. When
  // unset, each flow locks in its observed rate over its first interval.
  std::optional<double> traffic_coefficient;
  SamplingAlgorithm algorithm = SamplingAlgorithm::Periodic;
  // Window-size shrink on a detected spike: the literal rule caps the window
  // at 3; the alternative reading keeps it at least 3.
  enum class WindowShrink { ClampTo3, FloorAt3 };
  WindowShrink window_shrink = WindowShrink::ClampTo3;

  void validate() const {
    if (!(tau_min > 0) || tau_min > initial_interval || initial_interval > tau_max)
      throw Error("sampler config requires 0 < tau_min <= initial_interval <= tau_max");
    if (alpha < 0.0 || alpha > 1.0) throw Error("sampler alpha must be in [0, 1]");
    if (traffic_coefficient && !(*traffic_coefficient > 0.0))
      throw Error("sampler traffic coefficient must be positive");
  }

  double clamp(double tau) const { return std::clamp(tau, tau_min, tau_max); }
};

/// Per-flow tuning state. The flow's arrival counts as an implicit first
/// reading of counter zero; after the first real poll there are always two
/// readings to difference.
struct SamplerState {
  double prev_time = 0.0;
  double prev_counter = 0.0;
  double last_time = 0.0;
  double last_counter = 0.0;
  int readings = 0;
  double interval = 0.0;       // interval currently in force
  double ewma_interval = 0.0;  // smoothed chain for EWMAT
  std::deque<double> window;   // recent per-interval byte deltas (SWT)
  int window_size = 3;
  double coefficient = 0.0;    // locked-in traffic coefficient; 0 = not yet
};

inline SamplerState make_sampler(const SamplerConfig& cfg, double arrival_time) {
  cfg.validate();
  SamplerState s;
  s.prev_time = s.last_time = arrival_time;
  s.prev_counter = s.last_counter = 0.0;
  s.readings = 1;
  s.interval = cfg.initial_interval;
  s.ewma_interval = cfg.initial_interval;
  if (cfg.traffic_coefficient) s.coefficient = *cfg.traffic_coefficient;
  return s;
}

/// Proportional tuning: grow the interval when traffic slows, shrink it when
/// traffic accelerates — new tau = tau * v * dt/dc, clamped. An idle interval
/// (no bytes) jumps straight to tau_max instead of dividing by zero.
inline double pt_next_interval(const SamplerState& s, const SamplerConfig& cfg) {
  if (s.readings < 2) return cfg.clamp(s.interval);
  const double dt = s.last_time - s.prev_time;
  const double dc = s.last_counter - s.prev_counter;
  if (dc <= 0.0) return cfg.tau_max;
  return cfg.clamp(s.interval * s.coefficient * dt / dc);
}

/// EWMA smoothing over the proportional estimate: alpha = 1 degenerates to
/// plain proportional tuning, alpha = 0 pins the interval at its initial value.
inline double ewmat_next_interval(const SamplerState& s, const SamplerConfig& cfg) {
  return cfg.clamp(cfg.alpha * pt_next_interval(s, cfg) + (1.0 - cfg.alpha) * s.ewma_interval);
}

/// Sliding-window spike detection with multiplicative adjustment. A spike
/// (latest delta above window mean + 2 population stdevs, strictly) halves
/// the interval and shrinks the window size without touching the window
/// contents; otherwise the interval doubles, the window grows by one slot,
/// and the delta is recorded. An empty window cannot flag a spike.
inline double swt_next_interval(SamplerState& s, const SamplerConfig& cfg) {
  if (s.readings < 2) return cfg.clamp(s.interval);
  const double var = s.last_counter - s.prev_counter;
  bool spike = false;
  if (!s.window.empty()) {
    double mean = 0.0;
    for (double d : s.window) mean += d;
    mean /= static_cast<double>(s.window.size());
    double sq = 0.0;
    for (double d : s.window) sq += (d - mean) * (d - mean);
    const double stdev = std::sqrt(sq / static_cast<double>(s.window.size()));
    spike = var > mean + 2.0 * stdev;
  }
  if (spike) {
    const int half = (s.window_size + 1) / 2;  // ceil(ws/2)
    s.window_size = cfg.window_shrink == SamplerConfig::WindowShrink::ClampTo3
                        ? std::min(3, half)
                        : std::max(3, half);
    return std::max(cfg.tau_min, s.interval / 2.0);
  }
  s.window_size += 1;
  s.window.push_back(var);
  while (static_cast<int>(s.window.size()) > s.window_size) s.window.pop_front();
  return std::min(cfg.tau_max, s.interval * 2.0);
}

/// Absorbs one reading (time, cumulative counter) and returns the interval to
/// wait before the next poll. Locks in the default traffic coefficient from
/// the first observed interval.
inline double sampler_advance(SamplerState& s, const SamplerConfig& cfg, double time,
                              double counter) {
  if (time < s.last_time) throw Error("sampler: readings must move forward in time");
  if (counter + 1e-9 < s.last_counter)
    throw Error("sampler: cumulative counter decreased");
  s.prev_time = s.last_time;
  s.prev_counter = s.last_counter;
  s.last_time = time;
  s.last_counter = counter;
  ++s.readings;
  if (s.coefficient == 0.0 && s.readings >= 2) {
    const double dt = s.last_time - s.prev_time;
    if (dt > 0.0) s.coefficient = (s.last_counter - s.prev_counter) / dt;
  }
  switch (cfg.algorithm) {
    case SamplingAlgorithm::Periodic:
      s.interval = cfg.initial_interval;
      break;
    case SamplingAlgorithm::PT:
      s.interval = pt_next_interval(s, cfg);
      break;
    case SamplingAlgorithm::Ewmat:
      s.ewma_interval = ewmat_next_interval(s, cfg);
      s.interval = s.ewma_interval;
      break;
    case SamplingAlgorithm::Swt:
      s.interval = swt_next_interval(s, cfg);
      break;
  }
  return s.interval;
}

/// Ground-truth cumulative byte counter of one flow: piecewise linear between
/// breakpoints, flat outside [arrival, expiry].
struct CounterSeries {
  double arrival = 0.0;
  double expiry = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  void validate() const {
    if (times.size() != values.size() || times.empty())
      throw Error("counter series: times/values mismatch or empty");
    if (!std::is_sorted(times.begin(), times.end()))
      throw Error("counter series: breakpoints out of order");
    if (!std::is_sorted(values.begin(), values.end()))
      throw Error("counter series: cumulative counter decreases");
  }

  double at(double t) const {
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto hi = std::upper_bound(times.begin(), times.end(), t);
    const auto i = static_cast<std::size_t>(hi - times.begin());
    const double t0 = times[i - 1], t1 = times[i];
    const double v0 = values[i - 1], v1 = values[i];
    return t1 > t0 ? v0 + (v1 - v0) * (t - t0) / (t1 - t0) : v1;
  }

  double final_counter() const { return values.back(); }
};

struct Sample {
  double time = 0.0;
  double counter = 0.0;
  double interval_used = 0.0;  // wait that produced this sample; 0 for the final reading
  bool final_reading = false;

  bool operator==(const Sample&) const = default;
};

struct SampleLog {
  std::string flow_id;
  SamplingAlgorithm algorithm = SamplingAlgorithm::Periodic;
  std::vector<Sample> samples;
  int poll_count = 0;  // excludes the free final reading
};

/// Polls a flow over its lifetime: first poll at arrival + initial_interval,
/// then per the tuning algorithm; the expiry counter arrives for free with
/// the flow's removal notice and is appended as a non-poll reading.
inline SampleLog schedule(const std::string& flow_id, const CounterSeries& series,
                          const SamplerConfig& cfg) {
  cfg.validate();
  series.validate();
  SampleLog log;
  log.flow_id = flow_id;
  log.algorithm = cfg.algorithm;
  SamplerState state = make_sampler(cfg, series.arrival);
  double wait = cfg.initial_interval;
  double t = series.arrival + wait;
  while (t <= series.expiry + 1e-9) {
    const double c = series.at(t);
    log.samples.push_back({t, c, wait, false});
    wait = sampler_advance(state, cfg, t, c);
    t += wait;
  }
  log.poll_count = static_cast<int>(log.samples.size());
  log.samples.push_back({series.expiry, series.final_counter(), 0.0, true});
  return log;
}

/// Byte volume a set of flows put on the wire during [t - tau, t), estimated
/// from their sample logs: for each flow, the latest counter at or before t
/// minus the latest at or before t - tau (zero if none).
inline double link_utilization(const std::vector<SampleLog>& logs, double t, double tau) {
  if (!(tau > 0.0) || !(t > tau)) throw Error("link_utilization: need t > tau > 0");
  auto counter_at = [](const SampleLog& log, double lim) {
    double best = 0.0;
    for (const auto& s : log.samples) {
      if (s.time > lim) break;
      best = s.counter;
    }
    return best;
  };
  double total = 0.0;
  for (const auto& log : logs) total += counter_at(log, t) - counter_at(log, t - tau);
  return total;
}

/// Root-sum-square deviation between two series, scaled by 1/N.
inline double measurement_error(const std::vector<double>& actual,
                                const std::vector<double>& measured) {
  if (actual.size() != measured.size() || actual.empty())
    throw Error("measurement_error: series must have equal nonzero length");
  double sq = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - measured[i];
    sq += d * d;
  }
  return std::sqrt(sq) / static_cast<double>(actual.size());
}

}  // namespace flowmon
