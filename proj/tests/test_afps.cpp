#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flowmon/afps.hpp"
#include "flowmon/rng.hpp"

using namespace flowmon;

namespace {

SamplerConfig cfg_for(SamplingAlgorithm algo) {
  SamplerConfig c;
  c.algorithm = algo;
  return c;
}

// Hand-feeds readings: deltas[i] bytes accumulate over each successive
// interval of 1 second. Returns the sequence of produced intervals.
std::vector<double> drive(SamplerConfig cfg, const std::vector<double>& deltas) {
  SamplerState s = make_sampler(cfg, 0.0);
  std::vector<double> out;
  double t = 0.0, c = 0.0;
  for (double d : deltas) {
    t += 1.0;
    c += d;
    out.push_back(sampler_advance(s, cfg, t, c));
  }
  return out;
}

CounterSeries constant_rate_series(double arrival, double expiry, double rate) {
  CounterSeries s;
  s.arrival = arrival;
  s.expiry = expiry;
  s.times = {arrival, expiry};
  s.values = {0.0, rate * (expiry - arrival)};
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau_min = 2.0;  // above initial_interval
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.traffic_coefficient = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("proportional tuning: fixed point, acceleration, idle") {
  SamplerConfig cfg = cfg_for(SamplingAlgorithm::PT);
  cfg.traffic_coefficient = 1000.0;  // v

  // Steady state: traffic exactly at v keeps tau at 1 s.
  auto steady = drive(cfg, {1000, 1000, 1000, 1000});
  for (double tau : steady) CHECK(tau == Catch::Approx(1.0));

  // Twice the coefficient rate: tau = 1 * v * 1/2v = 0.5 (exactly the floor).
  SamplerState s = make_sampler(cfg, 0.0);
  sampler_advance(s, cfg, 1.0, 2000.0);
  CHECK(s.interval == Catch::Approx(0.5));

  // Idle interval jumps to tau_max.
  auto idle = drive(cfg, {1000, 0});
  CHECK(idle.back() == Catch::Approx(5.0));

  // Clamping: a tiny delta would give a huge tau; it stops at tau_max.
  auto slow = drive(cfg, {1000, 1});
  CHECK(slow.back() == Catch::Approx(5.0));
}

TEST_CASE("default traffic coefficient locks to the first interval's rate") {
  SamplerConfig cfg = cfg_for(SamplingAlgorithm::PT);  // no explicit v
  SamplerState s = make_sampler(cfg, 0.0);
  // First poll after 1 s sees 800 bytes: v = 800 B/s, and the first update is
  // neutral (tau stays 1 s).
  CHECK(sampler_advance(s, cfg, 1.0, 800.0) == Catch::Approx(1.0));
  CHECK(s.coefficient == Catch::Approx(800.0));
  // Rate halves -> interval doubles.
  CHECK(sampler_advance(s, cfg, 2.0, 1200.0) == Catch::Approx(2.0));
  // Coefficient is never recomputed.
  CHECK(s.coefficient == Catch::Approx(800.0));
}

TEST_CASE("ewma tuning: degenerate alphas and the midpoint case") {
  // alpha = 1: identical to PT on any input sequence.
  SamplerConfig pt = cfg_for(SamplingAlgorithm::PT);
  SamplerConfig ew = cfg_for(SamplingAlgorithm::Ewmat);
  ew.alpha = 1.0;
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> deltas;
    for (int i = 0; i < 30; ++i) deltas.push_back(std::floor(rng_unit(rng) * 3000.0));
    CHECK(drive(pt, deltas) == drive(ew, deltas));
  }

  // alpha = 0: interval pinned at initial forever.
  ew.alpha = 0.0;
  for (double tau : drive(ew, {5000, 1, 0, 700, 80000})) CHECK(tau == Catch::Approx(1.0));

  // alpha = 0.5 with pt estimate 2 and previous smoothed value 1 -> 1.5.
  SamplerConfig half = cfg_for(SamplingAlgorithm::Ewmat);
  half.alpha = 0.5;
  half.traffic_coefficient = 1000.0;
  SamplerState s = make_sampler(half, 0.0);
  // ewma chain starts at 1.0; rate 500 B/s gives pt = 1*1000/500 = 2.
  CHECK(sampler_advance(s, half, 1.0, 500.0) == Catch::Approx(1.5));
}

TEST_CASE("sliding window tuning follows the branch rules") {
  SamplerConfig cfg = cfg_for(SamplingAlgorithm::Swt);

  SECTION("first sample cannot be a spike; window seeds and tau doubles") {
    SamplerState s = make_sampler(cfg, 0.0);
    CHECK(sampler_advance(s, cfg, 1.0, 900.0) == Catch::Approx(2.0));
    CHECK(s.window == std::deque<double>{900.0});
    CHECK(s.window_size == 4);  // grew by one from the initial 3
  }

  SECTION("boundary is strict: delta equal to mean is not a spike") {
    SamplerState s = make_sampler(cfg, 0.0);
    s.window = {100.0, 100.0, 100.0};
    s.window_size = 3;
    s.interval = 1.0;
    s.readings = 2;
    s.prev_time = 9.0;
    s.prev_counter = 0.0;
    s.last_time = 10.0;
    s.last_counter = 100.0;  // delta 100 == mean + 2*0
    CHECK(swt_next_interval(s, cfg) == Catch::Approx(2.0));
    CHECK(s.window == std::deque<double>{100.0, 100.0, 100.0, 100.0});
    CHECK(s.window_size == 4);
  }

  SECTION("spike halves tau, shrinks ws, leaves the window alone") {
    SamplerState s = make_sampler(cfg, 0.0);
    s.window = {100.0, 100.0, 100.0};
    s.window_size = 3;
    s.interval = 2.0;
    s.readings = 2;
    s.prev_time = 9.0;
    s.prev_counter = 0.0;
    s.last_time = 11.0;
    s.last_counter = 500.0;  // delta 500 > 100
    CHECK(swt_next_interval(s, cfg) == Catch::Approx(1.0));
    CHECK(s.window == std::deque<double>{100.0, 100.0, 100.0});
    CHECK(s.window_size == 2);  // min(3, ceil(3/2)) = 2

    // Alternative shrink operator keeps the window size at >= 3.
    SamplerConfig alt = cfg;
    alt.window_shrink = SamplerConfig::WindowShrink::FloorAt3;
    SamplerState s2 = s;
    s2.window_size = 10;
    s2.interval = 2.0;
    CHECK(swt_next_interval(s2, alt) == Catch::Approx(1.0));
    CHECK(s2.window_size == 5);  // max(3, ceil(10/2))
  }

  SECTION("non-spike trims the window back to the size bound") {
    SamplerState s = make_sampler(cfg, 0.0);
    s.window = {50.0, 60.0, 70.0, 80.0};
    s.window_size = 2;  // shrunk by previous spikes; deque is oversized
    s.interval = 1.0;
    s.readings = 2;
    s.last_counter = 65.0;  // mean 65, within band
    CHECK(swt_next_interval(s, cfg) == Catch::Approx(2.0));
    CHECK(s.window_size == 3);
    CHECK(s.window == std::deque<double>{70.0, 80.0, 65.0});  // trimmed to 3
  }

  SECTION("window size never drops below 1 and tau respects the floor") {
    SamplerState s = make_sampler(cfg, 0.0);
    s.window = {10.0};
    s.window_size = 1;
    s.interval = 0.5;
    s.readings = 2;
    s.last_counter = 1e9;  // massive spike
    CHECK(swt_next_interval(s, cfg) == Catch::Approx(0.5));  // floor holds
    CHECK(s.window_size == 1);                               // min(3, ceil(1/2)) = 1
  }
}

TEST_CASE("every emitted interval stays inside the valid range") {
  Rng rng(42);
  for (auto algo : {SamplingAlgorithm::PT, SamplingAlgorithm::Ewmat, SamplingAlgorithm::Swt}) {
    for (int trial = 0; trial < 25; ++trial) {
      SamplerConfig cfg = cfg_for(algo);
      cfg.alpha = rng_unit(rng);
      std::vector<double> deltas;
      for (int i = 0; i < 50; ++i)
        deltas.push_back(rng_below(rng, 4) ? std::floor(rng_unit(rng) * 1e6) : 0.0);
      for (double tau : drive(cfg, deltas)) {
        CHECK(tau >= cfg.tau_min);
        CHECK(tau <= cfg.tau_max);
      }
    }
  }
}

TEST_CASE("schedule: periodic flow gets one poll per second plus the free final") {
  auto series = constant_rate_series(2.0, 12.0, 500.0);
  SampleLog log = schedule("flow", series, cfg_for(SamplingAlgorithm::Periodic));
  CHECK(log.poll_count == 10);
  REQUIRE(log.samples.size() == 11);
  CHECK(log.samples.front().time == Catch::Approx(3.0));
  CHECK(log.samples.front().counter == Catch::Approx(500.0));
  CHECK(log.samples[9].time == Catch::Approx(12.0));
  CHECK(log.samples.back().final_reading);
  CHECK(log.samples.back().time == Catch::Approx(12.0));
  CHECK(log.samples.back().counter == Catch::Approx(5000.0));
}

TEST_CASE("schedule: constant traffic at the coefficient rate is a fixed point") {
  SamplerConfig cfg = cfg_for(SamplingAlgorithm::PT);
  cfg.traffic_coefficient = 700.0;
  auto series = constant_rate_series(0.0, 20.0, 700.0);
  SampleLog log = schedule("flow", series, cfg);
  CHECK(log.poll_count == 20);
  for (const auto& s : log.samples)
    if (!s.final_reading) CHECK(s.interval_used == Catch::Approx(1.0));
}

TEST_CASE("schedule: an idle flow backs off to tau_max and stays there") {
  CounterSeries series;
  series.arrival = 0.0;
  series.expiry = 60.0;
  series.times = {0.0, 1.0, 60.0};
  series.values = {0.0, 400.0, 400.0};  // one active second, then silence
  for (auto algo : {SamplingAlgorithm::PT, SamplingAlgorithm::Ewmat, SamplingAlgorithm::Swt}) {
    SampleLog log = schedule("flow", series, cfg_for(algo));
    REQUIRE(log.poll_count >= 2);
    // Adaptive algorithms must back off to (or asymptotically toward) the cap.
    const auto& tail = log.samples[static_cast<std::size_t>(log.poll_count) - 1];
    CHECK(tail.interval_used > 4.9);
    CHECK(log.poll_count < 60);  // far fewer than periodic's one per second
  }
}

TEST_CASE("link utilization from sample logs") {
  SampleLog log;
  log.flow_id = "f";
  log.samples = {{1.0, 0.0, 1.0, false}, {2.0, 1000.0, 1.0, false}};
  CHECK(link_utilization({log}, 2.0, 1.0) == Catch::Approx(1000.0));
  // No sample before t - tau: contributes from counter zero.
  CHECK(link_utilization({log}, 2.0, 1.5) == Catch::Approx(1000.0));
  // Window before any samples: zero.
  CHECK(link_utilization({log}, 0.9, 0.5) == Catch::Approx(0.0));
  CHECK(link_utilization({}, 2.0, 1.0) == 0.0);
  CHECK_THROWS_AS(link_utilization({log}, 1.0, 1.0), Error);

  // Perfect per-second sampling reproduces a known byte series exactly.
  CounterSeries series;
  series.arrival = 0.0;
  series.expiry = 5.0;
  series.times = {0, 1, 2, 3, 4, 5};
  series.values = {0, 100, 400, 500, 900, 1000};
  SampleLog perfect;
  perfect.flow_id = "p";
  for (int t = 0; t <= 5; ++t)
    perfect.samples.push_back({static_cast<double>(t), series.at(static_cast<double>(t)),
                               1.0, false});
  for (int t = 2; t <= 5; ++t) {
    const double want = series.values[static_cast<std::size_t>(t)] -
                        series.values[static_cast<std::size_t>(t - 1)];
    CHECK(link_utilization({perfect}, static_cast<double>(t), 1.0) == Catch::Approx(want));
  }
}

TEST_CASE("measurement error") {
  CHECK(measurement_error({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(measurement_error({3}, {0}) == Catch::Approx(3.0));
  CHECK(measurement_error({2, 2, 2, 2}, {0, 0, 4, 4}) == Catch::Approx(1.0));
  CHECK_THROWS_AS(measurement_error({1}, {1, 2}), Error);
  CHECK_THROWS_AS(measurement_error({}, {}), Error);
}

TEST_CASE("counter series interpolation") {
  CounterSeries s;
  s.arrival = 1.0;
  s.expiry = 3.0;
  s.times = {1.0, 2.0, 3.0};
  s.values = {0.0, 100.0, 400.0};
  CHECK_NOTHROW(s.validate());
  CHECK(s.at(0.0) == 0.0);
  CHECK(s.at(1.5) == Catch::Approx(50.0));
  CHECK(s.at(2.5) == Catch::Approx(250.0));
  CHECK(s.at(99.0) == Catch::Approx(400.0));
  CHECK(s.final_counter() == Catch::Approx(400.0));

  CounterSeries bad = s;
  bad.values = {0.0, 200.0, 100.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}
