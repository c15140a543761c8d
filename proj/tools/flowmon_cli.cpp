// Command-line front end: one-shot scheme solving, the four simulation
// experiments, topology/trace generation, and the pinned-value fixture table.
//
// Exit codes: 0 success, 1 validation/usage error, 2 fixture failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowmon/cost_model.hpp"
#include "flowmon/dynamics.hpp"
#include "flowmon/fixtures.hpp"
#include "flowmon/flow_state.hpp"
#include "flowmon/loss_accuracy.hpp"
#include "flowmon/mcps.hpp"
#include "flowmon/scheme_io.hpp"
#include "flowmon/sim_harness.hpp"
#include "flowmon/topology.hpp"

namespace {

using namespace flowmon;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (values.empty()) throw Error(std::string(what) + ": empty list");
  return values;
}

// Shared source options: topology, deployment mode, workload, seed, output.
struct CommonOpts {
  std::string topo_file;
  std::string er_spec;      // "n,p"
  std::string waxman_spec;  // "n,alpha,beta"
  std::string mode_spec = "oob";
  std::string trace_file;
  std::string synthetic_spec;  // "tcp[:count]" | "udp[:count]"
  int peak = 0;                // pin synthetic peak concurrency when > 0
  int flows = 500;
  std::uint64_t seed = 1;
  double duration = 60.0;
  std::string out;
};

void add_topology_opts(CLI::App* cmd, CommonOpts& o) {
  auto* file = cmd->add_option("--topo", o.topo_file, "topology edge-list file");
  auto* er = cmd->add_option("--er", o.er_spec,
                             "random Erdos-Renyi topology: switches,link_probability");
  auto* wax = cmd->add_option("--waxman", o.waxman_spec,
                              "random Waxman topology: switches,alpha,beta");
  file->excludes(er)->excludes(wax);
  er->excludes(wax);
}

void add_workload_opts(CLI::App* cmd, CommonOpts& o) {
  auto* flows =
      cmd->add_option("--flows", o.flows, "random static flow count (default 500)");
  auto* trace = cmd->add_option("--trace", o.trace_file, "replay a trace file");
  auto* synth = cmd->add_option("--synthetic", o.synthetic_spec,
                                "synthetic traffic profile: tcp[:count] | udp[:count]");
  cmd->add_option("--peak", o.peak,
                  "pin the synthetic trace's peak concurrency (whole-second mode)");
  flows->excludes(trace)->excludes(synth);
  trace->excludes(synth);
}

Topology make_topology(const CommonOpts& o) {
  if (!o.topo_file.empty()) return load_topology(read_file(o.topo_file));
  if (!o.waxman_spec.empty()) {
    const auto v = parse_number_list(o.waxman_spec, "--waxman");
    if (v.size() != 3) throw Error("--waxman needs switches,alpha,beta");
    return gen_waxman(static_cast<int>(v[0]), v[1], v[2], o.seed);
  }
  std::string spec = o.er_spec.empty() ? "50,0.12" : o.er_spec;
  const auto v = parse_number_list(spec, "--er");
  if (v.size() != 2) throw Error("--er needs switches,link_probability");
  return gen_erdos_renyi(static_cast<int>(v[0]), v[1], o.seed);
}

DeploymentMode parse_mode(const std::string& spec) {
  if (spec == "oob") return DeploymentMode::out_of_band();
  if (spec.rfind("inband:", 0) == 0)
    return DeploymentMode::in_band(std::stoi(spec.substr(7)));
  if (spec.rfind("multi:", 0) == 0) {
    std::vector<int> attach;
    for (double v : parse_number_list(spec.substr(6), "--mode multi"))
      attach.push_back(static_cast<int>(v));
    return DeploymentMode::multi(std::move(attach));
  }
  throw Error("--mode must be oob, inband:<switch> or multi:<s1,s2,...>");
}

SyntheticProfile parse_synthetic(const std::string& spec, int peak) {
  std::string kind = spec;
  std::optional<int> count;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    kind = spec.substr(0, colon);
    count = std::stoi(spec.substr(colon + 1));
  }
  SyntheticProfile p;
  if (kind == "tcp")
    p = count ? SyntheticProfile::tcp_like(*count) : SyntheticProfile::tcp_like();
  else if (kind == "udp")
    p = count ? SyntheticProfile::udp_like(*count) : SyntheticProfile::udp_like();
  else
    throw Error("--synthetic must be tcp[:count] or udp[:count]");
  if (peak > 0) p.peak_concurrent = peak;
  return p;
}

Workload make_workload(const CommonOpts& o) {
  if (!o.trace_file.empty()) return TraceWorkload{read_file(o.trace_file)};
  if (!o.synthetic_spec.empty())
    return SyntheticWorkload{parse_synthetic(o.synthetic_spec, o.peak)};
  return RandomFlowsWorkload{o.flows};
}

ExperimentConfig make_config(const CommonOpts& o) {
  ExperimentConfig cfg(make_topology(o), make_workload(o));
  cfg.mode = parse_mode(o.mode_spec);
  cfg.seed = o.seed;
  cfg.duration = o.duration;
  return cfg;
}

// Every run prints its resolved configuration and reproducibility manifest on
// stderr, keeping stdout clean for the machine-readable artifact.
void report_run(const ExperimentConfig& cfg) {
  std::cerr << "# resolved config\n" << cfg.resolved_text();
  std::cerr << "# manifest\n" << run_manifest(cfg);
}

int cmd_topo(const CommonOpts& o, const std::string& trace_out) {
  const Topology t = make_topology(o);
  write_output(o.out, to_edge_list(t));
  if (!trace_out.empty()) {
    const auto profile = parse_synthetic(
        o.synthetic_spec.empty() ? "tcp" : o.synthetic_spec, o.peak);
    write_output(trace_out, generate_synthetic_trace(t, profile, o.duration, o.seed));
  }
  std::cerr << "# topology switches=" << t.switch_count() << " links=" << t.edges().size()
            << " digest=" << fnv1a64(to_edge_list(t)) << " seed=" << o.seed << "\n";
  return 0;
}

int cmd_solve(const CommonOpts& o, bool optimal, double at_time) {
  ExperimentConfig cfg = make_config(o);
  cfg.validate();
  report_run(cfg);

  // Snapshot: random workloads are static; traces are replayed up to a cutoff.
  std::vector<Flow> flows;
  if (const auto* tw = std::get_if<TraceWorkload>(&cfg.workload)) {
    FlowStateTracker tracker(cfg.topo);
    for (const auto& e : parse_trace(tw->text, cfg.topo)) {
      if (e.time > at_time) break;
      tracker.apply_event(e);
    }
    for (const auto& id : tracker.active_ids()) flows.push_back(*tracker.find(id));
  } else if (const auto* rf = std::get_if<RandomFlowsWorkload>(&cfg.workload)) {
    flows = generate_random_flows(cfg.topo, rf->count,
                                  derive_seed(cfg.seed, detail::kStreamRandomFlows));
  } else {
    throw Error("solve expects --flows or --trace (one-shot instances are static)");
  }

  const auto snap = TrackerSnapshot::from_flows(cfg.topo.switch_count(), flows);
  const auto dists = control_distances(cfg.topo, cfg.mode);
  const auto candidates = construct_candidates(snap, cfg.constants, dists);
  const PollingScheme scheme =
      optimal ? optimal_scheme(candidates) : greedy_scheme(candidates);
  if (!verify_coverage(scheme, snap)) throw Error("scheme does not cover all flows");

  nlohmann::json summary;
  summary["algorithm"] = optimal ? "optimal" : "greedy";
  summary["switches"] = cfg.topo.switch_count();
  summary["flows"] = static_cast<std::int64_t>(flows.size());
  summary["scheme_cost"] = scheme.total_cost;
  if (!flows.empty()) {
    const Cost min_cost =
        per_flow_baseline(snap, cfg.constants, dists, PerFlowBaseline::MinCost);
    const Cost random_cost = per_flow_baseline(snap, cfg.constants, dists,
                                               PerFlowBaseline::Random, cfg.seed);
    summary["per_flow_min_cost"] = min_cost;
    summary["per_flow_random_cost"] = random_cost;
    summary["savings_vs_min"] = scheme_savings(scheme.total_cost, min_cost);
    summary["savings_vs_random"] = scheme_savings(scheme.total_cost, random_cost);
  }

  nlohmann::json doc;
  doc["scheme"] = scheme_to_json(scheme);
  doc["summary"] = summary;
  write_output(o.out, doc.dump(2) + "\n");
  return 0;
}

int cmd_dynamics(const CommonOpts& o) {
  ExperimentConfig cfg = make_config(o);
  cfg.validate();
  report_run(cfg);
  const auto res = run_dynamics_experiment(cfg);
  write_output(o.out, res.csv);
  std::cerr << "# mean costs: per_flow=" << res.mean_per_flow
            << " recompute=" << res.mean_recompute << " fixed=" << res.mean_dapr_fixed
            << " adaptive=" << res.mean_dapr_adaptive << "\n";
  std::cerr << "# reconstructions: fixed=" << res.fixed_reconstructions
            << " adaptive=" << res.adaptive_reconstructions
            << " coverage_ok=" << (res.coverage_ok ? "yes" : "no") << "\n";
  return 0;
}

int cmd_afps(const CommonOpts& o, const std::string& samples_out) {
  ExperimentConfig cfg = make_config(o);
  cfg.validate();
  report_run(cfg);
  const auto res = run_afps_experiment(cfg);
  write_output(o.out, res.utilization_csv);
  if (!samples_out.empty()) write_output(samples_out, res.sample_log_csv);
  for (const char* name : {"periodic", "pt", "ewmat", "swt"})
    std::cerr << "# " << name << ": polls=" << res.poll_counts.at(name)
              << " error=" << res.errors.at(name) << "\n";
  return 0;
}

int cmd_accuracy(const CommonOpts& o, const std::string& rates_spec,
                 const std::string& ratios_spec) {
  ExperimentConfig cfg = make_config(o);
  cfg.validate();
  report_run(cfg);
  const auto rates = parse_number_list(rates_spec, "--loss-rates");
  const auto ratios = parse_number_list(ratios_spec, "--switch-ratios");
  const auto res = run_accuracy_experiment(cfg, rates, ratios);
  write_output(o.out, res.csv);
  return 0;
}

// Pinned reference values: the worked-example costs and savings, the message
// sizes, and the closed-form undercount spot value. Any mismatch exits 2.
int cmd_fixtures(std::uint64_t seed) {
  struct Row {
    std::string name;
    double expected;
    double actual;
    double tol;  // 0 = exact
  };
  std::vector<Row> rows;
  auto add = [&](std::string name, double expected, double actual, double tol = 0.0) {
    rows.push_back({std::move(name), expected, actual, tol});
  };

  const MessageConstants mc;
  add("statistics request bytes", 122, static_cast<double>(mc.request));
  add("reply bytes, one flow entry", 174, static_cast<double>(reply_len(mc, 1)));
  add("reply bytes, eight flow entries", 78 + 96 * 8,
      static_cast<double>(reply_len(mc, 8)));

  const auto ex = fixtures::worked_example();
  const auto snap = TrackerSnapshot::from_flows(ex.topo.switch_count(), ex.flows);

  const auto oob = control_distances(ex.topo, DeploymentMode::out_of_band());
  const auto oob_cands = construct_candidates(snap, ex.constants, oob);
  const auto oob_greedy = greedy_scheme(oob_cands);
  const auto oob_best = optimal_scheme(oob_cands);
  const Cost oob_per_flow =
      per_flow_baseline(snap, ex.constants, oob, PerFlowBaseline::MinCost);
  add("out-of-band greedy cost", 1072, static_cast<double>(oob_greedy.total_cost));
  add("out-of-band optimal cost", 1072, static_cast<double>(oob_best.total_cost));
  add("out-of-band per-flow cost", 1776, static_cast<double>(oob_per_flow));
  add("out-of-band savings", 0.396, scheme_savings(oob_best.total_cost, oob_per_flow),
      5e-4);

  const auto ib = control_distances(ex.topo, DeploymentMode::in_band(ex.in_band_attach));
  const auto ib_cands = construct_candidates(snap, ex.constants, ib);
  const auto ib_best = optimal_scheme(ib_cands);
  const Cost ib_fixed = fixtures::assigned_per_flow_cost(ex.constants, ib, ex.flows,
                                                         ex.fixed_assignment);
  const Cost ib_min =
      per_flow_baseline(snap, ex.constants, ib, PerFlowBaseline::MinCost);
  add("in-band optimal cost", 1560, static_cast<double>(ib_best.total_cost));
  add("in-band fixed per-flow cost", 4144, static_cast<double>(ib_fixed));
  add("in-band min per-flow cost", 2368, static_cast<double>(ib_min));
  add("in-band savings vs fixed", 0.624, scheme_savings(ib_best.total_cost, ib_fixed),
      5e-4);
  add("in-band savings vs min", 0.341, scheme_savings(ib_best.total_cost, ib_min),
      5e-4);

  add("relative undercount, 4 hops half lossy r=0.1", 0.1033,
      expected_relative_undercount(4, 0.5, 0.1), 5e-5);
  add("relative undercount, r=0", 0.0, expected_relative_undercount(5, 1.0, 0.0));

  int failed = 0;
  std::ostringstream out;
  out << "fixture                                        expected      actual        status\n";
  for (const auto& row : rows) {
    const bool ok = row.tol == 0.0 ? row.expected == row.actual
                                   : std::fabs(row.expected - row.actual) <= row.tol;
    failed += ok ? 0 : 1;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-46s %-13.6g %-13.6g %s\n", row.name.c_str(),
                  row.expected, row.actual, ok ? "ok" : "FAIL");
    out << buf;
  }
  out << rows.size() << " fixtures, " << failed << " failed (seed " << seed << ")\n";
  std::cout << out.str();
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polling-scheme construction and adaptive flow sampling toolkit"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string trace_out, samples_out;
  std::string rates_spec = "0,0.05,0.1,0.2", ratios_spec = "0,0.25,0.5,1";
  bool optimal = false;
  double at_time = 1e18;

  auto add_common = [&](CLI::App* cmd, bool with_mode = true) {
    add_topology_opts(cmd, o);
    cmd->add_option("--seed", o.seed, "master RNG seed (default 1)");
    cmd->add_option("--out", o.out, "output file (default stdout)");
    if (with_mode)
      cmd->add_option("--mode", o.mode_spec,
                      "deployment: oob | inband:<switch> | multi:<s1,s2,...>");
  };

  auto* topo = app.add_subcommand("topo", "generate or echo a topology edge list");
  add_common(topo, false);
  topo->add_option("--synthetic", o.synthetic_spec,
                   "also generate traffic: tcp[:count] | udp[:count]");
  topo->add_option("--peak", o.peak, "pin the synthetic trace's peak concurrency");
  topo->add_option("--duration", o.duration, "trace length in seconds");
  topo->add_option("--trace-out", trace_out, "write the synthetic trace here");

  auto* solve = app.add_subcommand("solve", "build one polling scheme and price it");
  add_common(solve);
  add_workload_opts(solve, o);
  solve->add_flag("--optimal", optimal, "exhaustive search instead of greedy");
  solve->add_option("--at", at_time, "trace replay cutoff time (default: whole trace)");

  auto* dynamics =
      app.add_subcommand("dynamics", "patched-scheme maintenance under churn");
  add_common(dynamics);
  add_workload_opts(dynamics, o);
  dynamics->add_option("--duration", o.duration, "simulation length in seconds");

  auto* afps = app.add_subcommand("afps", "adaptive flow sampling comparison");
  add_common(afps, false);
  add_workload_opts(afps, o);
  afps->add_option("--duration", o.duration, "simulation length in seconds");
  afps->add_option("--samples-out", samples_out, "write the per-flow sample log here");

  auto* accuracy =
      app.add_subcommand("accuracy", "measurement accuracy under packet loss");
  add_common(accuracy);
  add_workload_opts(accuracy, o);
  accuracy->add_option("--loss-rates", rates_spec, "comma list of packet loss rates");
  accuracy->add_option("--switch-ratios", ratios_spec,
                       "comma list of lossy switch ratios");

  auto* fixtures_cmd =
      app.add_subcommand("paper-fixtures", "check all pinned reference values");
  fixtures_cmd->add_option("--seed", o.seed, "recorded in the report (values are fixed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (topo->parsed()) return cmd_topo(o, trace_out);
    if (solve->parsed()) return cmd_solve(o, optimal, at_time);
    if (dynamics->parsed()) return cmd_dynamics(o);
    if (afps->parsed()) return cmd_afps(o, samples_out);
    if (accuracy->parsed()) return cmd_accuracy(o, rates_spec, ratios_spec);
    if (fixtures_cmd->parsed()) return cmd_fixtures(o.seed);
  } catch (const flowmon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
