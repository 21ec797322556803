#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loadsim/bench.hpp"
#include "loadsim/config.hpp"
#include "loadsim/csv.hpp"
#include "loadsim/machine.hpp"
#include "loadsim/metrics.hpp"
#include "loadsim/screener.hpp"

namespace loadsim::app {

// Exit codes, stable for pipeline use:
//   0 success / feasible        4 layout or scenario invariant violation
//   1 marginal                  5 dynamic curve missing or not matching
//   2 infeasible                6 bench acceleration not achievable
//   3 stall detected            7 sweep grid empty or over the cap
enum ExitCode {
  kOk = 0,
  kMarginal = 1,
  kInfeasible = 2,
  kStall = 3,
  kBadSpec = 4,
  kNoCurve = 5,
  kBenchAbort = 6,
  kBadGrid = 7,
};

inline std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LOADSIM_OUT")) return env;
  return ".";
}

inline std::string ensure_out_dir(const std::string& flag) {
  std::string out = resolve_out_dir(flag);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw SpecError(out, "cannot create output directory: " + ec.message());
  return out;
}

inline nlohmann::json metrics_to_json(const CycleMetrics& m) {
  return {{"complete", m.complete},
          {"cycle_time_s", m.cycle_time},
          {"fuel_proxy_j", m.fuel_proxy},
          {"payload_delivered_kg", m.payload_delivered},
          {"stall_events", m.stall_events},
          {"min_omega_rad_s", m.min_omega}};
}

inline nlohmann::json report_to_json(const TorqueBudgetReport& r, const ReversalScenario& sc) {
  return {{"t_tc_demand_nm", r.t_tc_demand},
          {"t_hyd_demand_nm", r.t_hyd_demand},
          {"t_static_avail_nm", r.t_static_avail},
          {"t_dynamic_avail_nm", r.t_dynamic_avail},
          {"margin_static_nm", r.margin_static},
          {"margin_dynamic_nm", r.margin_dynamic},
          {"verdict", verdict_name(r.verdict)},
          {"scenario",
           {{"v_back_m_s", sc.v_back},
            {"omega_engine_rad_s", sc.omega_engine},
            {"assume_max_hydraulics", sc.assume_max_hydraulics},
            {"reversal_time_s", sc.reversal_time},
            {"marginal_band", sc.marginal_band}}}};
}

inline int cmd_simulate(const std::string& layout_path, const std::string& scenario_path,
                        const std::string& out_flag, std::ostream& log) {
  MachineLayout layout;
  Scenario scenario;
  try {
    layout = config::load_layout(layout_path);
    scenario = config::load_scenario(scenario_path).resolved(layout);
    scenario.validate(layout);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }

  const std::string out = ensure_out_dir(out_flag);

  Trace trace = run_cycle(layout, scenario);
  csv::write_trace_file(out + "/trace.csv", trace);

  CycleMetrics m = cycle_metrics(trace);
  std::ofstream mos(out + "/metrics.json", std::ios::binary);
  mos << metrics_to_json(m).dump(2) << "\n";

  log << "trace: " << out << "/trace.csv (" << trace.rows.size() << " rows)\n";
  log << "metrics: " << metrics_to_json(m).dump() << "\n";
  return m.stall_events > 0 ? kStall : kOk;
}

struct BenchOptions {
  double accel = 0.0;          // rad/s^2; 0 = derive from reversal_time
  double reversal_time = 2.0;  // s
  double start_rpm = 0.0;      // 0 = low idle
  double end_rpm = 0.0;        // 0 = high idle
  int samples = 200;
};

inline BenchRun make_bench_run(const EngineSpec& engine, const BenchOptions& opt) {
  BenchRun run;
  run.accel = opt.accel > 0.0 ? opt.accel : reversal_accel_rate(engine, opt.reversal_time);
  run.omega_start = opt.start_rpm > 0.0 ? units::rpm_to_rad_s(opt.start_rpm) : engine.low_idle;
  run.omega_end = opt.end_rpm > 0.0 ? units::rpm_to_rad_s(opt.end_rpm) : engine.high_idle;
  run.samples = opt.samples;
  return run;
}

inline int cmd_bench(const std::string& layout_path, const BenchOptions& opt,
                     const std::string& out_flag, std::ostream& log) {
  MachineLayout layout;
  try {
    layout = config::load_layout(layout_path);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }

  const std::string out = ensure_out_dir(out_flag);
  try {
    BenchRun run = make_bench_run(layout.engine, opt);
    DynamicCurve curve = dynamic_torque_curve(layout.engine, run);
    write_curve_files(out + "/dynamic_curve.csv", curve, engine_spec_hash(layout.engine));
    log << "curve: " << out << "/dynamic_curve.csv (accel " << csv::format_double(curve.accel)
        << " rad/s2, " << curve.torque.size() << " samples)\n";
  } catch (const BenchAbort& e) {
    log << "error: " << e.what() << "\n";
    return kBenchAbort;
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }
  return kOk;
}

inline int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return kOk;
    case Verdict::Marginal: return kMarginal;
    case Verdict::Infeasible: return kInfeasible;
  }
  return kOk;
}

// Fast path: never launches a full simulation. The dynamic curve comes from a
// prior bench file (provenance-checked) or an in-process bench run.
inline int cmd_screen(const std::string& layout_path, const std::string& scenario_path,
                      const std::string& curve_path, bool auto_bench,
                      const std::string& out_flag, std::ostream& log) {
  MachineLayout layout;
  Scenario scenario;
  try {
    layout = config::load_layout(layout_path);
    scenario = config::load_scenario(scenario_path).resolved(layout);
    scenario.validate(layout);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }

  DynamicCurve curve;
  const std::uint64_t want_hash = engine_spec_hash(layout.engine);
  if (!curve_path.empty()) {
    try {
      LoadedCurve lc = read_curve_files(curve_path);
      if (lc.engine_hash != want_hash) {
        log << "error: curve " << curve_path
            << " was benched on a different engine; run a matching bench\n";
        return kNoCurve;
      }
      curve = lc.curve;
    } catch (const SpecError& e) {
      log << "error: " << e.what() << "\n";
      return kNoCurve;
    }
  } else if (auto_bench) {
    BenchOptions opt;
    opt.reversal_time = scenario.reversal.reversal_time;
    try {
      curve = dynamic_torque_curve(layout.engine, make_bench_run(layout.engine, opt));
    } catch (const BenchAbort& e) {
      log << "error: " << e.what() << "\n";
      return kBenchAbort;
    }
  } else {
    log << "error: no dynamic curve given and auto-bench disabled\n";
    return kNoCurve;
  }

  TorqueBudgetReport report;
  try {
    report = torque_budget_verdict(layout, scenario.reversal, curve);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kNoCurve;
  }

  const std::string out = ensure_out_dir(out_flag);
  nlohmann::json j = report_to_json(report, scenario.reversal);
  std::ofstream os(out + "/screen_report.json", std::ios::binary);
  os << j.dump(2) << "\n";
  log << j.dump() << "\n";
  return exit_code_for(report.verdict);
}

struct SweepRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
};

inline std::optional<SweepRange> parse_range(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos) return std::nullopt;
  SweepRange r;
  r.name = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  auto c1 = rest.find(':');
  auto c2 = rest.find(':', c1 == std::string::npos ? std::string::npos : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) return std::nullopt;
  try {
    r.lo = std::stod(rest.substr(0, c1));
    r.hi = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
    r.n = std::stoi(rest.substr(c2 + 1));
  } catch (...) {
    return std::nullopt;
  }
  return r;
}

struct SweepPoint {
  std::vector<double> values;
  TorqueBudgetReport report;
  CycleMetrics metrics;
  bool agree = true;
};

inline void apply_sweep_value(MachineLayout& layout, Scenario& scenario, const std::string& name,
                              double v) {
  if (name == "p_relief")
    layout.pump.p_relief = v;
  else if (name == "converter_scale")
    layout.converter.scale = v;
  else if (name == "tau_pump")
    layout.pump.tau_pump = v;
  else if (name == "reversal_time") {
    scenario.reversal.reversal_time = v;
    scenario.op.reversal_time = v;
  } else
    throw SpecError("sweep." + name, "unknown sweep parameter");
}

// Screen verdict plus full-simulation stall outcome for every grid point.
// Isolated simulation instances fan out across the available parallelism.
inline int cmd_sweep(const std::string& layout_path, const std::string& scenario_path,
                     const std::vector<std::string>& range_args, int max_grid, int jobs,
                     const std::string& out_flag, std::ostream& log) {
  MachineLayout base_layout;
  Scenario base_scenario;
  try {
    base_layout = config::load_layout(layout_path);
    base_scenario = config::load_scenario(scenario_path).resolved(base_layout);
    base_scenario.validate(base_layout);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }

  std::vector<SweepRange> ranges;
  for (const auto& arg : range_args) {
    auto r = parse_range(arg);
    if (!r || r->n < 1 || !(r->hi >= r->lo)) {
      log << "error: bad range '" << arg << "' (want name=lo:hi:n)\n";
      return kBadGrid;
    }
    ranges.push_back(*r);
  }
  if (ranges.empty()) {
    log << "error: empty parameter grid\n";
    return kBadGrid;
  }
  for (const auto& r : ranges) {
    MachineLayout probe_l = base_layout;
    Scenario probe_s = base_scenario;
    try {
      apply_sweep_value(probe_l, probe_s, r.name, r.lo);
    } catch (const SpecError& e) {
      log << "error: " << e.what() << "\n";
      return kBadGrid;
    }
  }

  long long total = 1;
  for (const auto& r : ranges) total *= r.n;
  if (total < 1 || total > max_grid) {
    log << "error: grid of " << total << " points exceeds cap " << max_grid << "\n";
    return kBadGrid;
  }

  auto grid_values = [&](const SweepRange& r, int i) {
    return r.n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (r.n - 1);
  };

  std::vector<SweepPoint> points(static_cast<std::size_t>(total));
  auto eval_point = [&](long long idx) {
    SweepPoint pt;
    MachineLayout layout = base_layout;
    Scenario scenario = base_scenario;
    long long rem = idx;
    for (const auto& r : ranges) {
      int i = static_cast<int>(rem % r.n);
      rem /= r.n;
      double v = grid_values(r, i);
      pt.values.push_back(v);
      apply_sweep_value(layout, scenario, r.name, v);
    }
    BenchOptions opt;
    opt.reversal_time = scenario.reversal.reversal_time;
    DynamicCurve curve = dynamic_torque_curve(layout.engine, make_bench_run(layout.engine, opt));
    pt.report = torque_budget_verdict(layout, scenario.reversal, curve);
    Trace trace = run_cycle(layout, scenario);
    pt.metrics = cycle_metrics(trace);
    const bool stalled = pt.metrics.stall_events > 0;
    if (pt.report.verdict == Verdict::Infeasible) pt.agree = stalled;
    if (pt.report.verdict == Verdict::Feasible) pt.agree = !stalled;
    return pt;
  };

  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  std::atomic<long long> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      long long idx = next.fetch_add(1);
      if (idx >= total) return;
      try {
        points[static_cast<std::size_t>(idx)] = eval_point(idx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (int i = 0; i < std::min<long long>(jobs, total); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  const std::string out = ensure_out_dir(out_flag);
  std::ofstream os(out + "/sweep.csv", std::ios::binary);
  for (const auto& r : ranges) os << r.name << ',';
  os << "verdict,t_tc_demand_nm,t_hyd_demand_nm,t_static_avail_nm,t_dynamic_avail_nm,"
        "stall_events,min_omega_rad_s,cycle_complete,agree\n";
  long long agree_count = 0;
  long long infeasible_no_stall = 0, feasible_stall = 0;
  for (const auto& pt : points) {
    for (double v : pt.values) os << csv::format_double(v) << ',';
    os << verdict_name(pt.report.verdict) << ',' << csv::format_double(pt.report.t_tc_demand)
       << ',' << csv::format_double(pt.report.t_hyd_demand) << ','
       << csv::format_double(pt.report.t_static_avail) << ','
       << csv::format_double(pt.report.t_dynamic_avail) << ',' << pt.metrics.stall_events << ','
       << csv::format_double(pt.metrics.min_omega) << ',' << (pt.metrics.complete ? 1 : 0) << ','
       << (pt.agree ? 1 : 0) << '\n';
    if (pt.agree) ++agree_count;
    if (pt.report.verdict == Verdict::Infeasible && pt.metrics.stall_events == 0)
      ++infeasible_no_stall;
    if (pt.report.verdict == Verdict::Feasible && pt.metrics.stall_events > 0) ++feasible_stall;
  }

  nlohmann::json summary = {
      {"points", total},
      {"agree", agree_count},
      {"agreement_rate", static_cast<double>(agree_count) / static_cast<double>(total)},
      {"infeasible_without_stall", infeasible_no_stall},
      {"feasible_with_stall", feasible_stall}};
  std::ofstream ss(out + "/sweep_summary.json", std::ios::binary);
  ss << summary.dump(2) << "\n";
  log << summary.dump() << "\n";
  return kOk;
}

inline int run_cli(std::vector<std::string> args, std::ostream& log = std::cout) {
  CLI::App cli{"wheel loader dynamic simulation and layout screening"};
  cli.require_subcommand(1);

  std::string layout_path, scenario_path, out_dir, curve_path;
  bool no_auto_bench = false;
  BenchOptions bench_opt;
  std::vector<std::string> ranges;
  int max_grid = 10000;
  int jobs = 0;

  auto add_layout = [&](CLI::App* cmd) {
    cmd->add_option("--layout", layout_path, "machine layout file")->required();
  };
  auto add_scenario = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "scenario file")->required();
  };
  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory (or LOADSIM_OUT)");
  };

  CLI::App* sim = cli.add_subcommand("simulate", "run the full loading cycle");
  add_layout(sim);
  add_scenario(sim);
  add_out(sim);

  CLI::App* screen = cli.add_subcommand("screen", "reversal-phase torque budget check");
  add_layout(screen);
  add_scenario(screen);
  add_out(screen);
  screen->add_option("--curve", curve_path, "dynamic torque curve CSV from a bench run");
  screen->add_flag("--no-auto-bench", no_auto_bench, "fail instead of benching in-process");

  CLI::App* bench = cli.add_subcommand("bench", "forced run-up dynamic torque curve");
  add_layout(bench);
  add_out(bench);
  bench->add_option("--accel", bench_opt.accel, "forced acceleration rad/s^2");
  bench->add_option("--reversal-time", bench_opt.reversal_time,
                    "derive acceleration from this reversal duration [s]");
  bench->add_option("--start-rpm", bench_opt.start_rpm, "run-up start (default low idle)");
  bench->add_option("--end-rpm", bench_opt.end_rpm, "run-up end (default high idle)");
  bench->add_option("--samples", bench_opt.samples, "curve sample count");

  CLI::App* sweep = cli.add_subcommand("sweep", "screen vs simulate over a layout grid");
  add_layout(sweep);
  add_scenario(sweep);
  add_out(sweep);
  sweep->add_option("--range", ranges,
                    "swept parameter, name=lo:hi:n (p_relief, converter_scale, tau_pump, "
                    "reversal_time)");
  sweep->add_option("--max-grid", max_grid, "grid size cap");
  sweep->add_option("--jobs", jobs, "parallel simulations (default: hardware)");

  std::vector<const char*> argv;
  argv.push_back("loadsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    cli.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  try {
    if (sim->parsed()) return cmd_simulate(layout_path, scenario_path, out_dir, log);
    if (screen->parsed())
      return cmd_screen(layout_path, scenario_path, curve_path, !no_auto_bench, out_dir, log);
    if (bench->parsed()) return cmd_bench(layout_path, bench_opt, out_dir, log);
    if (sweep->parsed())
      return cmd_sweep(layout_path, scenario_path, ranges, max_grid, jobs, out_dir, log);
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  } catch (const SimHalt& e) {
    log << "error: " << e.what() << "\n";
    return kBadSpec;
  }
  return kOk;
}

}  // namespace loadsim::app
