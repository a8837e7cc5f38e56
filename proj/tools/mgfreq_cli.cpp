// mgfreq: closed-loop secondary frequency control scenarios from the command line.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgfreq/io.hpp"
#include "mgfreq/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string scenario = "step";
  std::string controller = "mpc";
  std::uint64_t seed = 1;
  std::string profiles;
  std::string out = "out";
  std::string config;
  double duration = 180.0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_controller, bool with_scenario = true) {
  if (with_scenario) {
    cmd->add_option("--scenario", o.scenario, "Scenario kind: step, moderate or rapid")
        ->check(CLI::IsMember({"step", "moderate", "rapid"}));
  }
  if (with_controller) {
    cmd->add_option("--controller", o.controller, "Controller: mpc, pi_all or pi_dubess")
        ->check(CLI::IsMember({"mpc", "pi_all", "pi_dubess"}));
  }
  cmd->add_option("--seed", o.seed, "Seed for generated profiles");
  cmd->add_option("--profiles", o.profiles, "Profile CSV (t,load_pu,v_w1,v_w2,g_eff1,g_eff2,t_amb)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--config", o.config, "JSON config file; missing keys keep defaults");
  cmd->add_option("--duration", o.duration, "Duration of generated profiles, s");
}

mgfreq::SimConfig load_config(const CommonOptions& o) {
  return o.config.empty() ? mgfreq::SimConfig{} : mgfreq::load_sim_config(o.config);
}

mgfreq::Scenario make(const CommonOptions& o, const std::string& kind, mgfreq::ControllerKind controller,
                      std::uint64_t seed, const mgfreq::SimConfig& cfg) {
  mgfreq::Scenario s;
  mgfreq::ProfileOptions popt = cfg.profiles;
  popt.ts = cfg.mpc.ts;
  if (!o.profiles.empty() && fs::exists(o.profiles)) {
    s.profiles = mgfreq::read_profiles_csv(o.profiles);
    s.name = fs::path(o.profiles).stem().string();
  } else {
    if (!o.profiles.empty()) std::cerr << fmt::format("profile file '{}' not found; generating profiles\n", o.profiles);
    s.profiles = mgfreq::generate_profiles(mgfreq::parse_scenario_kind(kind), seed, o.duration, popt);
    s.name = kind;
  }
  s.controller = controller;
  s.seed = seed;
  return s;
}

struct RunOutput {
  mgfreq::ScenarioTrace trace;
  mgfreq::RunMetrics metrics;
  double seconds;
};

RunOutput run_one(const mgfreq::Scenario& s, const mgfreq::SimConfig& cfg, const fs::path& dir, bool write_files) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput r{mgfreq::run_scenario(s, cfg), {}, 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.metrics = mgfreq::compute_metrics(r.trace);
  if (write_files) {
    fs::create_directories(dir);
    const std::string stem = fmt::format("{}_{}_seed{}", s.name, mgfreq::to_string(s.controller), s.seed);
    mgfreq::write_trace_csv(r.trace, (dir / (stem + "_trace.csv")).string());
    std::ofstream(dir / (stem + "_metrics.json")) << mgfreq::metrics_json(r.trace, r.metrics) << '\n';
  }
  if (r.trace.aborted) std::cerr << "run aborted: " << r.trace.abort_reason << '\n';
  return r;
}

const std::vector<mgfreq::ControllerKind> kAllControllers{mgfreq::ControllerKind::kMpc, mgfreq::ControllerKind::kPiAll,
                                                          mgfreq::ControllerKind::kPiDuBess};

std::string table_label(mgfreq::ControllerKind c) {
  switch (c) {
    case mgfreq::ControllerKind::kMpc:
      return "MPC";
    case mgfreq::ControllerKind::kPiAll:
      return "PI+deloading";
    case mgfreq::ControllerKind::kPiDuBess:
      return "PI";
  }
  return "?";
}

int cmd_run(const CommonOptions& o) {
  const auto cfg = load_config(o);
  const auto s = make(o, o.scenario, mgfreq::parse_controller_kind(o.controller), o.seed, cfg);
  const auto r = run_one(s, cfg, o.out, true);
  std::cout << mgfreq::metrics_json(r.trace, r.metrics) << '\n';
  return r.trace.aborted ? 2 : 0;
}

int cmd_compare(const CommonOptions& o) {
  const auto cfg = load_config(o);
  json rows = json::array();
  std::cout << fmt::format("{:<10} {:<14} {:>14} {:>14}\n", "scenario", "controller", "std (p.u.)", "max dev (p.u.)");
  for (auto c : kAllControllers) {
    const auto s = make(o, o.scenario, c, o.seed, cfg);
    const auto r = run_one(s, cfg, o.out, true);
    std::cout << fmt::format("{:<10} {:<14} {:>14.4e} {:>14.4e}\n", s.name, table_label(c), r.metrics.freq_std,
                             r.metrics.max_abs_freq_dev);
    rows.push_back(json::parse(mgfreq::metrics_json(r.trace, r.metrics)));
  }
  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "comparison.json") << rows.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& o, int seeds, const std::vector<std::string>& kinds, bool write_traces) {
  const auto cfg = load_config(o);
  json rows = json::array();
  std::cout << fmt::format("{:<10} {:>6} {:<14} {:>14} {:>14} {:>8}\n", "scenario", "seed", "controller", "std (p.u.)",
                           "max dev (p.u.)", "viol");
  for (const auto& kind : kinds) {
    for (int i = 0; i < seeds; ++i) {
      const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
      for (auto c : kAllControllers) {
        const auto s = make(o, kind, c, seed, cfg);
        const auto r = run_one(s, cfg, o.out, write_traces);
        std::cout << fmt::format("{:<10} {:>6} {:<14} {:>14.4e} {:>14.4e} {:>8}\n", s.name, seed, table_label(c),
                                 r.metrics.freq_std, r.metrics.max_abs_freq_dev, r.metrics.constraint_violations);
        rows.push_back(json::parse(mgfreq::metrics_json(r.trace, r.metrics)));
      }
    }
  }
  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "sweep.json") << rows.dump(2) << '\n';
  return 0;
}

int cmd_tune_pi(const CommonOptions& o, double resolution) {
  const auto cfg = load_config(o);
  mgfreq::PiTuningOptions opt;
  opt.resolution = resolution;
  const auto best = mgfreq::tune_pi(cfg, opt);
  json j{{"kp", best.kp}, {"ki", best.ki}, {"itae", best.itae}, {"evaluated", best.evaluated},
         {"load_step", opt.load_step}, {"duration", opt.duration}, {"resolution", opt.resolution}};
  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "pi_tuning.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secondary frequency control of an islanded wind/PV/diesel/battery microgrid"};
  app.require_subcommand(1);

  CommonOptions run_opt;
  auto* run = app.add_subcommand("run", "Run one scenario with one controller");
  add_common(run, run_opt, true);

  CommonOptions cmp_opt;
  auto* compare = app.add_subcommand("compare", "Run all three controllers on one scenario");
  add_common(compare, cmp_opt, false);

  CommonOptions sweep_opt;
  int seeds = 5;
  bool sweep_traces = false;
  std::vector<std::string> kinds{"step", "moderate", "rapid"};
  auto* sweep = app.add_subcommand("sweep", "Run seeds x scenario kinds x controllers");
  add_common(sweep, sweep_opt, false, false);
  sweep->add_option("--seeds", seeds, "Number of consecutive seeds starting at --seed")->check(CLI::PositiveNumber);
  sweep->add_option("--kinds", kinds, "Scenario kinds to sweep");
  sweep->add_flag("--traces", sweep_traces, "Also write per-run trace CSVs");

  CommonOptions tune_opt;
  double resolution = 0.05;
  auto* tune = app.add_subcommand("tune-pi", "Grid-search the PI gains by ITAE on a 0.05 p.u. load step");
  add_common(tune, tune_opt, false, false);
  tune->add_option("--resolution", resolution, "Grid spacing for kp and ki")->check(CLI::PositiveNumber);

  CommonOptions cfg_opt;
  auto* show_config = app.add_subcommand("config", "Print the effective configuration as JSON");
  show_config->add_option("--config", cfg_opt.config, "JSON config file to merge over the defaults");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opt);
    if (*compare) return cmd_compare(cmp_opt);
    if (*sweep) return cmd_sweep(sweep_opt, seeds, kinds, sweep_traces);
    if (*tune) return cmd_tune_pi(tune_opt, resolution);
    if (*show_config) {
      std::cout << mgfreq::sim_config_json(load_config(cfg_opt)) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
