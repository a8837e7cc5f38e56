// Acceptance gate: one PASS/FAIL line per criterion, with the supporting numbers.
//
// Exit status is 0 when every failing criterion is listed in --expected-fail;
// those are still reported as FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "CLI11.hpp"
#include "mgfreq/io.hpp"
#include "mgfreq/sim.hpp"

namespace fs = std::filesystem;
namespace odeint = boost::numeric::odeint;
using namespace mgfreq;

namespace {

struct Verdict {
  int id;
  bool pass;
  std::string summary;
  std::vector<std::string> details;
};

constexpr int kSeeds = 5;
const std::array<ScenarioKind, 3> kKinds{ScenarioKind::kStep, ScenarioKind::kModerate, ScenarioKind::kRapid};
const std::array<ControllerKind, 3> kControllers{ControllerKind::kMpc, ControllerKind::kPiAll, ControllerKind::kPiDuBess};

struct RunRecord {
  ScenarioTrace trace;
  RunMetrics metrics;
  double seconds = 0.0;
};

struct Sweep {
  // [kind][seed][controller]
  std::map<ScenarioKind, std::vector<std::map<ControllerKind, RunRecord>>> runs;
  double worst_kkt = 0.0;
  std::size_t qp_count = 0;
};

Sweep run_sweep(const SimConfig& cfg, const fs::path& out) {
  Sweep s;
  RunHooks hooks;
  hooks.on_mpc_step = [&s](std::size_t, const MpcStepResult& r) {
    s.worst_kkt = std::max(s.worst_kkt, kkt_residuals(r.qp, r.qp_solution.x, r.qp_solution.multipliers).max());
    ++s.qp_count;
  };
  for (auto kind : kKinds) {
    auto& per_seed = s.runs[kind];
    per_seed.resize(kSeeds);
    for (int i = 0; i < kSeeds; ++i) {
      const auto seed = static_cast<std::uint64_t>(i + 1);
      for (auto c : kControllers) {
        ProfileOptions po = cfg.profiles;
        po.ts = cfg.mpc.ts;
        const Scenario sc = make_scenario(kind, c, seed, 180.0, po);
        RunRecord rr;
        const auto t0 = std::chrono::steady_clock::now();
        rr.trace = run_scenario(sc, cfg, hooks);
        rr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rr.metrics = compute_metrics(rr.trace);
        write_trace_csv(rr.trace, (out / fmt::format("{}_{}_seed{}_trace.csv", to_string(kind), to_string(c), seed)).string());
        per_seed[static_cast<std::size_t>(i)][c] = std::move(rr);
      }
    }
  }
  return s;
}

Verdict criterion_ordering(const Sweep& s) {
  Verdict v{1, true, "", {}};
  int order_std_fail = 0, order_max_fail = 0, ratio_fail = 0, runtime_fail = 0, aborted = 0, total = 0;
  double worst_ratio = 0.0, slowest = 0.0;
  for (const auto& [kind, seeds] : s.runs) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& m = seeds[i].at(ControllerKind::kMpc).metrics;
      const auto& pd = seeds[i].at(ControllerKind::kPiAll).metrics;
      const auto& pi = seeds[i].at(ControllerKind::kPiDuBess).metrics;
      ++total;
      for (const auto& [c, rr] : seeds[i]) {
        slowest = std::max(slowest, rr.seconds);
        if (rr.seconds >= 5.0) ++runtime_fail;
        if (rr.trace.aborted) ++aborted;
      }
      const bool std_ok = m.freq_std < pd.freq_std && pd.freq_std < pi.freq_std;
      const bool max_ok = m.max_abs_freq_dev < pd.max_abs_freq_dev && pd.max_abs_freq_dev < pi.max_abs_freq_dev;
      const double ratio = m.max_abs_freq_dev / pd.max_abs_freq_dev;
      worst_ratio = std::max(worst_ratio, ratio);
      if (!std_ok) ++order_std_fail;
      if (!max_ok) ++order_max_fail;
      if (ratio > 0.55) ++ratio_fail;
      v.details.push_back(fmt::format(
          "{:<8} seed {}  std {:.4e} / {:.4e} / {:.4e}  max {:.4e} / {:.4e} / {:.4e}  ratio {:.4f}{}{}",
          to_string(kind), i + 1, m.freq_std, pd.freq_std, pi.freq_std, m.max_abs_freq_dev, pd.max_abs_freq_dev,
          pi.max_abs_freq_dev, ratio, std_ok ? "" : "  [std order]", max_ok ? "" : "  [max order]"));
    }
  }
  v.pass = order_std_fail == 0 && order_max_fail == 0 && ratio_fail == 0 && runtime_fail == 0 && aborted == 0;
  v.summary = fmt::format(
      "controller ordering MPC < PI+deloading < PI over {} runs: std order broken in {}, max order broken in {}; "
      "worst MPC/PI+deloading max ratio {:.4f} (limit 0.55, {} over); slowest run {:.3f} s; aborted {}",
      total, order_std_fail, order_max_fail, worst_ratio, ratio_fail, slowest, aborted);
  return v;
}

Verdict criterion_amplification(const Sweep& s) {
  auto mean_ratio = [&](ScenarioKind k) {
    double sum = 0.0;
    for (const auto& seed : s.runs.at(k))
      sum += seed.at(ControllerKind::kPiAll).metrics.freq_std / seed.at(ControllerKind::kMpc).metrics.freq_std;
    return sum / static_cast<double>(s.runs.at(k).size());
  };
  const double mod = mean_ratio(ScenarioKind::kModerate);
  const double rap = mean_ratio(ScenarioKind::kRapid);
  return {2, rap >= mod,
          fmt::format("std(PI+deloading)/std(MPC), seed-averaged: rapid {:.4f} vs moderate {:.4f}", rap, mod), {}};
}

using OdeState = std::vector<double>;

Vector integrate_ode(const PlantModel& m, const Vector& x0, const Vector& forcing, double ts) {
  OdeState x(x0.data(), x0.data() + x0.size());
  auto rhs = [&](const OdeState& st, OdeState& ds, double) {
    const Eigen::Map<const Vector> sv(st.data(), static_cast<Eigen::Index>(st.size()));
    const Vector r = m.ac * sv + forcing;
    ds.assign(r.data(), r.data() + r.size());
  };
  odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<OdeState>>(1e-14, 1e-14), rhs, x, 0.0,
                             ts, 1e-4);
  return Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

Verdict criterion_discretization(const SimConfig& cfg) {
  const PlantModel m = build_plant_model(cfg.microgrid, cfg.mpc.ts);
  const Vector zero_x = Vector::Zero(kNumStates);
  double err = 0.0;
  for (int i = 0; i < kNumStates; ++i) {
    err = std::max(err, (integrate_ode(m, Vector::Unit(kNumStates, i), Vector::Zero(kNumStates), m.ts) - m.a.col(i))
                            .cwiseAbs()
                            .maxCoeff());
  }
  for (int j = 0; j < kNumUnits; ++j)
    err = std::max(err, (integrate_ode(m, zero_x, m.bc.col(j), m.ts) - m.b.col(j)).cwiseAbs().maxCoeff());
  for (int j = 0; j < kNumDisturbances; ++j)
    err = std::max(err, (integrate_ode(m, zero_x, m.dc.col(j), m.ts) - m.d.col(j)).cwiseAbs().maxCoeff());
  return {3, err <= 1e-7, fmt::format("max |ZOH - adaptive ODE| over A, B, D columns = {:.3e} (limit 1e-7)", err), {}};
}

Vector enumerate_qp(const QpProblem& p) {
  const int n = static_cast<int>(p.h.rows());
  const int q = static_cast<int>(p.cu.rows());
  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << q); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < q; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    if (k > n) continue;
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = p.h;
    rhs.head(n) = -p.f;
    for (int r = 0; r < k; ++r) {
      kkt.block(0, n + r, n, 1) = -p.cu.row(act[static_cast<std::size_t>(r)]).transpose();
      kkt.block(n + r, 0, 1, n) = p.cu.row(act[static_cast<std::size_t>(r)]);
      rhs(n + r) = p.b(act[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vector z = lu.solve(rhs);
    const Vector x = z.head(n);
    if (k > 0 && z.tail(k).minCoeff() < -1e-10) continue;
    if (q > 0 && (p.cu * x - p.b).minCoeff() < -1e-10) continue;
    const double obj = 0.5 * x.dot(p.h * x) + p.f.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

Verdict criterion_qp(const Sweep& s) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> dn(1, 4), dq(0, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  double worst = 0.0;
  int mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dn(rng), q = dq(rng);
    QpProblem p;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    p.h = a * a.transpose() + 0.1 * Matrix::Identity(n, n);
    p.f.resize(n);
    for (int i = 0; i < n; ++i) p.f(i) = 3.0 * g(rng);
    p.cu.resize(q, n);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < n; ++j) p.cu(i, j) = g(rng);
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0(i) = g(rng);
    p.b = p.cu * x0;
    for (int i = 0; i < q; ++i) p.b(i) -= slack(rng);
    const Vector got = solve_qp(p).x;
    const Vector want = enumerate_qp(p);
    const double e = want.size() == got.size() ? (got - want).cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
    worst = std::max(worst, e);
    if (e > 1e-6) ++mismatched;
  }
  const bool pass = mismatched == 0 && s.worst_kkt <= 1e-8;
  return {4, pass,
          fmt::format("200 random QPs vs enumeration: worst {:.2e} (limit 1e-6), {} mismatched; "
                      "worst KKT residual over {} MPC QPs in the sweep {:.2e} (limit 1e-8)",
                      worst, mismatched, s.qp_count, s.worst_kkt),
          {}};
}

Verdict criterion_unconstrained_equivalence(SimConfig cfg) {
  cfg.mpc.constraints_enabled = false;
  const PlantModel model = build_plant_model(cfg.microgrid, cfg.mpc.ts);
  const Matrix k = mpc_gain(build_prediction_matrices(model, cfg.mpc), cfg.mpc);
  double worst = 0.0;
  std::size_t steps = 0;
  RunHooks hooks;
  hooks.on_mpc_step = [&](std::size_t, const MpcStepResult& r) {
    worst = std::max(worst, (r.move_sequence - k * (-r.free_response)).cwiseAbs().maxCoeff());
    ++steps;
  };
  ProfileOptions po = cfg.profiles;
  run_scenario(make_scenario(ScenarioKind::kModerate, ControllerKind::kMpc, 1, 180.0, po), cfg, hooks);
  return {5, steps >= 900 && worst <= 1e-9,
          fmt::format("constraints disabled, {} steps: max |dU_qp - K(0 - Y_free)| = {:.2e} (limit 1e-9)", steps, worst),
          {}};
}

double settle_after(const ScenarioTrace& t, double t_step) {
  double last_out = t_step;
  for (const auto& r : t.records)
    if (std::abs(r.freq_dev) >= 1e-4) last_out = std::max(last_out, r.t);
  return last_out - t_step;
}

Verdict criterion_offset_free(const SimConfig& cfg) {
  constexpr double t_step = 10.0;
  std::map<ControllerKind, double> settle;
  for (auto c : kControllers) {
    Scenario sc;
    sc.name = "load_step";
    sc.profiles = constant_profiles(200.0, cfg.profiles);
    for (std::size_t k = 0; k < sc.profiles.size(); ++k)
      if (sc.profiles.t[k] >= t_step) sc.profiles.load_pu[k] = 0.1;
    sc.controller = c;
    settle[c] = settle_after(run_scenario(sc, cfg), t_step);
  }
  const double m = settle[ControllerKind::kMpc], pa = settle[ControllerKind::kPiAll], pd = settle[ControllerKind::kPiDuBess];
  return {6, m <= 60.0 && pa <= 120.0 && pd <= 120.0,
          fmt::format("0.1 p.u. load step, last sample with |df| >= 1e-4: MPC {:.1f} s (limit 60), "
                      "PI+deloading {:.1f} s, PI {:.1f} s (limit 120)",
                      m, pa, pd),
          {}};
}

Verdict criterion_estimator(const SimConfig& cfg) {
  const PlantModel model = build_plant_model(cfg.microgrid, cfg.mpc.ts);
  EstimatorState est = initial_estimator_state(cfg.estimator);
  StateVector x = StateVector::Zero();
  DisturbanceVector d = DisturbanceVector::Zero();
  d(kLoad) = 0.1;
  double converged_at = std::numeric_limits<double>::infinity();
  double late_innovation = 0.0;
  const int steps = 500;
  for (int k = 0; k <= steps; ++k) {
    est = estimator_step(est, ControlVector::Zero(), x(kFreq), model, cfg.estimator);
    const double t = k * cfg.mpc.ts;
    if (std::abs(est.d_hat - 0.1) <= 0.002) {
      if (!std::isfinite(converged_at)) converged_at = t;
    } else {
      converged_at = std::numeric_limits<double>::infinity();
    }
    if (k >= 250) late_innovation = std::max(late_innovation, std::abs(est.innovation));
    x = step_plant(model, x, ControlVector::Zero(), d);
  }
  return {7, converged_at <= 10.0 && late_innovation <= 1e-6,
          fmt::format("d_hat within 2% of 0.1 from t = {:.1f} s (limit 10 s); max |innovation| after 50 s = {:.2e} "
                      "(limit 1e-6)",
                      converged_at, late_innovation),
          {}};
}

Verdict criterion_constraints(const Sweep& s) {
  std::size_t violations = 0, runs = 0, rapid_mpc_binding = 0;
  for (const auto& [kind, seeds] : s.runs) {
    for (const auto& seed : seeds) {
      for (const auto& [c, rr] : seed) {
        violations += rr.metrics.constraint_violations;
        ++runs;
        if (kind == ScenarioKind::kRapid && c == ControllerKind::kMpc) rapid_mpc_binding += rr.metrics.renewable_binding_steps;
      }
    }
  }
  return {8, violations == 0 && rapid_mpc_binding > 0,
          fmt::format("{} violations > 1e-9 over {} runs; {} MPC steps with a binding wind/PV limit in the rapid sweep",
                      violations, runs, rapid_mpc_binding),
          {}};
}

Verdict criterion_physics(const SimConfig& cfg) {
  double cp_max = 0.0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 20; ++j) cp_max = std::max(cp_max, power_coefficient(cfg.wind, 0.5 + 0.2 * i, 1.5 * j));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> v(0.0, 25.0), g(0.0, 1200.0), ta(-10.0, 45.0), dl(0.0, 0.99);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const double d = dl(rng), vi = v(rng), gi = g(rng), ti = ta(rng);
    if (wind_available_power(vi, cfg.wind, d) > wind_mppt_power(vi, cfg.wind)) ++bad;
    if (pv_available_power(gi, ti, cfg.pv, d) > pv_mppt_power(gi, ti, cfg.pv)) ++bad;
  }
  return {9, cp_max <= 16.0 / 27.0 && bad == 0,
          fmt::format("max Cp on 100x20 grid {:.4f} (Betz {:.4f}); deloaded > MPPT in {} of 2000 checks", cp_max,
                      16.0 / 27.0, bad),
          {}};
}

Verdict criterion_determinism(SimConfig cfg, const fs::path& out) {
  cfg.measurement_noise_std = 1e-4;
  bool same = true;
  std::vector<std::string> details;
  for (auto c : kControllers) {
    const Scenario sc = make_scenario(ScenarioKind::kRapid, c, 11, 180.0, cfg.profiles);
    const fs::path a = out / fmt::format("determinism_{}_a.csv", to_string(c));
    const fs::path b = out / fmt::format("determinism_{}_b.csv", to_string(c));
    write_trace_csv(run_scenario(sc, cfg), a.string());
    write_trace_csv(run_scenario(sc, cfg), b.string());
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    if (sa != sb || sa.empty()) {
      same = false;
      details.push_back(fmt::format("{} traces differ", to_string(c)));
    }
  }
  return {10, same, "repeated rapid runs (noise on, seed 11) give byte-identical trace files for all controllers", details};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mgfreq acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> expected_fail;
  bool verbose = true;
  app.add_option("--out", out, "Directory for sweep traces");
  app.add_option("--expected-fail", expected_fail, "Criteria known to be unattainable (still reported as FAIL)");
  app.add_flag("!--quiet", verbose, "Omit per-run detail lines");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  const SimConfig cfg;
  const Sweep sweep = run_sweep(cfg, out);
  std::vector<Verdict> verdicts{
      criterion_ordering(sweep),         criterion_amplification(sweep), criterion_discretization(cfg),
      criterion_qp(sweep),               criterion_unconstrained_equivalence(cfg), criterion_offset_free(cfg),
      criterion_estimator(cfg),          criterion_constraints(sweep),   criterion_physics(cfg),
      criterion_determinism(cfg, out)};

  const std::set<int> allowed(expected_fail.begin(), expected_fail.end());
  int unexpected = 0;
  for (const auto& v : verdicts) {
    const bool known = !v.pass && allowed.count(v.id) > 0;
    std::cout << fmt::format("criterion {:>2}: {}{} - {}\n", v.id, v.pass ? "PASS" : "FAIL", known ? " (expected)" : "",
                             v.summary);
    if (verbose || !v.pass)
      for (const auto& d : v.details) std::cout << "    " << d << '\n';
    if (!v.pass && !known) ++unexpected;
  }
  const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  std::cout << fmt::format("{}/{} criteria pass; {} unexpected failure(s)\n", passed, verdicts.size(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
