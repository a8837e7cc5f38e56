#include "mgfreq/sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "mpc") return ControllerKind::kMpc;
  if (name == "pi_all") return ControllerKind::kPiAll;
  if (name == "pi_dubess") return ControllerKind::kPiDuBess;
  throw std::invalid_argument(fmt::format("unknown controller '{}' (expected mpc, pi_all or pi_dubess)", name));
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kMpc:
      return "mpc";
    case ControllerKind::kPiAll:
      return "pi_all";
    case ControllerKind::kPiDuBess:
      return "pi_dubess";
  }
  return "unknown";
}

Scenario make_scenario(ScenarioKind kind, ControllerKind controller, std::uint64_t seed, double duration,
                       const ProfileOptions& options) {
  Scenario s;
  s.name = to_string(kind);
  s.profiles = generate_profiles(kind, seed, duration, options);
  s.controller = controller;
  s.seed = seed;
  return s;
}

namespace {

constexpr std::array<int, kNumUnits> kOutputStates{kPv1Power, kPv2Power, kWt1Power, kWt2Power, kDuPower, kBessPower};

/// Renewable output available at sample k, kW: deloaded when the controller
/// uses renewable reserve, MPPT otherwise.
AvailablePower renewable_power(const ProfileSet& prof, std::size_t k, const SimConfig& cfg, bool deloaded) {
  const double d = deloaded ? cfg.deload : 0.0;
  return AvailablePower{
      pv_available_power(prof.g_eff1[k], prof.t_amb[k], cfg.pv, d),
      pv_available_power(prof.g_eff2[k], prof.t_amb[k], cfg.pv, d),
      wind_available_power(prof.v_w1[k], cfg.wind, d),
      wind_available_power(prof.v_w2[k], cfg.wind, d),
  };
}

}  // namespace

ScenarioTrace run_scenario(const Scenario& scenario, const SimConfig& cfg, const RunHooks& hooks) {
  const ProfileSet& prof = scenario.profiles;
  prof.validate();
  const double ts = prof.ts;
  if (std::abs(cfg.mpc.ts - ts) > 1e-9) {
    throw std::invalid_argument(
        fmt::format("run_scenario: profile Ts {} does not match controller Ts {}", ts, cfg.mpc.ts));
  }
  cfg.estimator.validate();
  cfg.wind.validate();
  cfg.pv.validate();

  const PlantModel model = build_plant_model(cfg.microgrid, ts);
  require_detectable(model);

  const bool is_mpc = scenario.controller == ControllerKind::kMpc;
  const bool deloaded = scenario.controller != ControllerKind::kPiDuBess;

  PredictionMatrices pred;
  if (is_mpc) pred = build_prediction_matrices(model, cfg.mpc);
  const PiConfig pi_cfg = make_pi_config(
      scenario.controller == ControllerKind::kPiAll ? PiVariant::kAllUnits : PiVariant::kDieselBatteryOnly,
      cfg.microgrid, cfg.pi_kp, cfg.pi_ki);
  if (!is_mpc) pi_cfg.validate();

  std::seed_seq noise_seed{static_cast<std::uint32_t>(scenario.seed), static_cast<std::uint32_t>(scenario.seed >> 32),
                           0x6e6fu};
  std::mt19937_64 noise_rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  ScenarioTrace trace;
  trace.scenario = scenario.name;
  trace.controller = scenario.controller;
  trace.seed = scenario.seed;
  trace.ts = ts;
  trace.records.reserve(prof.size());

  const AvailablePower schedule = renewable_power(prof, 0, cfg, deloaded);
  const double base = cfg.microgrid.s_base;
  const double load0 = prof.load_pu[0];

  StateVector x = StateVector::Zero();
  EstimatorState est = initial_estimator_state(cfg.estimator);
  PiState pi_state;
  UnitArray u_prev{};
  DisturbanceVector d_prev = DisturbanceVector::Zero();

  const std::size_t last = prof.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const AvailablePower avail = renewable_power(prof, k, cfg, deloaded);
    const ReserveLimits limits =
        deloaded ? reserve_limits(avail, cfg.dispatch_du_kw, cfg.dispatch_bess_kw, cfg.microgrid, cfg.deload)
                 : reserve_limits(AvailablePower{}, cfg.dispatch_du_kw, cfg.dispatch_bess_kw, cfg.microgrid, cfg.deload);

    DisturbanceVector d;
    d(kLoad) = prof.load_pu[k] - load0;
    d(kPv1Deficit) = -(avail.pv1 - schedule.pv1) / base;
    d(kPv2Deficit) = -(avail.pv2 - schedule.pv2) / base;
    d(kWt1Deficit) = -(avail.wt1 - schedule.wt1) / base;
    d(kWt2Deficit) = -(avail.wt2 - schedule.wt2) / base;
    if (k > 0 && (d - d_prev).cwiseAbs().maxCoeff() > 1e-12) trace.disturbance_events.push_back(k);
    d_prev = d;

    double y = x(kFreq);
    if (cfg.measurement_noise_std > 0.0) y += cfg.measurement_noise_std * noise(noise_rng);

    est = estimator_step(est, to_vector(u_prev), y, model, cfg.estimator);

    TraceRecord rec;
    rec.t = prof.t[k];
    rec.freq_dev = x(kFreq);
    rec.lo = limits.lo;
    rec.hi = limits.hi;
    rec.d_hat = est.d_hat;
    for (int i = 0; i < kNumDisturbances; ++i) rec.disturbance[static_cast<std::size_t>(i)] = d(i);
    rec.disturbance_agg = d.sum();
    for (int j = 0; j < kNumUnits; ++j) rec.unit_output[static_cast<std::size_t>(j)] = x(kOutputStates[static_cast<std::size_t>(j)]);

    ControlVector u;
    if (is_mpc) {
      MpcStepResult res;
      try {
        res = control_step(est, y, u_prev, limits, pred, cfg.mpc);
      } catch (const QpInfeasible& e) {
        trace.aborted = true;
        trace.abort_reason = fmt::format("step {}: {}", k, e.what());
        return trace;
      }
      if (hooks.on_mpc_step) hooks.on_mpc_step(k, res);
      u = res.command;
      rec.binding = res.binding;
      rec.objective = res.objective;
      rec.limit_drift = !res.drifted_units.empty();
    } else {
      auto [next, cmd] = pi_step(pi_state, y, limits, pi_cfg, ts);
      pi_state = next;
      u = cmd;
      for (int j = 0; j < kNumUnits; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!pi_cfg.participating[ju]) continue;
        if (u(j) >= limits.hi[ju] && limits.hi[ju] > limits.lo[ju]) rec.binding[ju] = 1;
        if (u(j) <= limits.lo[ju] && limits.hi[ju] > limits.lo[ju]) rec.binding[ju] = -1;
      }
    }
    rec.command = to_array(u);
    trace.records.push_back(rec);

    if (k < last) x = step_plant(model, x, u, d);
    u_prev = rec.command;
  }
  return trace;
}

RunMetrics compute_metrics(const ScenarioTrace& trace, double band) {
  if (trace.records.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  const auto& recs = trace.records;
  const double n = static_cast<double>(recs.size());

  RunMetrics m;
  // Shifted by the first sample so that a constant series gives exactly 0.
  const double shift = recs.front().freq_dev;
  double mean = 0.0;
  for (const auto& r : recs) {
    m.max_abs_freq_dev = std::max(m.max_abs_freq_dev, std::abs(r.freq_dev));
    mean += r.freq_dev - shift;
  }
  mean /= n;
  double var = 0.0;
  for (const auto& r : recs) {
    const double e = r.freq_dev - shift - mean;
    var += e * e;
  }
  m.freq_std = std::sqrt(var / n);

  const double ts = trace.ts > 0.0 ? trace.ts : (recs.size() > 1 ? recs[1].t - recs[0].t : 0.0);
  for (const auto& r : recs) {
    for (int j = 0; j < kNumUnits; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      m.energy[ju] += std::abs(r.command[ju]) * ts;
    }
    bool violated = false;
    bool renewable_bound = false;
    for (int j = 0; j < kNumUnits; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (r.command[ju] > r.hi[ju] + kViolationTolerance || r.command[ju] < r.lo[ju] - kViolationTolerance) violated = true;
      if (j < kDu && r.binding[ju] != 0) renewable_bound = true;
    }
    if (violated) ++m.constraint_violations;
    if (renewable_bound) ++m.renewable_binding_steps;
  }

  const double t_event = trace.disturbance_events.empty() ? recs.front().t : recs[trace.disturbance_events.back()].t;
  std::ptrdiff_t last_out = -1;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    if (std::abs(recs[k].freq_dev) > band) last_out = static_cast<std::ptrdiff_t>(k);
  }
  if (last_out < 0) {
    m.settle_time = 0.0;
  } else if (static_cast<std::size_t>(last_out) + 1 >= recs.size()) {
    m.settle_time = std::numeric_limits<double>::infinity();
  } else {
    m.settle_time = std::max(0.0, recs[static_cast<std::size_t>(last_out) + 1].t - t_event);
  }
  return m;
}

double pi_step_itae(const SimConfig& cfg, double kp, double ki, const PiTuningOptions& o) {
  const double ts = cfg.mpc.ts;
  const PlantModel model = build_plant_model(cfg.microgrid, ts);
  const PiConfig pi = make_pi_config(PiVariant::kDieselBatteryOnly, cfg.microgrid, kp, ki);
  const ReserveLimits limits =
      reserve_limits(AvailablePower{}, cfg.dispatch_du_kw, cfg.dispatch_bess_kw, cfg.microgrid, cfg.deload);
  const auto steps = static_cast<std::size_t>(std::llround(o.duration / ts));

  DisturbanceVector d = DisturbanceVector::Zero();
  d(kLoad) = o.load_step;
  StateVector x = StateVector::Zero();
  PiState state;
  double itae = 0.0;
  // The step acts from sample 0, so its effect is first measured one sample later.
  for (std::size_t k = 1; k <= steps; ++k) {
    auto [next, u] = pi_step(state, x(kFreq), limits, pi, ts);
    state = next;
    x = step_plant(model, x, u, d);
    const double t_since = static_cast<double>(k) * ts;
    itae += t_since * std::abs(x(kFreq)) * ts;
    if (!std::isfinite(itae)) return std::numeric_limits<double>::infinity();
  }
  return itae;
}

PiTuningResult tune_pi(const SimConfig& cfg, const PiTuningOptions& o) {
  PiTuningResult best;
  best.itae = std::numeric_limits<double>::infinity();
  const auto nkp = static_cast<int>(std::llround(o.kp_max / o.resolution));
  const auto nki = static_cast<int>(std::llround(o.ki_max / o.resolution));
  for (int i = 0; i <= nkp; ++i) {
    for (int j = 1; j <= nki; ++j) {
      const double kp = i * o.resolution;
      const double ki = j * o.resolution;
      const double itae = pi_step_itae(cfg, kp, ki, o);
      ++best.evaluated;
      if (itae < best.itae) {
        best.itae = itae;
        best.kp = kp;
        best.ki = ki;
      }
    }
  }
  return best;
}

}  // namespace mgfreq
