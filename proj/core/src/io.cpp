#include "mgfreq/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"

namespace mgfreq {

using nlohmann::json;

std::string trace_csv_header() {
  std::string h = "t,freq_dev";
  for (const char* u : kUnitNames) h += fmt::format(",cmd_{}", u);
  for (const char* u : kUnitNames) h += fmt::format(",out_{}", u);
  h += ",d_load,d_pv1,d_pv2,d_wt1,d_wt2,d_agg,d_hat";
  for (const char* u : kUnitNames) h += fmt::format(",lo_{}", u);
  for (const char* u : kUnitNames) h += fmt::format(",hi_{}", u);
  for (const char* u : kUnitNames) h += fmt::format(",bind_{}", u);
  h += ",objective,limit_drift";
  return h;
}

void write_trace_csv(const ScenarioTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write trace file '{}'", path));
  out << trace_csv_header() << '\n';
  fmt::memory_buffer buf;
  auto num = [&buf](double v) { fmt::format_to(std::back_inserter(buf), ",{:.15g}", v); };
  for (const TraceRecord& r : trace.records) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{:.15g}", r.t);
    num(r.freq_dev);
    for (double v : r.command) num(v);
    for (double v : r.unit_output) num(v);
    for (double v : r.disturbance) num(v);
    num(r.disturbance_agg);
    num(r.d_hat);
    for (double v : r.lo) num(v);
    for (double v : r.hi) num(v);
    for (int b : r.binding) fmt::format_to(std::back_inserter(buf), ",{}", b);
    num(r.objective);
    fmt::format_to(std::back_inserter(buf), ",{}\n", r.limit_drift ? 1 : 0);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

std::string metrics_json(const ScenarioTrace& trace, const RunMetrics& m) {
  json j;
  j["controller"] = to_string(trace.controller);
  j["scenario"] = trace.scenario;
  j["seed"] = trace.seed;
  j["max_abs_freq_dev"] = m.max_abs_freq_dev;
  j["freq_std"] = m.freq_std;
  j["settle_time"] = std::isfinite(m.settle_time) ? json(m.settle_time) : json(nullptr);
  j["constraint_violations"] = m.constraint_violations;
  j["renewable_binding_steps"] = m.renewable_binding_steps;
  json energy = json::object();
  for (std::size_t i = 0; i < kUnitNames.size(); ++i) energy[kUnitNames[i]] = m.energy[i];
  j["energy"] = energy;
  j["aborted"] = trace.aborted;
  if (trace.aborted) j["abort_reason"] = trace.abort_reason;
  return j.dump(2);
}

namespace {

template <typename T>
void read(const json& obj, const char* key, T& field) {
  if (obj.contains(key)) field = obj.at(key).get<T>();
}

}  // namespace

SimConfig parse_sim_config(const std::string& text) {
  SimConfig c;
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(fmt::format("config: {}", e.what()));
  }
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");

  try {
    if (j.contains("microgrid")) {
      const json& g = j["microgrid"];
      auto& p = c.microgrid;
      read(g, "p_pv1", p.p_pv1);
      read(g, "p_pv2", p.p_pv2);
      read(g, "p_wt1", p.p_wt1);
      read(g, "p_wt2", p.p_wt2);
      read(g, "p_bess", p.p_bess);
      read(g, "p_du", p.p_du);
      read(g, "p_load", p.p_load);
      read(g, "t_pv1", p.t_pv1);
      read(g, "t_pv2", p.t_pv2);
      read(g, "t_wt", p.t_wt);
      read(g, "t_bess", p.t_bess);
      read(g, "t_du1", p.t_du1);
      read(g, "t_du2", p.t_du2);
      read(g, "droop", p.droop);
      read(g, "inertia", p.inertia);
      read(g, "s_base", p.s_base);
      if (g.contains("bess_coupling")) {
        const auto mode = g["bess_coupling"].get<std::string>();
        if (mode == "literal") {
          p.bess_coupling = BessCoupling::kLiteral;
        } else if (mode == "droop") {
          p.bess_coupling = BessCoupling::kDroop;
        } else {
          throw std::runtime_error(fmt::format("config: bess_coupling must be 'literal' or 'droop', got '{}'", mode));
        }
      }
      p.validate();
    }
    if (j.contains("wind")) {
      const json& w = j["wind"];
      if (w.contains("rated_power") || w.contains("rated_wind_speed") || w.contains("cut_in_speed")) {
        c.wind = make_wind_params(w.value("rated_power", c.wind.rated_power),
                                  w.value("rated_wind_speed", c.wind.rated_wind_speed), w.value("cut_in_speed", 3.0));
      }
      read(w, "rho_air", c.wind.rho_air);
      read(w, "blade_radius", c.wind.blade_radius);
      read(w, "pitch_beta", c.wind.pitch_beta);
      read(w, "omega_min", c.wind.omega_min);
      read(w, "omega_max", c.wind.omega_max);
      c.wind.validate();
    }
    if (j.contains("pv")) {
      const json& v = j["pv"];
      read(v, "ns", c.pv.ns);
      read(v, "np", c.pv.np);
      read(v, "pg_star", c.pv.pg_star);
      read(v, "gamma", c.pv.gamma);
      read(v, "noct", c.pv.noct);
      c.pv.validate();
    }
    if (j.contains("dispatch")) {
      const json& d = j["dispatch"];
      read(d, "deload", c.deload);
      read(d, "du_kw", c.dispatch_du_kw);
      read(d, "bess_kw", c.dispatch_bess_kw);
    }
    if (j.contains("mpc")) {
      const json& m = j["mpc"];
      read(m, "p", c.mpc.p);
      read(m, "m", c.mpc.m);
      read(m, "ts", c.mpc.ts);
      read(m, "alpha", c.mpc.alpha);
      read(m, "beta_pv", c.mpc.beta_pv);
      read(m, "beta_wt", c.mpc.beta_wt);
      read(m, "beta_du", c.mpc.beta_du);
      read(m, "beta_bess", c.mpc.beta_bess);
      read(m, "constraints_enabled", c.mpc.constraints_enabled);
      if (m.contains("limit_form")) {
        const auto form = m["limit_form"].get<std::string>();
        if (form == "total") {
          c.mpc.limit_form = LimitForm::kTotal;
        } else if (form == "increment") {
          c.mpc.limit_form = LimitForm::kIncrement;
        } else {
          throw std::runtime_error(fmt::format("config: limit_form must be 'total' or 'increment', got '{}'", form));
        }
      }
      c.mpc.validate();
    }
    if (j.contains("estimator")) {
      const json& e = j["estimator"];
      double q_state = c.estimator.q(0, 0);
      double q_dist = c.estimator.q(kNumStates, kNumStates);
      double p0 = c.estimator.p0(0, 0);
      read(e, "q_state", q_state);
      read(e, "q_disturbance", q_dist);
      read(e, "r_noise", c.estimator.r_noise);
      read(e, "p0", p0);
      c.estimator.q.setZero();
      c.estimator.q.diagonal().head(kNumStates).setConstant(q_state);
      c.estimator.q(kNumStates, kNumStates) = q_dist;
      c.estimator.p0 = p0 * Matrix::Identity(kAugmentedStates, kAugmentedStates);
      c.estimator.validate();
    }
    if (j.contains("pi")) {
      read(j["pi"], "kp", c.pi_kp);
      read(j["pi"], "ki", c.pi_ki);
    }
    read(j, "measurement_noise_std", c.measurement_noise_std);
    if (j.contains("profiles")) {
      const json& pr = j["profiles"];
      auto& o = c.profiles;
      read(pr, "wind_nominal", o.wind_nominal);
      read(pr, "irradiance_nominal", o.irradiance_nominal);
      read(pr, "ambient_nominal", o.ambient_nominal);
      read(pr, "load_reversion", o.load_reversion);
      read(pr, "load_volatility", o.load_volatility);
      read(pr, "wind_reversion", o.wind_reversion);
      read(pr, "wind_volatility", o.wind_volatility);
      read(pr, "irradiance_reversion", o.irradiance_reversion);
      read(pr, "irradiance_volatility", o.irradiance_volatility);
      read(pr, "rapid_volatility_factor", o.rapid_volatility_factor);
      read(pr, "rapid_event_interval", o.rapid_event_interval);
      if (pr.contains("step_events")) {
        o.step_events.clear();
        for (const json& e : pr["step_events"]) o.step_events.push_back({e.at("time").get<double>(), e.at("delta").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("config: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(fmt::format("config: {}", e.what()));
  }
  return c;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

std::string sim_config_json(const SimConfig& c) {
  const auto& p = c.microgrid;
  json j;
  j["microgrid"] = {{"p_pv1", p.p_pv1},   {"p_pv2", p.p_pv2},   {"p_wt1", p.p_wt1},
                    {"p_wt2", p.p_wt2},   {"p_bess", p.p_bess}, {"p_du", p.p_du},
                    {"p_load", p.p_load}, {"t_pv1", p.t_pv1},   {"t_pv2", p.t_pv2},
                    {"t_wt", p.t_wt},     {"t_bess", p.t_bess}, {"t_du1", p.t_du1},
                    {"t_du2", p.t_du2},   {"droop", p.droop},   {"inertia", p.inertia},
                    {"s_base", p.s_base},
                    {"bess_coupling", p.bess_coupling == BessCoupling::kLiteral ? "literal" : "droop"}};
  j["wind"] = {{"rho_air", c.wind.rho_air},         {"blade_radius", c.wind.blade_radius},
               {"pitch_beta", c.wind.pitch_beta},   {"omega_min", c.wind.omega_min},
               {"omega_max", c.wind.omega_max},     {"rated_power", c.wind.rated_power},
               {"rated_wind_speed", c.wind.rated_wind_speed}};
  j["pv"] = {{"ns", c.pv.ns}, {"np", c.pv.np}, {"pg_star", c.pv.pg_star}, {"gamma", c.pv.gamma}, {"noct", c.pv.noct}};
  j["dispatch"] = {{"deload", c.deload}, {"du_kw", c.dispatch_du_kw}, {"bess_kw", c.dispatch_bess_kw}};
  j["mpc"] = {{"p", c.mpc.p},
              {"m", c.mpc.m},
              {"ts", c.mpc.ts},
              {"alpha", c.mpc.alpha},
              {"beta_pv", c.mpc.beta_pv},
              {"beta_wt", c.mpc.beta_wt},
              {"beta_du", c.mpc.beta_du},
              {"beta_bess", c.mpc.beta_bess},
              {"constraints_enabled", c.mpc.constraints_enabled},
              {"limit_form", c.mpc.limit_form == LimitForm::kTotal ? "total" : "increment"}};
  j["estimator"] = {{"q_state", c.estimator.q(0, 0)},
                    {"q_disturbance", c.estimator.q(kNumStates, kNumStates)},
                    {"r_noise", c.estimator.r_noise},
                    {"p0", c.estimator.p0(0, 0)}};
  j["pi"] = {{"kp", c.pi_kp}, {"ki", c.pi_ki}};
  j["measurement_noise_std"] = c.measurement_noise_std;
  const auto& o = c.profiles;
  json events = json::array();
  for (const auto& e : o.step_events) events.push_back({{"time", e.time}, {"delta", e.delta}});
  j["profiles"] = {{"wind_nominal", o.wind_nominal},
                   {"irradiance_nominal", o.irradiance_nominal},
                   {"ambient_nominal", o.ambient_nominal},
                   {"load_reversion", o.load_reversion},
                   {"load_volatility", o.load_volatility},
                   {"wind_reversion", o.wind_reversion},
                   {"wind_volatility", o.wind_volatility},
                   {"irradiance_reversion", o.irradiance_reversion},
                   {"irradiance_volatility", o.irradiance_volatility},
                   {"rapid_volatility_factor", o.rapid_volatility_factor},
                   {"rapid_event_interval", o.rapid_event_interval},
                   {"step_events", events}};
  return j.dump(2);
}

}  // namespace mgfreq
