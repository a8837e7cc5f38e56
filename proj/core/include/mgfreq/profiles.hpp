#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mgfreq {

enum class ScenarioKind { kStep, kModerate, kRapid };

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

/// Exogenous inputs sampled every `ts` seconds on [0, duration].
struct ProfileSet {
  double ts = 0.2;
  std::vector<double> t;
  std::vector<double> load_pu;  ///< load relative to the t = 0 balance, p.u.
  std::vector<double> v_w1;     ///< m/s
  std::vector<double> v_w2;
  std::vector<double> g_eff1;   ///< W/m^2
  std::vector<double> g_eff2;
  std::vector<double> t_amb;    ///< degC

  std::size_t size() const { return t.size(); }
  double duration() const { return t.empty() ? 0.0 : t.back(); }
  /// Throws std::invalid_argument on ragged columns or a non-uniform grid.
  void validate() const;
};

struct LoadEvent {
  double time;   ///< s
  double delta;  ///< p.u., added to the load from `time` on
};

struct ProfileOptions {
  double ts = 0.2;
  double wind_nominal = 10.0;        ///< m/s
  double irradiance_nominal = 800.0; ///< W/m^2
  double ambient_nominal = 25.0;     ///< degC
  std::vector<LoadEvent> step_events{{30.0, 0.05}, {60.0, -0.05}, {90.0, 0.10}};

  // Ornstein-Uhlenbeck settings of the moderate profile; the rapid profile
  // multiplies every volatility by `rapid_volatility_factor`.
  double load_reversion = 0.05;  ///< 1/s
  double load_volatility = 0.004;
  double wind_reversion = 0.1;
  double wind_volatility = 0.3;
  double irradiance_reversion = 0.1;
  double irradiance_volatility = 15.0;
  double rapid_volatility_factor = 4.0;
  /// Mean time between cloud-shadow / gust ramp events in the rapid profile, s.
  double rapid_event_interval = 30.0;
};

ProfileSet generate_profiles(ScenarioKind kind, std::uint64_t seed, double duration,
                             const ProfileOptions& options = {});

/// Constant nominal inputs; the undisturbed reference case.
ProfileSet constant_profiles(double duration, const ProfileOptions& options = {});

/// CSV with header `t,load_pu,v_w1,v_w2,g_eff1,g_eff2,t_amb`.
ProfileSet read_profiles_csv(const std::string& path);
void write_profiles_csv(const ProfileSet& profiles, const std::string& path);

}  // namespace mgfreq
