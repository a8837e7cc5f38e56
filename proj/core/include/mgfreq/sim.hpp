#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mgfreq/baselines.hpp"
#include "mgfreq/der.hpp"
#include "mgfreq/estimator.hpp"
#include "mgfreq/mpc.hpp"
#include "mgfreq/plant.hpp"
#include "mgfreq/profiles.hpp"

namespace mgfreq {

enum class ControllerKind { kMpc, kPiAll, kPiDuBess };

ControllerKind parse_controller_kind(const std::string& name);
std::string to_string(ControllerKind kind);

/// Everything a closed-loop run needs besides the exogenous profiles.
struct SimConfig {
  MicrogridParams microgrid;
  WindParams wind = make_wind_params();
  PvParams pv;
  double deload = 0.10;
  double dispatch_du_kw = 60.0;
  double dispatch_bess_kw = 0.0;
  MpcConfig mpc;
  EstimatorConfig estimator = EstimatorConfig::defaults();
  double pi_kp = kTunedKp;
  double pi_ki = kTunedKi;
  double measurement_noise_std = 0.0;  ///< p.u.; 0 gives noiseless traces
  ProfileOptions profiles;             ///< generator settings for synthetic scenarios
};

struct Scenario {
  std::string name;
  ProfileSet profiles;
  ControllerKind controller = ControllerKind::kMpc;
  std::uint64_t seed = 0;

  double duration() const { return profiles.duration(); }
  double ts() const { return profiles.ts; }
};

struct TraceRecord {
  double t = 0.0;
  double freq_dev = 0.0;
  UnitArray command{};      ///< total secondary adjustment per unit, p.u.
  UnitArray unit_output{};  ///< plant power states, p.u.
  std::array<double, kNumDisturbances> disturbance{};
  double disturbance_agg = 0.0;
  double d_hat = 0.0;
  UnitArray lo{};
  UnitArray hi{};
  std::array<int, kNumUnits> binding{};
  double objective = 0.0;
  bool limit_drift = false;
};

struct ScenarioTrace {
  std::string scenario;
  ControllerKind controller = ControllerKind::kMpc;
  std::uint64_t seed = 0;
  double ts = 0.0;
  std::vector<TraceRecord> records;
  /// Indices where any disturbance channel changed.
  std::vector<std::size_t> disturbance_events;
  bool aborted = false;
  std::string abort_reason;
};

struct RunHooks {
  /// Called after each MPC solve with the step index.
  std::function<void(std::size_t, const MpcStepResult&)> on_mpc_step;
};

/// Deterministic fixed-step closed loop. Aborts with a partial trace (and
/// `aborted` set) when the MPC QP is infeasible.
ScenarioTrace run_scenario(const Scenario& scenario, const SimConfig& config, const RunHooks& hooks = {});

struct RunMetrics {
  double max_abs_freq_dev = 0.0;
  double freq_std = 0.0;
  /// Time from the last disturbance event until |df| stays inside the band;
  /// +inf if it never does.
  double settle_time = std::numeric_limits<double>::infinity();
  UnitArray energy{};  ///< integral of |command| dt, p.u. s
  std::size_t constraint_violations = 0;
  std::size_t renewable_binding_steps = 0;
};

inline constexpr double kSettleBand = 1e-4;
inline constexpr double kViolationTolerance = 1e-9;

RunMetrics compute_metrics(const ScenarioTrace& trace, double band = kSettleBand);

struct PiTuningOptions {
  double kp_max = 5.0;
  double ki_max = 5.0;
  double resolution = 0.05;
  double load_step = 0.05;  ///< p.u.
  double duration = 60.0;   ///< s
};

struct PiTuningResult {
  double kp = 0.0;
  double ki = 0.0;
  double itae = 0.0;
  std::size_t evaluated = 0;
};

/// ITAE of the diesel+battery PI loop after a load step at t = ts.
double pi_step_itae(const SimConfig& config, double kp, double ki, const PiTuningOptions& options = {});

/// Grid search kp in [0, kp_max], ki in (0, ki_max] minimizing pi_step_itae.
PiTuningResult tune_pi(const SimConfig& config, const PiTuningOptions& options = {});

/// Generated profiles wrapped as a named scenario.
Scenario make_scenario(ScenarioKind kind, ControllerKind controller, std::uint64_t seed, double duration = 180.0,
                       const ProfileOptions& options = {});

}  // namespace mgfreq
