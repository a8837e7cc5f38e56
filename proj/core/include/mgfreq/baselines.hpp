#pragma once

#include <array>
#include <utility>

#include "mgfreq/der.hpp"
#include "mgfreq/plant.hpp"

namespace mgfreq {

/// Gains chosen by the ITAE grid search in `tune_pi` (0.05 p.u. load step,
/// diesel and battery only). Regenerate with `mgfreq tune-pi`.
inline constexpr double kTunedKp = 5.0;
inline constexpr double kTunedKi = 3.65;

enum class PiVariant {
  kDieselBatteryOnly,  ///< conventional secondary control, renewables at MPPT
  kAllUnits,           ///< renewables deloaded and participating
};

struct PiConfig {
  double kp = kTunedKp;
  double ki = kTunedKi;
  std::array<bool, kNumUnits> participating{};
  UnitArray allocation_weights{};

  void validate() const;
};

/// Capacity-proportional allocation over the participants of `variant`.
PiConfig make_pi_config(PiVariant variant, const MicrogridParams& params, double kp = kTunedKp,
                        double ki = kTunedKi);

struct PiState {
  double integral = 0.0;  ///< p.u. s
  ControlVector last_command = ControlVector::Zero();
};

/// Centralized PI: total = -(kp y + ki integral), split by allocation weight,
/// each share clamped to the unit's limits. Integration is frozen while every
/// participant sits on a limit in the direction the error pushes.
std::pair<PiState, ControlVector> pi_step(const PiState& state, double y, const ReserveLimits& limits,
                                          const PiConfig& config, double ts);

}  // namespace mgfreq
