#include "mgfreq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgfreq {

void PiConfig::validate() const {
  if (!(ki > 0.0)) throw std::invalid_argument("pi: ki must be positive");
  if (!(kp >= 0.0)) throw std::invalid_argument("pi: kp must be nonnegative");
  double sum = 0.0;
  for (int j = 0; j < kNumUnits; ++j) {
    const auto ju = static_cast<size_t>(j);
    const double w = allocation_weights[ju];
    if (w < 0.0) throw std::invalid_argument("pi: allocation weights must be nonnegative");
    if (!participating[ju] && w != 0.0) throw std::invalid_argument("pi: non-participating unit has a weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("pi: allocation weights must sum to 1");
}

PiConfig make_pi_config(PiVariant variant, const MicrogridParams& params, double kp, double ki) {
  PiConfig c;
  c.kp = kp;
  c.ki = ki;
  const UnitArray cap = params.capacities_kw();
  double total = 0.0;
  for (int j = 0; j < kNumUnits; ++j) {
    const bool renewable = j < kDu;
    c.participating[static_cast<size_t>(j)] = variant == PiVariant::kAllUnits || !renewable;
    if (c.participating[static_cast<size_t>(j)]) total += cap[static_cast<size_t>(j)];
  }
  for (int j = 0; j < kNumUnits; ++j) {
    const auto ju = static_cast<size_t>(j);
    c.allocation_weights[ju] = c.participating[ju] ? cap[ju] / total : 0.0;
  }
  return c;
}

namespace {

struct Allocation {
  ControlVector command;
  bool all_saturated;
};

Allocation allocate(double total, const ReserveLimits& limits, const PiConfig& config) {
  Allocation a{ControlVector::Zero(), true};
  for (int j = 0; j < kNumUnits; ++j) {
    const auto ju = static_cast<size_t>(j);
    if (!config.participating[ju]) continue;
    const double raw = total * config.allocation_weights[ju];
    const double clamped = std::clamp(raw, limits.lo[ju], limits.hi[ju]);
    a.command(j) = clamped;
    // Saturated in the direction of `total`.
    const bool stuck = (total > 0.0 && raw >= limits.hi[ju]) || (total < 0.0 && raw <= limits.lo[ju]);
    if (!stuck) a.all_saturated = false;
  }
  if (total == 0.0) a.all_saturated = false;
  return a;
}

}  // namespace

std::pair<PiState, ControlVector> pi_step(const PiState& state, double y, const ReserveLimits& limits,
                                          const PiConfig& config, double ts) {
  if (!(ts > 0.0)) throw std::invalid_argument("pi: ts must be positive");

  PiState next = state;
  next.integral = state.integral + y * ts;
  Allocation alloc = allocate(-(config.kp * y + config.ki * next.integral), limits, config);

  // Conditional integration: the integral term moves the total by -ki*y*ts,
  // which deepens the saturation whenever y and the total have opposite signs.
  if (alloc.all_saturated && y * alloc.command.sum() < 0.0) {
    next.integral = state.integral;
    alloc = allocate(-(config.kp * y + config.ki * next.integral), limits, config);
  }
  next.last_command = alloc.command;
  return {next, alloc.command};
}

}  // namespace mgfreq
