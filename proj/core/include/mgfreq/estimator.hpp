#pragma once

#include "mgfreq/plant.hpp"

namespace mgfreq {

inline constexpr int kAugmentedStates = kNumStates + 1;

/// Noise model of the augmented system [x; d_agg], where the aggregate
/// disturbance d_agg is a random walk entering through the shared column of D.
struct EstimatorConfig {
  Matrix q;        // 11x11 process noise
  double r_noise;  // measurement noise variance
  Matrix p0;       // 11x11 initial covariance

  static EstimatorConfig defaults();
  void validate() const;
};

struct EstimatorState {
  StateVector x_hat = StateVector::Zero();
  double d_hat = 0.0;
  Matrix p;
  StateVector prev_x_hat = StateVector::Zero();
  double prev_d_hat = 0.0;
  double innovation = 0.0;

  StateVector delta_x() const { return x_hat - prev_x_hat; }
  double delta_d() const { return d_hat - prev_d_hat; }
};

EstimatorState initial_estimator_state(const EstimatorConfig& config);

/// Shared disturbance column of the discrete D matrix. Throws if the five
/// channels do not share one column.
Vector aggregate_disturbance_column(const PlantModel& model);

struct AugmentedSystem {
  Matrix a;  // 11x11
  Matrix b;  // 11x6
  Matrix c;  // 1x11
};

AugmentedSystem augmented_system(const PlantModel& model);

/// Rank of the 11x11 observability matrix of the augmented pair.
int augmented_observability_rank(const PlantModel& model);

/// PBH test on every augmented eigenvalue with |lambda| >= 1 - margin.
bool augmented_detectable(const PlantModel& model, double margin = 1e-9);

/// Throws std::logic_error if the disturbance mode cannot be reconstructed
/// from the frequency measurement.
void require_detectable(const PlantModel& model);

/// One predict/update cycle: `u` is the control applied over the last
/// interval, `y` the frequency deviation measured now.
EstimatorState estimator_step(const EstimatorState& state, const ControlVector& u, double y, const PlantModel& model,
                              const EstimatorConfig& config);

}  // namespace mgfreq
