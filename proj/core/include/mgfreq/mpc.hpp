#pragma once

#include <vector>

#include "mgfreq/der.hpp"
#include "mgfreq/estimator.hpp"
#include "mgfreq/numerics.hpp"
#include "mgfreq/plant.hpp"

namespace mgfreq {

/// How reserve limits bound the decision variables. kTotal bounds the
/// accumulated command U_prev + sum dU; kIncrement bounds each move dU alone.
enum class LimitForm { kTotal, kIncrement };

struct MpcConfig {
  int p = 10;  ///< prediction horizon, steps
  int m = 3;   ///< control horizon, steps
  double ts = 0.2;
  double alpha = 1.6596;
  double beta_pv = 0.2894;
  double beta_wt = 0.2894;
  double beta_du = 0.3762;
  double beta_bess = 0.3762;
  bool constraints_enabled = true;
  LimitForm limit_form = LimitForm::kTotal;

  void validate() const;
  UnitArray move_weights() const { return {beta_pv, beta_pv, beta_wt, beta_wt, beta_du, beta_bess}; }
};

/// Stacked velocity-form predictor:
///   Y = S_x dx(k) + I y(k) + S_d dd(k) + S_B dU(k).
struct PredictionMatrices {
  Matrix s_x;       // p x 10
  Matrix s_d;       // p x 1, aggregate disturbance
  Matrix s_d_full;  // p x (5 m), one block column per future disturbance increment
  Matrix s_b;       // p x (6 m)
  Vector i_vec;     // p
};

PredictionMatrices build_prediction_matrices(const PlantModel& model, const MpcConfig& config);

/// Gamma_y' Gamma_y (p x p) and Gamma_u' Gamma_u (6m x 6m).
Matrix output_weight_squared(const MpcConfig& config);
Matrix move_weight_squared(const MpcConfig& config);

/// Hessian S_B' Gy'Gy S_B + Gu'Gu of the move problem.
Matrix mpc_hessian(const PredictionMatrices& pred, const MpcConfig& config);

/// Closed-form unconstrained gain (6m x p): dU* = K (0 - Y_free).
Matrix mpc_gain(const PredictionMatrices& pred, const MpcConfig& config);

struct MoveConstraints {
  Matrix cu;  // rows x 6m
  Vector b;
  /// Unit index and horizon step of each row; `upper` marks the hi-bound rows.
  struct Row {
    int unit;
    int step;
    bool upper;
  };
  std::vector<Row> rows;
  /// Units whose previous total already lies outside [lo, hi].
  std::vector<int> drifted_units;
};

/// Cumulative bounds lo_j <= U_prev_j + sum_{tau <= i} dU_j(tau) <= hi_j for
/// every unit j and step i < m, in the form Cu dU >= b. Rows with an
/// infinite bound are omitted.
MoveConstraints build_constraints(const ReserveLimits& limits, const UnitArray& u_prev, const MpcConfig& config);

struct MpcStepResult {
  ControlVector increment = ControlVector::Zero();  ///< first block of dU*
  ControlVector command = ControlVector::Zero();    ///< U_prev + increment
  Vector move_sequence;                             ///< full dU*, 6m
  Vector free_response;                             ///< Y_free, p
  Vector predicted_freq;                            ///< Y_free + S_B dU*, p
  std::vector<bool> qp_active;                      ///< per constraint row
  std::array<int, kNumUnits> binding{};             ///< -1 lower, +1 upper, 0 free (first step)
  std::vector<int> drifted_units;
  double objective = 0.0;
  QpProblem qp;
  QpSolution qp_solution;
};

/// One receding-horizon step. `u_prev` holds the totals applied over the
/// previous interval. Throws QpInfeasible with the row index in the message.
MpcStepResult control_step(const EstimatorState& est, double y, const UnitArray& u_prev, const ReserveLimits& limits,
                           const PredictionMatrices& pred, const MpcConfig& config);

}  // namespace mgfreq
