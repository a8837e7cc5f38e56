#pragma once

#include <array>
#include <cstddef>

#include "mgfreq/numerics.hpp"

namespace mgfreq {

inline constexpr int kNumStates = 10;
inline constexpr int kNumUnits = 6;
inline constexpr int kNumDisturbances = 5;

/// State ordering of the LFC model.
enum StateIndex : int {
  kFreq = 0,
  kPv1Array,
  kPv1Power,
  kPv2Array,
  kPv2Power,
  kWt1Power,
  kWt2Power,
  kDuGovernor,
  kDuPower,
  kBessPower,
};

/// Control ordering; also the ordering of every per-unit array in the library.
enum Unit : int { kPv1 = 0, kPv2, kWt1, kWt2, kDu, kBess };

/// Disturbance ordering: load, then renewable output deficits.
enum DisturbanceIndex : int { kLoad = 0, kPv1Deficit, kPv2Deficit, kWt1Deficit, kWt2Deficit };

inline constexpr std::array<const char*, kNumUnits> kUnitNames{"pv1", "pv2", "wt1", "wt2", "du", "bess"};

using UnitArray = std::array<double, kNumUnits>;

enum class BessCoupling {
  kLiteral,  ///< dP_bess/dt = -df - P_bess / T_bess
  kDroop,    ///< dP_bess/dt = -df / (R T_bess) - P_bess / T_bess
};

struct MicrogridParams {
  // Unit ratings, kW.
  double p_pv1 = 80.0;
  double p_pv2 = 80.0;
  double p_wt1 = 60.0;
  double p_wt2 = 60.0;
  double p_bess = 100.0;
  double p_du = 120.0;
  double p_load = 200.0;

  // Time constants, s.
  double t_pv1 = 0.15;  ///< PV array
  double t_pv2 = 0.08;  ///< PV inverter
  double t_wt = 0.3;
  double t_bess = 0.1;
  double t_du1 = 0.4;  ///< diesel governor
  double t_du2 = 0.1;  ///< diesel engine

  double droop = 3.0;    ///< R, Hz per p.u.
  double inertia = 0.6;  ///< H, s
  double s_base = 200.0; ///< kW

  BessCoupling bess_coupling = BessCoupling::kLiteral;

  UnitArray capacities_kw() const { return {p_pv1, p_pv2, p_wt1, p_wt2, p_du, p_bess}; }

  /// Throws std::invalid_argument on a non-positive constant.
  void validate() const;
};

struct PlantModel {
  Matrix ac;  // 10x10
  Matrix bc;  // 10x6
  Matrix cc;  // 1x10
  Matrix dc;  // 10x5
  Matrix a;
  Matrix b;
  Matrix c;
  Matrix d;
  double ts = 0.0;

  bool discretized() const { return ts > 0.0; }
};

using StateVector = Eigen::Matrix<double, kNumStates, 1>;
using ControlVector = Eigen::Matrix<double, kNumUnits, 1>;
using DisturbanceVector = Eigen::Matrix<double, kNumDisturbances, 1>;

/// Continuous matrices only; `ts` is left at 0.
PlantModel build_continuous_model(const MicrogridParams& params);

/// Fills the discrete matrices of `model` for sample time `ts`.
PlantModel discretize_model(PlantModel model, double ts);

/// Continuous and discrete model in one call.
PlantModel build_plant_model(const MicrogridParams& params, double ts = 0.2);

StateVector step_plant(const PlantModel& model, const StateVector& x, const ControlVector& u,
                       const DisturbanceVector& d);

/// Dynamic-size overload; checks dimensions.
Vector step_plant(const PlantModel& model, const Vector& x, const Vector& u, const Vector& d);

inline UnitArray to_array(const ControlVector& v) {
  UnitArray out{};
  for (int i = 0; i < kNumUnits; ++i) out[static_cast<std::size_t>(i)] = v(i);
  return out;
}

inline ControlVector to_vector(const UnitArray& a) {
  ControlVector v;
  for (int i = 0; i < kNumUnits; ++i) v(i) = a[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace mgfreq
