#pragma once

#include "mgfreq/plant.hpp"

namespace mgfreq {

/// Wind turbine aerodynamic model. Cp(lambda, beta) = c1 (c2 z - c3 beta - c4) exp(c5 z),
/// z = 1 / (lambda + c6 beta) - c7 / (1 + beta^3).
struct WindParams {
  double rho_air = 1.225;  ///< kg/m^3
  double blade_radius = 6.5;  ///< m
  double c1 = 0.5176;
  double c2 = 116.0;
  double c3 = 0.4;
  double c4 = 5.0;
  double c5 = -21.0;
  double c6 = 0.08;
  double c7 = 0.035;
  double pitch_beta = 0.0;  ///< deg
  double omega_min = 0.0;   ///< rad/s, cut-in rotor speed
  double omega_max = 0.0;   ///< rad/s, rotor speed at rated wind
  double rated_power = 60.0;       ///< kW
  double rated_wind_speed = 12.0;  ///< m/s

  void validate() const;
};

/// Turbine sized so the Cp-optimal operating point delivers `rated_kw` at
/// `rated_speed`; omega limits follow from the optimal tip-speed ratio.
WindParams make_wind_params(double rated_kw = 60.0, double rated_speed = 12.0, double cut_in_speed = 3.0);

/// Clamped below at 0 so that the admissible region is where the turbine produces.
double power_coefficient(const WindParams& w, double lambda, double beta);

/// Tip-speed ratio maximizing Cp at the configured pitch.
double optimal_tip_speed_ratio(const WindParams& w);

/// Maximum available power at wind speed `v` (m/s) after deloading, kW.
double wind_available_power(double v, const WindParams& w, double deload);

/// Undeloaded (MPPT) output, kW.
inline double wind_mppt_power(double v, const WindParams& w) { return wind_available_power(v, w, 0.0); }

struct PvParams {
  int ns = 20;
  int np = 16;
  double pg_star = 250.0;  ///< W per module at reference conditions
  double g_star = 1000.0;  ///< W/m^2
  double gamma = 0.004;    ///< 1/degC
  double tc_star = 25.0;   ///< degC
  double noct = 45.0;      ///< degC

  void validate() const;
  double rated_kw() const { return ns * np * pg_star / 1000.0; }
};

/// Cell temperature rise per unit irradiance, degC m^2/W.
double pv_thermal_coefficient(const PvParams& pv);

double pv_cell_temperature(double g_eff, double t_ambient, const PvParams& pv);

/// Maximum available PV power after deloading, kW, floored at 0.
double pv_available_power(double g_eff, double t_ambient, const PvParams& pv, double deload);

inline double pv_mppt_power(double g_eff, double t_ambient, const PvParams& pv) {
  return pv_available_power(g_eff, t_ambient, pv, 0.0);
}

/// Bounds on each unit's total secondary-control adjustment, p.u. on s_base.
struct ReserveLimits {
  UnitArray lo{};
  UnitArray hi{};

  bool contains(const UnitArray& u, double tol = 0.0) const;
};

struct AvailablePower {
  double pv1 = 0.0;
  double pv2 = 0.0;
  double wt1 = 0.0;
  double wt2 = 0.0;
};

/// Renewable bounds are +/- deload * P_MAP; diesel and battery bounds are
/// [P_min - dispatch, P_max - dispatch] with P_min = 0 (diesel) and
/// -P_bess (battery). Inputs in kW.
ReserveLimits reserve_limits(const AvailablePower& p_map, double dispatch_du, double dispatch_bess,
                             const MicrogridParams& params, double deload);

}  // namespace mgfreq
