#include "mgfreq/der.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

namespace {

void check_deload(double deload) {
  if (!(deload >= 0.0 && deload < 1.0)) throw std::invalid_argument(fmt::format("deload {} outside [0, 1)", deload));
}

double swept_power_kw(const WindParams& w, double v, double cp) {
  return 0.5 * w.rho_air * std::numbers::pi * w.blade_radius * w.blade_radius * v * v * v * cp / 1000.0;
}

}  // namespace

void WindParams::validate() const {
  if (!(rho_air > 0.0)) throw std::invalid_argument("wind: rho_air must be positive");
  if (!(blade_radius > 0.0)) throw std::invalid_argument("wind: blade_radius must be positive");
  if (!(rated_power > 0.0)) throw std::invalid_argument("wind: rated_power must be positive");
  if (!(rated_wind_speed > 0.0)) throw std::invalid_argument("wind: rated_wind_speed must be positive");
  if (omega_min < 0.0 || omega_max <= omega_min) throw std::invalid_argument("wind: need 0 <= omega_min < omega_max");
}

double power_coefficient(const WindParams& w, double lambda, double beta) {
  const double z = 1.0 / (lambda + w.c6 * beta) - w.c7 / (1.0 + beta * beta * beta);
  const double cp = w.c1 * (w.c2 * z - w.c3 * beta - w.c4) * std::exp(w.c5 * z);
  return std::max(0.0, cp);
}

double optimal_tip_speed_ratio(const WindParams& w) {
  // Golden-section search; Cp is unimodal in lambda for fixed pitch.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.5;
  double hi = 25.0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = power_coefficient(w, x1, w.pitch_beta);
  double f2 = power_coefficient(w, x2, w.pitch_beta);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = power_coefficient(w, x2, w.pitch_beta);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = power_coefficient(w, x1, w.pitch_beta);
    }
  }
  return 0.5 * (lo + hi);
}

WindParams make_wind_params(double rated_kw, double rated_speed, double cut_in_speed) {
  WindParams w;
  w.rated_power = rated_kw;
  w.rated_wind_speed = rated_speed;
  const double lambda = optimal_tip_speed_ratio(w);
  const double cp = power_coefficient(w, lambda, w.pitch_beta);
  w.blade_radius = std::sqrt(rated_kw * 1000.0 /
                             (0.5 * w.rho_air * std::numbers::pi * rated_speed * rated_speed * rated_speed * cp));
  w.omega_min = lambda * cut_in_speed / w.blade_radius;
  w.omega_max = lambda * rated_speed / w.blade_radius;
  return w;
}

double wind_available_power(double v, const WindParams& w, double deload) {
  if (!(v >= 0.0)) throw std::invalid_argument(fmt::format("wind speed must be >= 0, got {}", v));
  check_deload(deload);
  const double lambda = optimal_tip_speed_ratio(w);
  const double omega = lambda * v / w.blade_radius;
  const double scale = 1.0 - deload;
  if (omega <= w.omega_min) return 0.0;
  if (omega >= w.omega_max) return scale * w.rated_power;
  const double p = swept_power_kw(w, v, power_coefficient(w, lambda, w.pitch_beta));
  return scale * std::min(p, w.rated_power);
}

void PvParams::validate() const {
  if (ns < 1 || np < 1) throw std::invalid_argument("pv: ns and np must be >= 1");
  if (!(pg_star > 0.0)) throw std::invalid_argument("pv: pg_star must be positive");
  if (g_star != 1000.0) throw std::invalid_argument("pv: G* is fixed at 1000 W/m^2");
  if (tc_star != 25.0) throw std::invalid_argument("pv: Tc* is fixed at 25 degC");
  if (gamma < 0.0) throw std::invalid_argument("pv: gamma must be >= 0");
}

double pv_thermal_coefficient(const PvParams& pv) { return (pv.noct - 20.0) / (0.8 * pv.g_star); }

double pv_cell_temperature(double g_eff, double t_ambient, const PvParams& pv) {
  return t_ambient + pv_thermal_coefficient(pv) * g_eff;
}

double pv_available_power(double g_eff, double t_ambient, const PvParams& pv, double deload) {
  if (!(g_eff >= 0.0)) throw std::invalid_argument(fmt::format("irradiance must be >= 0, got {}", g_eff));
  check_deload(deload);
  const double tc = pv_cell_temperature(g_eff, t_ambient, pv);
  const double p_w = pv.ns * pv.np * pv.pg_star * (g_eff / pv.g_star) * (1.0 - pv.gamma * (tc - pv.tc_star));
  return std::max(0.0, (1.0 - deload) * p_w / 1000.0);
}

bool ReserveLimits::contains(const UnitArray& u, double tol) const {
  for (size_t i = 0; i < u.size(); ++i) {
    if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
  }
  return true;
}

ReserveLimits reserve_limits(const AvailablePower& p_map, double dispatch_du, double dispatch_bess,
                             const MicrogridParams& params, double deload) {
  check_deload(deload);
  for (double p : {p_map.pv1, p_map.pv2, p_map.wt1, p_map.wt2}) {
    if (!(p >= 0.0)) throw std::invalid_argument("reserve_limits: available power must be >= 0");
  }
  if (dispatch_du < 0.0 || dispatch_du > params.p_du) {
    throw std::invalid_argument(fmt::format("reserve_limits: diesel dispatch {} kW outside [0, {}]", dispatch_du,
                                            params.p_du));
  }
  if (dispatch_bess < -params.p_bess || dispatch_bess > params.p_bess) {
    throw std::invalid_argument(fmt::format("reserve_limits: battery dispatch {} kW outside [{}, {}]", dispatch_bess,
                                            -params.p_bess, params.p_bess));
  }

  const double base = params.s_base;
  ReserveLimits lim;
  const std::array<double, 4> renewable{p_map.pv1, p_map.pv2, p_map.wt1, p_map.wt2};
  for (size_t i = 0; i < renewable.size(); ++i) {
    lim.hi[i] = deload * renewable[i] / base;
    lim.lo[i] = -lim.hi[i];
  }
  lim.lo[kDu] = (0.0 - dispatch_du) / base;
  lim.hi[kDu] = (params.p_du - dispatch_du) / base;
  lim.lo[kBess] = (-params.p_bess - dispatch_bess) / base;
  lim.hi[kBess] = (params.p_bess - dispatch_bess) / base;
  return lim;
}

}  // namespace mgfreq
