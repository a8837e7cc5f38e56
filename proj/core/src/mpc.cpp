#include "mgfreq/mpc.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

void MpcConfig::validate() const {
  if (p < 1 || m < 1 || m > p) throw std::invalid_argument(fmt::format("mpc: need 1 <= m <= p, got m={} p={}", m, p));
  if (!(ts > 0.0)) throw std::invalid_argument("mpc: ts must be positive");
  for (double w : {alpha, beta_pv, beta_wt, beta_du, beta_bess}) {
    if (!(w > 0.0)) throw std::invalid_argument("mpc: all weights must be positive");
  }
}

PredictionMatrices build_prediction_matrices(const PlantModel& model, const MpcConfig& config) {
  config.validate();
  if (!model.discretized()) throw std::invalid_argument("mpc: model is not discretized");
  if (std::abs(model.ts - config.ts) > 1e-12) {
    throw std::invalid_argument(fmt::format("mpc: model Ts {} differs from controller Ts {}", model.ts, config.ts));
  }
  const int p = config.p;
  const int m = config.m;
  const Eigen::Index nx = model.a.rows();
  const Eigen::Index nu = model.b.cols();
  const Eigen::Index nd = model.d.cols();
  const Vector d_col = aggregate_disturbance_column(model);

  // Running sums over i = 1..r of C A^i and of C A^(i-1) [B | D | d_col].
  std::vector<Matrix> ca_sum(static_cast<size_t>(p) + 1);
  std::vector<Matrix> cb_sum(static_cast<size_t>(p) + 1);
  std::vector<Matrix> cd_sum(static_cast<size_t>(p) + 1);
  std::vector<double> cdagg_sum(static_cast<size_t>(p) + 1, 0.0);
  ca_sum[0] = Matrix::Zero(1, nx);
  cb_sum[0] = Matrix::Zero(1, nu);
  cd_sum[0] = Matrix::Zero(1, nd);
  Matrix c_pow = model.c;  // C A^(i-1)
  for (int i = 1; i <= p; ++i) {
    const auto k = static_cast<size_t>(i);
    cb_sum[k] = cb_sum[k - 1] + c_pow * model.b;
    cd_sum[k] = cd_sum[k - 1] + c_pow * model.d;
    cdagg_sum[k] = cdagg_sum[k - 1] + (c_pow * d_col)(0, 0);
    c_pow = c_pow * model.a;
    ca_sum[k] = ca_sum[k - 1] + c_pow;
  }

  PredictionMatrices pm;
  pm.s_x.resize(p, nx);
  pm.s_d.resize(p, 1);
  pm.s_b = Matrix::Zero(p, nu * m);
  pm.s_d_full = Matrix::Zero(p, nd * m);
  pm.i_vec = Vector::Ones(p);
  for (int r = 1; r <= p; ++r) {
    pm.s_x.row(r - 1) = ca_sum[static_cast<size_t>(r)];
    pm.s_d(r - 1, 0) = cdagg_sum[static_cast<size_t>(r)];
    for (int j = 1; j <= std::min(r, m); ++j) {
      const auto lag = static_cast<size_t>(r - j + 1);
      pm.s_b.block(r - 1, (j - 1) * nu, 1, nu) = cb_sum[lag];
      pm.s_d_full.block(r - 1, (j - 1) * nd, 1, nd) = cd_sum[lag];
    }
  }
  return pm;
}

Matrix output_weight_squared(const MpcConfig& config) {
  return config.alpha * config.alpha * Matrix::Identity(config.p, config.p);
}

Matrix move_weight_squared(const MpcConfig& config) {
  const UnitArray beta = config.move_weights();
  Matrix w = Matrix::Zero(kNumUnits * config.m, kNumUnits * config.m);
  for (int s = 0; s < config.m; ++s) {
    for (int j = 0; j < kNumUnits; ++j) {
      const double b = beta[static_cast<size_t>(j)];
      w(s * kNumUnits + j, s * kNumUnits + j) = b * b;
    }
  }
  return w;
}

Matrix mpc_hessian(const PredictionMatrices& pred, const MpcConfig& config) {
  Matrix h = pred.s_b.transpose() * output_weight_squared(config) * pred.s_b + move_weight_squared(config);
  return 0.5 * (h + h.transpose());
}

Matrix mpc_gain(const PredictionMatrices& pred, const MpcConfig& config) {
  const Matrix h = mpc_hessian(pred, config);
  return h.llt().solve(pred.s_b.transpose() * output_weight_squared(config));
}

MoveConstraints build_constraints(const ReserveLimits& limits, const UnitArray& u_prev, const MpcConfig& config) {
  const int m = config.m;
  const int nvar = kNumUnits * m;
  MoveConstraints mc;
  std::vector<Vector> rows;
  std::vector<double> rhs;

  for (int j = 0; j < kNumUnits; ++j) {
    const auto ju = static_cast<size_t>(j);
    const double lo = limits.lo[ju];
    const double hi = limits.hi[ju];
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
      throw std::invalid_argument(fmt::format("mpc: invalid limits for unit {}: [{}, {}]", kUnitNames[ju], lo, hi));
    }
    const bool total = config.limit_form == LimitForm::kTotal;
    const double base = total ? u_prev[ju] : 0.0;
    if (total && (u_prev[ju] < lo || u_prev[ju] > hi)) mc.drifted_units.push_back(j);

    for (int s = 0; s < m; ++s) {
      Vector row = Vector::Zero(nvar);
      for (int tau = total ? 0 : s; tau <= s; ++tau) row(tau * kNumUnits + j) = 1.0;
      if (std::isfinite(lo)) {
        rows.push_back(row);
        rhs.push_back(lo - base);
        mc.rows.push_back({j, s, false});
      }
      if (std::isfinite(hi)) {
        rows.push_back(-row);
        rhs.push_back(base - hi);
        mc.rows.push_back({j, s, true});
      }
    }
  }

  mc.cu.resize(static_cast<Eigen::Index>(rows.size()), nvar);
  mc.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    mc.cu.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    mc.b(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  return mc;
}

MpcStepResult control_step(const EstimatorState& est, double y, const UnitArray& u_prev, const ReserveLimits& limits,
                           const PredictionMatrices& pred, const MpcConfig& config) {
  const int nvar = kNumUnits * config.m;
  if (pred.s_b.cols() != nvar || pred.s_b.rows() != config.p) {
    throw std::invalid_argument("mpc: prediction matrices do not match the configured horizons");
  }

  MpcStepResult res;
  res.free_response = pred.s_x * est.delta_x() + pred.i_vec * y + pred.s_d.col(0) * est.delta_d();

  const Matrix wy = output_weight_squared(config);
  res.qp.h = mpc_hessian(pred, config);
  res.qp.f = pred.s_b.transpose() * wy * res.free_response;

  MoveConstraints mc;
  if (config.constraints_enabled) {
    mc = build_constraints(limits, u_prev, config);
    res.qp.cu = mc.cu;
    res.qp.b = mc.b;
    res.drifted_units = mc.drifted_units;
  } else {
    res.qp.cu.resize(0, nvar);
    res.qp.b.resize(0);
  }

  try {
    res.qp_solution = solve_qp(res.qp);
  } catch (const QpInfeasible& e) {
    const auto& row = mc.rows.at(static_cast<size_t>(e.row()));
    throw QpInfeasible(e.row(), fmt::format("mpc: {} (unit {}, step {}, {} bound)", e.what(),
                                            kUnitNames[static_cast<size_t>(row.unit)], row.step,
                                            row.upper ? "upper" : "lower"));
  }

  res.move_sequence = res.qp_solution.x;
  res.increment = res.move_sequence.head(kNumUnits);
  res.command = to_vector(u_prev) + res.increment;
  res.predicted_freq = res.free_response + pred.s_b * res.move_sequence;

  const Vector wu = move_weight_squared(config).diagonal();
  res.objective = res.predicted_freq.dot(wy * res.predicted_freq) + res.move_sequence.dot(wu.cwiseProduct(res.move_sequence));

  res.qp_active.assign(static_cast<size_t>(res.qp.cu.rows()), false);
  for (int idx : res.qp_solution.active_set) {
    res.qp_active[static_cast<size_t>(idx)] = true;
    const auto& row = mc.rows[static_cast<size_t>(idx)];
    if (row.step == 0) res.binding[static_cast<size_t>(row.unit)] = row.upper ? 1 : -1;
  }
  return res;
}

}  // namespace mgfreq
