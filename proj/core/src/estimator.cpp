#include "mgfreq/estimator.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

EstimatorConfig EstimatorConfig::defaults() {
  EstimatorConfig c;
  c.q = Matrix::Zero(kAugmentedStates, kAugmentedStates);
  c.q.diagonal().head(kNumStates).setConstant(1e-8);
  c.q(kNumStates, kNumStates) = 1e-4;
  c.r_noise = 1e-8;
  c.p0 = 1e-2 * Matrix::Identity(kAugmentedStates, kAugmentedStates);
  return c;
}

void EstimatorConfig::validate() const {
  if (q.rows() != kAugmentedStates || q.cols() != kAugmentedStates) throw std::invalid_argument("estimator: Q must be 11x11");
  if (p0.rows() != kAugmentedStates || p0.cols() != kAugmentedStates) throw std::invalid_argument("estimator: P0 must be 11x11");
  if (!(r_noise > 0.0)) throw std::invalid_argument("estimator: measurement noise variance must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> qe(0.5 * (q + q.transpose()));
  if (qe.eigenvalues().minCoeff() < -1e-15) throw std::invalid_argument("estimator: Q must be positive semidefinite");
  Eigen::LLT<Matrix> pl(p0);
  if (pl.info() != Eigen::Success) throw std::invalid_argument("estimator: P0 must be positive definite");
}

EstimatorState initial_estimator_state(const EstimatorConfig& config) {
  EstimatorState s;
  s.p = config.p0;
  return s;
}

Vector aggregate_disturbance_column(const PlantModel& model) {
  if (!model.discretized()) throw std::invalid_argument("estimator: model is not discretized");
  const Vector col = model.d.col(0);
  const double scale = std::max(col.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index j = 1; j < model.d.cols(); ++j) {
    if ((model.d.col(j) - col).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("estimator: disturbance channels do not share a common column");
    }
  }
  return col;
}

AugmentedSystem augmented_system(const PlantModel& model) {
  AugmentedSystem s;
  s.a = Matrix::Zero(kAugmentedStates, kAugmentedStates);
  s.a.topLeftCorner(kNumStates, kNumStates) = model.a;
  s.a.block(0, kNumStates, kNumStates, 1) = aggregate_disturbance_column(model);
  s.a(kNumStates, kNumStates) = 1.0;
  s.b = Matrix::Zero(kAugmentedStates, kNumUnits);
  s.b.topRows(kNumStates) = model.b;
  s.c = Matrix::Zero(1, kAugmentedStates);
  s.c.leftCols(kNumStates) = model.c;
  return s;
}

int augmented_observability_rank(const PlantModel& model) {
  const AugmentedSystem s = augmented_system(model);
  Matrix obs(kAugmentedStates, kAugmentedStates);
  Matrix row = s.c;
  for (int i = 0; i < kAugmentedStates; ++i) {
    obs.row(i) = row / std::max(row.norm(), 1e-300);
    row = row * s.a;
  }
  return numerical_rank(obs, 1e-9);
}

bool augmented_detectable(const PlantModel& model, double margin) {
  using Complex = std::complex<double>;
  using ComplexMatrix = Eigen::MatrixXcd;
  const AugmentedSystem s = augmented_system(model);
  Eigen::EigenSolver<Matrix> es(s.a);
  const Eigen::VectorXcd eig = es.eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (std::abs(eig(i)) < 1.0 - margin) continue;
    ComplexMatrix pbh(kAugmentedStates + 1, kAugmentedStates);
    pbh.topRows(kAugmentedStates) =
        eig(i) * ComplexMatrix::Identity(kAugmentedStates, kAugmentedStates) - s.a.cast<Complex>();
    pbh.bottomRows(1) = s.c.cast<Complex>();
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(pbh);
    qr.setThreshold(1e-9);
    if (qr.rank() < kAugmentedStates) return false;
  }
  return true;
}

void require_detectable(const PlantModel& model) {
  if (!augmented_detectable(model)) {
    throw std::logic_error(fmt::format(
        "estimator: augmented pair is not detectable (observability rank {} of {})",
        augmented_observability_rank(model), kAugmentedStates));
  }
}

EstimatorState estimator_step(const EstimatorState& state, const ControlVector& u, double y, const PlantModel& model,
                              const EstimatorConfig& config) {
  if (!std::isfinite(y)) throw std::invalid_argument("estimator: measurement is not finite");
  const AugmentedSystem s = augmented_system(model);

  Vector z(kAugmentedStates);
  z.head(kNumStates) = state.x_hat;
  z(kNumStates) = state.d_hat;

  const Vector z_pred = s.a * z + s.b * u;
  const Matrix p_pred = s.a * state.p * s.a.transpose() + config.q;

  const double innovation_var = (s.c * p_pred * s.c.transpose())(0, 0) + config.r_noise;
  const Vector gain = p_pred * s.c.transpose() / innovation_var;
  const double innovation = y - (s.c * z_pred)(0, 0);

  const Vector z_new = z_pred + gain * innovation;
  const Matrix ikc = Matrix::Identity(kAugmentedStates, kAugmentedStates) - gain * s.c;
  Matrix p_new = ikc * p_pred * ikc.transpose() + config.r_noise * gain * gain.transpose();
  p_new = 0.5 * (p_new + p_new.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(p_new);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < 0.0) {
    if (-min_eig > 1e-6) {
      throw std::runtime_error(fmt::format("estimator: covariance lost positive semidefiniteness ({:.3e})", min_eig));
    }
    p_new = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  }

  EstimatorState next;
  next.prev_x_hat = state.x_hat;
  next.prev_d_hat = state.d_hat;
  next.x_hat = z_new.head(kNumStates);
  next.d_hat = z_new(kNumStates);
  next.p = std::move(p_new);
  next.innovation = innovation;
  return next;
}

}  // namespace mgfreq
