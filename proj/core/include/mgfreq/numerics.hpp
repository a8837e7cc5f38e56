#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mgfreq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when the constraint set of a QP admits no point. `row()` is the
/// constraint the solver could not satisfy.
class QpInfeasible : public NumericsError {
 public:
  QpInfeasible(int row, const std::string& what) : NumericsError(what), row_(row) {}
  int row() const noexcept { return row_; }

 private:
  int row_;
};

/// e^(A t) by scaling and squaring of a truncated Taylor series.
Matrix matrix_exponential(const Matrix& a, double t = 1.0);

struct DiscreteMatrices {
  Matrix a;
  Matrix b;
  Matrix d;
};

/// Zero-order-hold discretization of x' = Ac x + Bc u + Dc d.
///
/// The input integrals are read off the exponential of the block matrix
/// [[Ac, Bc, Dc], [0, 0, 0], [0, 0, 0]], so a singular Ac needs no special
/// treatment.
DiscreteMatrices discretize(const Matrix& ac, const Matrix& bc, const Matrix& dc, double ts);

/// min 1/2 x'Hx + f'x  subject to  Cu x >= b.
struct QpProblem {
  Matrix h;
  Vector f;
  Matrix cu;
  Vector b;
};

struct QpSolution {
  Vector x;
  /// One multiplier per constraint row, zero for inactive rows.
  Vector multipliers;
  std::vector<int> active_set;
  double objective = 0.0;
  int iterations = 0;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Dense strictly convex QP by the Goldfarb-Idnani dual active-set method.
/// Throws QpInfeasible or NumericsError (H not positive definite, bad shapes).
QpSolution solve_qp(const QpProblem& problem, double tol = 1e-8);

KktResiduals kkt_residuals(const QpProblem& problem, const Vector& x, const Vector& multipliers);

/// Numerical rank by column-pivoted QR.
int numerical_rank(const Matrix& m, double rel_tol = 1e-10);

void require_finite(const Matrix& m, const char* name);

}  // namespace mgfreq
