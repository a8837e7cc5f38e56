#include "mgfreq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mgfreq {

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) throw NumericsError(fmt::format("{} has non-finite entries", name));
}

Matrix matrix_exponential(const Matrix& a, double t) {
  if (a.rows() != a.cols()) {
    throw NumericsError(fmt::format("matrix_exponential: {}x{} is not square", a.rows(), a.cols()));
  }
  require_finite(a, "matrix_exponential input");
  if (!std::isfinite(t) || t < 0.0) throw NumericsError("matrix_exponential: t must be finite and >= 0");

  const Eigen::Index n = a.rows();
  Matrix x = a * t;
  const double norm = x.cwiseAbs().colwise().sum().maxCoeff();  // induced 1-norm

  // Scale so the series argument has norm <= 1/2; 20 terms then leave a
  // truncation error below 0.5^21 / 21! relative to the sum.
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  x /= std::ldexp(1.0, squarings);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 20; ++k) {
    term = term * x / static_cast<double>(k);
    result += term;
    if (k >= 13 && term.cwiseAbs().maxCoeff() <= 1e-18 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

DiscreteMatrices discretize(const Matrix& ac, const Matrix& bc, const Matrix& dc, double ts) {
  const Eigen::Index n = ac.rows();
  if (ac.cols() != n) throw NumericsError("discretize: Ac must be square");
  if (bc.rows() != n) throw NumericsError(fmt::format("discretize: Bc has {} rows, expected {}", bc.rows(), n));
  if (dc.rows() != n) throw NumericsError(fmt::format("discretize: Dc has {} rows, expected {}", dc.rows(), n));
  if (!(ts > 0.0) || !std::isfinite(ts)) throw NumericsError("discretize: Ts must be positive");

  const Eigen::Index nu = bc.cols();
  const Eigen::Index nd = dc.cols();
  const Eigen::Index total = n + nu + nd;

  Matrix block = Matrix::Zero(total, total);
  block.topLeftCorner(n, n) = ac;
  block.block(0, n, n, nu) = bc;
  block.block(0, n + nu, n, nd) = dc;

  const Matrix e = matrix_exponential(block, ts);
  return DiscreteMatrices{e.topLeftCorner(n, n), e.block(0, n, n, nu), e.block(0, n + nu, n, nd)};
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_infeasibility, dual_infeasibility, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& p, const Vector& x, const Vector& lambda) {
  KktResiduals r;
  Vector grad = p.h * x + p.f;
  if (p.cu.rows() > 0) grad -= p.cu.transpose() * lambda;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (p.cu.rows() > 0) {
    const Vector slack = p.cu * x - p.b;
    r.primal_infeasibility = std::max(0.0, -slack.minCoeff());
    r.dual_infeasibility = std::max(0.0, -lambda.minCoeff());
    r.complementarity = lambda.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  return r;
}

int numerical_rank(const Matrix& m, double rel_tol) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(rel_tol);
  return static_cast<int>(qr.rank());
}

namespace {

void validate(const QpProblem& p) {
  const Eigen::Index n = p.h.rows();
  if (p.h.cols() != n) throw NumericsError("solve_qp: H must be square");
  if (p.f.size() != n) throw NumericsError("solve_qp: f size does not match H");
  if (p.cu.rows() != p.b.size()) throw NumericsError("solve_qp: Cu rows do not match b");
  if (p.cu.rows() > 0 && p.cu.cols() != n) throw NumericsError("solve_qp: Cu columns do not match H");
  require_finite(p.h, "H");
  require_finite(p.f, "f");
  require_finite(p.cu, "Cu");
  require_finite(p.b, "b");
  const double scale = std::max(1.0, p.h.cwiseAbs().maxCoeff());
  if ((p.h - p.h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericsError("solve_qp: H is not symmetric");
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, double tol) {
  validate(p);
  if (!(tol > 0.0)) throw NumericsError("solve_qp: tol must be positive");

  const Eigen::Index n = p.h.rows();
  const Eigen::Index q = p.cu.rows();

  Eigen::LLT<Matrix> llt(p.h);
  if (llt.info() != Eigen::Success) throw NumericsError("solve_qp: H is not positive definite");
  const Matrix h_inv = llt.solve(Matrix::Identity(n, n));

  QpSolution sol;
  sol.x = -h_inv * p.f;
  sol.multipliers = Vector::Zero(q);

  std::vector<int> active;
  std::vector<double> lambda;
  std::vector<char> in_active(static_cast<size_t>(q), 0);

  const int cap = std::max<int>(50, static_cast<int>(10 * q * n));
  bool capped = false;

  auto drop = [&](size_t j) {
    in_active[static_cast<size_t>(active[j])] = 0;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(j));
    lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(j));
  };

  while (q > 0 && !capped) {
    // Most violated inactive constraint, measured in row-normalized units.
    int violated = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
      if (in_active[static_cast<size_t>(i)]) continue;
      const double row_norm = std::max(p.cu.row(i).norm(), 1e-300);
      const double s = (p.cu.row(i).dot(sol.x) - p.b(i)) / row_norm;
      if (s < worst) {
        worst = s;
        violated = static_cast<int>(i);
      }
    }
    if (violated < 0 || worst >= -1e-3 * tol) break;

    const Vector np = p.cu.row(violated).transpose();
    const Vector h_inv_np = h_inv * np;
    double lambda_new = 0.0;

    for (;;) {
      if (++sol.iterations > cap) {
        capped = true;
        break;
      }
      const auto na = static_cast<Eigen::Index>(active.size());
      Vector z = h_inv_np;
      Vector r(na);
      if (na > 0) {
        Matrix nmat(n, na);
        for (Eigen::Index j = 0; j < na; ++j) nmat.col(j) = p.cu.row(active[static_cast<size_t>(j)]).transpose();
        const Matrix h_inv_n = h_inv * nmat;
        const Matrix m = nmat.transpose() * h_inv_n;
        r = m.ldlt().solve(nmat.transpose() * h_inv_np);
        z -= h_inv_n * r;
      }

      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index j = 0; j < na; ++j) {
        if (r(j) > 0.0) {
          const double ratio = lambda[static_cast<size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            blocking = j;
          }
        }
      }

      const double zn = z.dot(np);
      const double slack = np.dot(sol.x) - p.b(violated);
      const bool z_zero = zn <= 1e-13 * np.dot(h_inv_np);
      const double t2 = z_zero ? std::numeric_limits<double>::infinity() : -slack / zn;

      if (z_zero && blocking < 0) {
        throw QpInfeasible(violated, fmt::format("solve_qp: constraint row {} cannot be satisfied", violated));
      }

      if (z_zero) {
        // Pure dual step: shift weight from a blocking constraint onto the new one.
        for (Eigen::Index j = 0; j < na; ++j) lambda[static_cast<size_t>(j)] -= t1 * r(j);
        lambda_new += t1;
        drop(static_cast<size_t>(blocking));
        continue;
      }

      const double t = std::min(t1, t2);
      sol.x += t * z;
      for (Eigen::Index j = 0; j < na; ++j) lambda[static_cast<size_t>(j)] -= t * r(j);
      lambda_new += t;

      if (t2 <= t1) {
        active.push_back(violated);
        lambda.push_back(lambda_new);
        in_active[static_cast<size_t>(violated)] = 1;
        break;
      }
      drop(static_cast<size_t>(blocking));
    }
  }

  for (size_t j = 0; j < active.size(); ++j) sol.multipliers(active[j]) = std::max(0.0, lambda[j]);
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.objective = 0.5 * sol.x.dot(p.h * sol.x) + p.f.dot(sol.x);

  if (capped && q > 0) {
    const Vector slack = p.cu * sol.x - p.b;
    Eigen::Index worst_row = 0;
    const double min_slack = slack.minCoeff(&worst_row);
    if (min_slack < -1e-6) {
      throw QpInfeasible(static_cast<int>(worst_row),
                         fmt::format("solve_qp: iteration cap reached with row {} violated by {:.3e}", worst_row,
                                     -min_slack));
    }
  }
  return sol;
}

}  // namespace mgfreq
