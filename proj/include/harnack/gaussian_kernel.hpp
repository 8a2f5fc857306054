#pragma once

// Exact fundamental solution of  rho_t = Laplacian_v rho - <v, grad_x rho>
// (the U = 0 case). Starting from a point mass at (x0, v0), rho(t) is the
// Gaussian with
//
//   mean = (x0 + t v0, v0),
//   cov  = [ 2t^3/3 I   t^2 I ]
//          [   t^2 I    2t  I ].
//
// The v-Laplacian has coefficient 1 (not 1/2), so the velocity variance is
// 2t. Getting this factor wrong breaks the sharpness identity
// -cov^{-1} = N(t) with the Riccati bound.

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "harnack/block_sym.hpp"
#include "harnack/errors.hpp"
#include "harnack/riccati.hpp"

namespace harnack {

struct GaussianState {
  int n = 1;
  VectorXd mean;
  MatrixXd cov;
  double t = 0.0;
};

/// Covariance of the point-source kernel at time t.
inline MatrixXd point_source_cov(int n, double t) {
  const MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd cov(2 * n, 2 * n);
  cov << (2.0 * t * t * t / 3.0) * id, (t * t) * id, (t * t) * id, (2.0 * t) * id;
  return cov;
}

/// Free flow of the double integrator over time tau: (x, v) -> (x + tau v, v).
inline MatrixXd free_flow(int n, double tau) {
  MatrixXd phi = MatrixXd::Identity(2 * n, 2 * n);
  phi.topRightCorner(n, n) = tau * MatrixXd::Identity(n, n);
  return phi;
}

inline GaussianState propagate(const VectorXd& x0, const VectorXd& v0, double t) {
  if (!(t > 0.0)) throw InvalidArgument("propagate: t must be positive");
  if (x0.size() != v0.size() || x0.size() == 0) {
    throw InvalidArgument("propagate: x0 and v0 must have the same positive length");
  }
  const int n = static_cast<int>(x0.size());
  GaussianState s;
  s.n = n;
  s.t = t;
  s.mean.resize(2 * n);
  s.mean << x0 + t * v0, v0;
  s.cov = point_source_cov(n, t);
  return s;
}

inline GaussianState propagate_origin(int n, double t) {
  return propagate(VectorXd::Zero(n), VectorXd::Zero(n), t);
}

inline double density(const GaussianState& s, const VectorXd& y) {
  const Eigen::LLT<MatrixXd> llt(s.cov);
  const VectorXd d = y - s.mean;
  const double quad = d.dot(llt.solve(d));
  const double det = s.cov.determinant();
  return std::pow(2.0 * std::numbers::pi, -s.n) / std::sqrt(det) * std::exp(-0.5 * quad);
}

inline double log_density(const GaussianState& s, const VectorXd& y) {
  const Eigen::LLT<MatrixXd> llt(s.cov);
  const VectorXd d = y - s.mean;
  return -s.n * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(s.cov.determinant()) -
         0.5 * d.dot(llt.solve(d));
}

/// Hessian of log(rho) (constant in space): -cov^{-1}.
inline BlockSym2n log_hessian(const GaussianState& s) {
  return BlockSym2n(-s.cov.inverse(), 1e-9);
}

/// A Gaussian family indexed by time with analytic time derivatives.
struct GaussianTrajectory {
  int n = 1;
  std::function<VectorXd(double)> mean;
  std::function<VectorXd(double)> mean_dot;
  std::function<MatrixXd(double)> cov;
  std::function<MatrixXd(double)> cov_dot;
};

inline GaussianTrajectory point_source_trajectory(const VectorXd& x0, const VectorXd& v0) {
  const int n = static_cast<int>(x0.size());
  GaussianTrajectory tr;
  tr.n = n;
  tr.mean = [x0, v0, n](double t) {
    VectorXd m(2 * n);
    m << x0 + t * v0, v0;
    return m;
  };
  tr.mean_dot = [v0, n](double) {
    VectorXd m(2 * n);
    m << v0, VectorXd::Zero(n);
    return m;
  };
  tr.cov = [n](double t) { return point_source_cov(n, t); };
  tr.cov_dot = [n](double t) {
    const MatrixXd id = MatrixXd::Identity(n, n);
    MatrixXd c(2 * n, 2 * n);
    c << (2.0 * t * t) * id, (2.0 * t) * id, (2.0 * t) * id, 2.0 * id;
    return c;
  };
  return tr;
}

/// Max over samples of |rho_t - Laplacian_v rho + <v, grad_x rho>| where
/// rho = amplitude * N(mean(t), cov(t)). All derivatives are analytic.
inline double pde_residual(const GaussianTrajectory& tr,
                           const std::vector<std::pair<double, VectorXd>>& samples,
                           double amplitude = 1.0) {
  const int n = tr.n;
  double worst = 0.0;
  for (const auto& [t, y] : samples) {
    if (!(t > 0.0)) throw InvalidArgument("pde_residual: sample times must be positive");
    const MatrixXd cov = tr.cov(t);
    const Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw InvalidArgument("pde_residual: covariance is not positive definite at t=" +
                            std::to_string(t));
    const MatrixXd P = llt.solve(MatrixXd::Identity(cov.rows(), cov.cols()));
    const VectorXd d = y - tr.mean(t);
    const VectorXd Pd = P * d;
    const MatrixXd cdot = tr.cov_dot(t);
    const double rho = amplitude * std::pow(2.0 * std::numbers::pi, -n) /
                       std::sqrt(cov.determinant()) * std::exp(-0.5 * d.dot(Pd));
    const double dlog_dt = -0.5 * (P * cdot).trace() + 0.5 * Pd.dot(cdot * Pd) +
                           Pd.dot(tr.mean_dot(t));
    double lap_v = 0.0, transport = 0.0;
    for (int i = 0; i < n; ++i) {
      lap_v += Pd(n + i) * Pd(n + i) - P(n + i, n + i);
      transport += y(n + i) * (-Pd(i));
    }
    const double r = std::abs(rho * (dlog_dt - lap_v + transport));
    if (!(r <= worst)) worst = r;  // NaN propagates
  }
  return worst;
}

/// log_hessian of the origin kernel minus the Riccati bound for K = 0.
/// Identically zero: the kernel attains the matrix Harnack bound.
inline BlockSym2n sharpness_gap(double t, int n, double tol = 1e-10) {
  return log_hessian(propagate_origin(n, t)) - bound_N(CurvatureBound::zero(n), t, tol);
}

}  // namespace harnack
