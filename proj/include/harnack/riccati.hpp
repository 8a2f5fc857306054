#pragma once

// Matrix Riccati engine.
//
// S solves   dS/dt = -C S - S C^T - D + S K S,   S(0) = 0,
// and N = S^{-1} solves the dual equation
//            dN/dt = N C + C^T N + N D N - K,    N^{-1} -> 0 as t -> 0.
// N is the sharp lower bound for the Hessian of log(rho) - U/2.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "harnack/block_sym.hpp"
#include "harnack/errors.hpp"

namespace harnack {

struct RiccatiOptions {
  /// Local error tolerance of the embedded 4(5) pair (mixed abs/rel).
  double tol = 1e-10;
  /// Below this time bound_N inverts the Taylor expansion of S instead of an
  /// integrated value.
  double t_min = 1e-3;
  /// Asymmetry (relative to |S|) that aborts integration.
  double max_symmetry_drift = 1e-9;
  int max_steps = 1'000'000;
  /// Times the integrator must land on exactly (in addition to t_end).
  std::vector<double> stops;
};

struct RiccatiTrajectory {
  std::vector<double> t;
  std::vector<BlockSym2n> S;

  const BlockSym2n& back() const { return S.back(); }
  std::size_t size() const { return t.size(); }
};

/// Right-hand side -C S - S C^T - D + S K S.
inline MatrixXd riccati_rhs(const MatrixXd& S, const StructuralPair& cd,
                            const MatrixXd& K) {
  return -cd.C * S - S * cd.C.transpose() - cd.D + S * K * S;
}

namespace detail {

inline void check_tol(double tol) {
  if (!(tol > 1e-14 && tol < 1e-2)) {
    throw InvalidArgument("riccati: tolerance must lie in (1e-14, 1e-2), got " +
                          std::to_string(tol));
  }
}

}  // namespace detail

/// Taylor expansion of S about t = 0, summed until the terms drop below
/// double precision. Coefficients follow from
///   (k+1) S_{k+1} = -C S_k - S_k C^T - [k=0] D + sum_{i+j=k} S_i K S_j.
/// The leading terms are -[2t^3/3, t^2; t^2, 2t - 4 t^3 k2 / 3].
/// Only meant for small t (the series has a finite radius of convergence).
inline BlockSym2n small_time_S(const CurvatureBound& K, double t, int max_order = 60) {
  const int n = K.n();
  const auto cd = build_structural(n);
  const MatrixXd& k = K.matrix();
  std::vector<MatrixXd> coef;
  coef.push_back(MatrixXd::Zero(2 * n, 2 * n));
  MatrixXd sum = MatrixXd::Zero(2 * n, 2 * n);
  double tp = 1.0;
  for (int order = 0; order < max_order; ++order) {
    MatrixXd next = -cd.C * coef[order] - coef[order] * cd.C.transpose();
    if (order == 0) next -= cd.D;
    for (int i = 1; i < order; ++i) next += coef[i] * k * coef[order - i];
    next /= static_cast<double>(order + 1);
    coef.push_back(next);
    tp *= t;
    const MatrixXd term = tp * next;
    sum += term;
    if (order >= 4 && max_abs(term) <= 1e-18 * std::max(max_abs(sum), 1e-300)) break;
  }
  return BlockSym2n(sum, 1e-10);
}

/// Integrate S from S(0) = 0 to t_end with an adaptive Dormand-Prince 5(4)
/// pair, projecting S onto its symmetric part after every accepted step.
/// Returns every accepted step (plus t = 0).
inline RiccatiTrajectory integrate_S(const CurvatureBound& K, double t_end,
                                     double tol, RiccatiOptions opts = {}) {
  detail::check_tol(tol);
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw InvalidArgument("integrate_S: t_end must be positive and finite");
  }
  const int n = K.n();
  const auto cd = build_structural(n);
  const MatrixXd& k = K.matrix();

  std::vector<double> stops;
  for (double s : opts.stops)
    if (s > 0.0 && s < t_end) stops.push_back(s);
  std::sort(stops.begin(), stops.end());
  stops.push_back(t_end);
  std::size_t next_stop = 0;

  // Dormand-Prince tableau (autonomous right-hand side, so no c_i).
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  RiccatiTrajectory out;
  MatrixXd S = MatrixXd::Zero(2 * n, 2 * n);
  double t = 0.0;
  out.t.push_back(t);
  out.S.emplace_back(S);

  auto f = [&](const MatrixXd& y) { return riccati_rhs(y, cd, k); };

  // S ~ -2t I near the origin, so the first step is limited by the cubic
  // (x,x) block; a tol^(1/3) start lets the controller find the scale quickly.
  double h = std::min(std::cbrt(tol), stops.front());
  MatrixXd k1 = f(S);
  int steps = 0;
  while (next_stop < stops.size()) {
    if (++steps > opts.max_steps) {
      throw StepUnderflow("integrate_S: step budget exhausted", t);
    }
    const double target = stops[next_stop];
    bool hits_stop = false;
    if (t + h >= target - 1e-15 * std::max(1.0, target)) {
      h = target - t;
      hits_stop = true;
    }
    const double h_floor = 1e-14 * std::max(1.0, t);
    if (h < h_floor) {
      throw StepUnderflow("integrate_S: step size underflow at t=" + std::to_string(t), t);
    }

    const MatrixXd k2 = f(S + h * a21 * k1);
    const MatrixXd k3 = f(S + h * (a31 * k1 + a32 * k2));
    const MatrixXd k4 = f(S + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const MatrixXd k5 = f(S + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const MatrixXd k6 = f(S + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const MatrixXd y5 = S + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const MatrixXd k7 = f(y5);
    const MatrixXd err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double scale =
          tol * (1.0 + std::max(std::abs(S.data()[i]), std::abs(y5.data()[i])));
      err_norm = std::max(err_norm, std::abs(err.data()[i]) / scale);
    }
    if (!std::isfinite(err_norm)) {
      h *= 0.1;
      continue;
    }

    if (err_norm <= 1.0) {
      const double drift = asymmetry(y5);
      if (drift > opts.max_symmetry_drift * std::max(1.0, max_abs(y5))) {
        throw NumericalError("integrate_S: symmetry drift " + std::to_string(drift) +
                             " at t=" + std::to_string(t + h));
      }
      S = 0.5 * (y5 + y5.transpose());
      t = hits_stop ? target : t + h;
      out.t.push_back(t);
      out.S.emplace_back(S);
      k1 = f(S);
      if (hits_stop) ++next_stop;
    }
    const double factor =
        err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    // After landing on a stop the step that was clipped is no guide.
    h = (hits_stop && err_norm <= 1.0) ? h * std::max(factor, 1.0) : h * factor;
  }
  return out;
}

/// The Riccati bound N(t) = S(t)^{-1}. For t < opts.t_min the inverse of the
/// Taylor expansion of S is used, since S = O(t) there and inverting an
/// integrated value loses digits.
inline BlockSym2n bound_N(const CurvatureBound& K, double t, double tol = 1e-10,
                          RiccatiOptions opts = {}) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InvalidArgument("bound_N: t must be positive");
  }
  const BlockSym2n S = t < opts.t_min ? small_time_S(K, t) : integrate_S(K, t, tol, opts).back();
  Eigen::FullPivLU<MatrixXd> lu(S.matrix());
  const Eigen::JacobiSVD<MatrixXd> svd(S.matrix());
  const auto& sv = svd.singularValues();
  const double rcond = sv(sv.size() - 1) / sv(0);
  if (!lu.isInvertible() || !(rcond > 1e-15)) {
    throw NumericalError("bound_N: S(t) numerically singular at t=" + std::to_string(t) +
                         " (reciprocal condition " + std::to_string(rcond) +
                         "); conditioning threshold t_min=" + std::to_string(opts.t_min));
  }
  const MatrixXd N = lu.inverse();
  return BlockSym2n(N, 1e-6);
}

/// H = [C^T, -K; -D, -C], row order (x, v | dual x, dual v). The fundamental
/// matrix of dM/dt = H M yields Riccati solutions as M1 M3^{-1}.
inline MatrixXd hamiltonian_matrix(const CurvatureBound& K) {
  const int n = K.n();
  const auto cd = build_structural(n);
  MatrixXd H(4 * n, 4 * n);
  H << cd.C.transpose(), -K.matrix(), -cd.D, -cd.C;
  return H;
}

/// Symplectic form J = [0 I; -I 0]; J H is symmetric for every symmetric K.
inline MatrixXd symplectic_J(int n) {
  MatrixXd J = MatrixXd::Zero(4 * n, 4 * n);
  J.topRightCorner(2 * n, 2 * n) = MatrixXd::Identity(2 * n, 2 * n);
  J.bottomLeftCorner(2 * n, 2 * n) = -MatrixXd::Identity(2 * n, 2 * n);
  return J;
}

/// Largest |t| * ||H||_1 accepted by fundamental_M; beyond it exp(tH) would
/// overflow double precision.
constexpr double kExpArgumentCap = 700.0;

/// M(t) = exp(t H) by scaling and squaring with a Pade approximant.
inline MatrixXd fundamental_M(const CurvatureBound& K, double t) {
  if (!std::isfinite(t)) throw InvalidArgument("fundamental_M: t must be finite");
  const MatrixXd H = hamiltonian_matrix(K);
  if (t == 0.0) return MatrixXd::Identity(H.rows(), H.cols());
  const double norm1 = H.cwiseAbs().colwise().sum().maxCoeff();
  if (std::abs(t) * norm1 > kExpArgumentCap) {
    throw NumericalError("fundamental_M: |t|*||H|| = " + std::to_string(std::abs(t) * norm1) +
                         " exceeds cap " + std::to_string(kExpArgumentCap));
  }
  const MatrixXd tH = t * H;
  MatrixXd M = tH.exp();
  if (!M.allFinite()) throw NumericalError("fundamental_M: non-finite exponential");
  return M;
}

/// M1 M3^{-1} from the left half of a fundamental matrix: the solution of
/// the N equation whose inverse vanishes at t = 0, i.e. bound_N(K, t). Its
/// inverse is the S of integrate_S.
inline BlockSym2n S_from_M(const MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() % 4 != 0 || M.rows() == 0) {
    throw InvalidArgument("S_from_M: expected a 4n x 4n matrix");
  }
  const auto m = M.rows() / 2;
  const MatrixXd M1 = M.topLeftCorner(m, m);
  const MatrixXd M3 = M.bottomLeftCorner(m, m);
  const Eigen::JacobiSVD<MatrixXd> svd(M3);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) > 0.0 && sv(sv.size() - 1) > 0.0
                          ? sv(0) / sv(sv.size() - 1)
                          : std::numeric_limits<double>::infinity();
  if (!(cond < 1e14)) {
    throw NumericalError("S_from_M: M3 block singular (condition number " +
                         std::to_string(cond) + ")");
  }
  const MatrixXd S = M1 * M3.inverse();
  return BlockSym2n(S, 1e-7);
}

enum class ComparisonStatus { Holds, Violated, HypothesisFailed };

inline const char* to_string(ComparisonStatus s) {
  switch (s) {
    case ComparisonStatus::Holds: return "holds";
    case ComparisonStatus::Violated: return "violated";
    case ComparisonStatus::HypothesisFailed: return "hypothesis-failed";
  }
  return "?";
}

struct ComparisonReport {
  ComparisonStatus status = ComparisonStatus::Holds;
  /// max over the grid of the largest eigenvalue of S_small - S_large.
  double worst_violation = -std::numeric_limits<double>::infinity();
  double worst_time = 0.0;
  std::vector<double> per_time_max_eig;
};

/// Checks the Riccati comparison principle: both equations share the
/// coefficients -D and -C, so the ordering hypothesis on the coefficient
/// block matrices reduces to K_small <= K_large, and the conclusion is
/// S_small(t) <= S_large(t).
inline ComparisonReport comparison_check(const CurvatureBound& K_small,
                                         const CurvatureBound& K_large,
                                         const std::vector<double>& t_grid,
                                         double eig_tol = 1e-8, double tol = 1e-10) {
  if (K_small.n() != K_large.n()) throw InvalidArgument("comparison_check: dimension mismatch");
  ComparisonReport rep;
  const int n = K_small.n();
  const auto cd = build_structural(n);
  auto coefficient_block = [&](const MatrixXd& k) {
    MatrixXd b(4 * n, 4 * n);
    const MatrixXd B = -cd.C;
    b << -cd.D, B, B.transpose(), k;
    return b;
  };
  const MatrixXd diff = coefficient_block(K_large.matrix()) - coefficient_block(K_small.matrix());
  if (min_eigenvalue(diff) < -1e-12) {
    rep.status = ComparisonStatus::HypothesisFailed;
    return rep;
  }
  if (t_grid.empty()) return rep;
  const double t_end = *std::max_element(t_grid.begin(), t_grid.end());
  RiccatiOptions opts;
  opts.stops = t_grid;
  const auto a = integrate_S(K_small, t_end, tol, opts);
  const auto b = integrate_S(K_large, t_end, tol, opts);
  auto at = [](const RiccatiTrajectory& tr, double t) -> const BlockSym2n& {
    for (std::size_t i = 0; i < tr.t.size(); ++i)
      if (tr.t[i] == t) return tr.S[i];
    throw NumericalError("comparison_check: grid time missing from trajectory");
  };
  for (double t : t_grid) {
    const double m = max_eigenvalue(at(a, t).matrix() - at(b, t).matrix());
    rep.per_time_max_eig.push_back(m);
    if (m > rep.worst_violation) {
      rep.worst_violation = m;
      rep.worst_time = t;
    }
  }
  rep.status = rep.worst_violation <= eig_tol ? ComparisonStatus::Holds
                                              : ComparisonStatus::Violated;
  return rep;
}

/// CSV with header `t,entry_00,entry_01,...`, entries row-major.
inline void write_trajectory_csv(std::ostream& os, const RiccatiTrajectory& tr) {
  if (tr.S.empty()) return;
  const int d = tr.S.front().dim();
  os << "t";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) os << ",entry_" << i << j;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << tr.t[k];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) os << ',' << tr.S[k](i, j);
    os << '\n';
  }
}

}  // namespace harnack
