#pragma once

// Potentials U(x, v) on R^n x R^n and the derived function
//
//   h = -1/2 <v, grad_x U> + 1/2 Laplacian_v U - 1/4 |grad_v U|^2
//
// whose Hessian lower bound -diag(k1 I, k2 I) selects the Harnack regime.
//
// Quadratic potentials U = 1/2 z^T Q z + l^T z + c satisfy the growth
// hypotheses of the matrix Harnack estimate (bounded Hessian); nothing about
// growth is checked at runtime.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "harnack/block_sym.hpp"
#include "harnack/errors.hpp"

namespace harnack {

struct ZeroPotential {
  int n = 1;
};

struct QuadraticPotential {
  MatrixXd Q;  // symmetric 2n x 2n
  VectorXd linear;
  double constant = 0.0;
};

struct CustomPotential {
  int n = 1;
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&)> hessian;
  /// Constant Hessian of h, asserted by the caller. Required for
  /// curvature_of; h itself never needs it.
  std::optional<MatrixXd> h_hessian;
};

class Potential {
 public:
  using Variant = std::variant<ZeroPotential, QuadraticPotential, CustomPotential>;

  static Potential zero(int n = 1) { return Potential(ZeroPotential{n}, "zero"); }

  static Potential quadratic(MatrixXd Q, VectorXd linear, double constant,
                             std::string name = "quadratic") {
    if (Q.rows() != Q.cols() || Q.rows() % 2 != 0 || Q.rows() == 0)
      throw InvalidArgument("Potential::quadratic: Q must be 2n x 2n");
    if (asymmetry(Q) > 1e-12 * std::max(1.0, max_abs(Q)))
      throw InvalidArgument("Potential::quadratic: Q must be symmetric");
    if (linear.size() == 0) linear = VectorXd::Zero(Q.rows());
    if (linear.size() != Q.rows()) throw InvalidArgument("Potential::quadratic: bad linear term");
    return Potential(QuadraticPotential{0.5 * (Q + Q.transpose()), std::move(linear), constant},
                     std::move(name));
  }

  /// U = alpha |v|^2 / 2.
  static Potential velocity_quadratic(double alpha, int n = 1) {
    MatrixXd Q = MatrixXd::Zero(2 * n, 2 * n);
    Q.bottomRightCorner(n, n) = alpha * MatrixXd::Identity(n, n);
    return quadratic(Q, VectorXd::Zero(2 * n), 0.0, "vsq");
  }

  /// U = beta <x, v>.
  static Potential cross(double beta, int n = 1) {
    MatrixXd Q = MatrixXd::Zero(2 * n, 2 * n);
    Q.topRightCorner(n, n) = beta * MatrixXd::Identity(n, n);
    Q.bottomLeftCorner(n, n) = beta * MatrixXd::Identity(n, n);
    return quadratic(Q, VectorXd::Zero(2 * n), 0.0, "xv");
  }

  static Potential custom(CustomPotential c, std::string name = "custom") {
    if (c.n < 1 || !c.value || !c.gradient || !c.hessian)
      throw InvalidArgument("Potential::custom: value, gradient and hessian are required");
    return Potential(std::move(c), std::move(name));
  }

  int n() const {
    return std::visit(
        [](const auto& p) -> int {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, QuadraticPotential>)
            return static_cast<int>(p.Q.rows() / 2);
          else
            return p.n;
        },
        u_);
  }

  const std::string& name() const { return name_; }
  const Variant& variant() const { return u_; }

  double value(const VectorXd& z) const {
    check(z);
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ZeroPotential>)
            return 0.0;
          else if constexpr (std::is_same_v<T, QuadraticPotential>)
            return 0.5 * z.dot(p.Q * z) + p.linear.dot(z) + p.constant;
          else
            return p.value(z);
        },
        u_);
  }

  VectorXd gradient(const VectorXd& z) const {
    check(z);
    return std::visit(
        [&](const auto& p) -> VectorXd {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ZeroPotential>)
            return VectorXd::Zero(z.size());
          else if constexpr (std::is_same_v<T, QuadraticPotential>)
            return p.Q * z + p.linear;
          else
            return p.gradient(z);
        },
        u_);
  }

  MatrixXd hessian(const VectorXd& z) const {
    check(z);
    return std::visit(
        [&](const auto& p) -> MatrixXd {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ZeroPotential>)
            return MatrixXd::Zero(z.size(), z.size());
          else if constexpr (std::is_same_v<T, QuadraticPotential>)
            return p.Q;
          else
            return p.hessian(z);
        },
        u_);
  }

 private:
  Potential(Variant u, std::string name) : u_(std::move(u)), name_(std::move(name)) {}

  void check(const VectorXd& z) const {
    if (z.size() != 2 * n())
      throw InvalidArgument("Potential: point has dimension " + std::to_string(z.size()) +
                            ", expected " + std::to_string(2 * n()));
  }

  Variant u_;
  std::string name_;
};

inline double compute_h(const Potential& U, const VectorXd& z) {
  const int n = U.n();
  const VectorXd g = U.gradient(z);
  const MatrixXd H = U.hessian(z);
  const auto v = z.tail(n);
  return -0.5 * v.dot(g.head(n)) + 0.5 * H.bottomRightCorner(n, n).trace() -
         0.25 * g.tail(n).squaredNorm();
}

/// Gradient of h. Analytic for zero/quadratic potentials, central differences
/// of compute_h otherwise.
inline VectorXd h_gradient(const Potential& U, const VectorXd& z) {
  const int n = U.n();
  if (std::holds_alternative<ZeroPotential>(U.variant())) return VectorXd::Zero(2 * n);
  if (const auto* q = std::get_if<QuadraticPotential>(&U.variant())) {
    const VectorXd g = q->Q * z + q->linear;
    VectorXd out = VectorXd::Zero(2 * n);
    out.tail(n) -= 0.5 * g.head(n);
    out -= 0.5 * q->Q.leftCols(n) * z.tail(n);
    out -= 0.5 * q->Q.rightCols(n) * g.tail(n);
    return out;
  }
  VectorXd out(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    const double step = 1e-5 * std::max(1.0, std::abs(z(i)));
    VectorXd zp = z, zm = z;
    zp(i) += step;
    zm(i) -= step;
    out(i) = (compute_h(U, zp) - compute_h(U, zm)) / (2.0 * step);
  }
  return out;
}

/// Constant Hessian of h, if the potential has one.
inline std::optional<MatrixXd> h_hessian(const Potential& U) {
  const int n = U.n();
  if (std::holds_alternative<ZeroPotential>(U.variant())) return MatrixXd::Zero(2 * n, 2 * n);
  if (const auto* q = std::get_if<QuadraticPotential>(&U.variant())) {
    MatrixXd ev_ex = MatrixXd::Zero(2 * n, 2 * n);  // E_v^T E_x
    ev_ex.bottomLeftCorner(n, n) = MatrixXd::Identity(n, n);
    MatrixXd pv = MatrixXd::Zero(2 * n, 2 * n);  // E_v^T E_v
    pv.bottomRightCorner(n, n) = MatrixXd::Identity(n, n);
    const MatrixXd A = ev_ex * q->Q;
    return -0.5 * (A + A.transpose()) - 0.5 * q->Q * pv * q->Q;
  }
  return std::get<CustomPotential>(U.variant()).h_hessian;
}

struct CurvaturePair {
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Minimal non-negative (k1, k2) with Hess(h) + diag(k1 I, k2 I) >= 0.
///
/// With no (x, v) coupling in Hess(h) the two blocks decouple and the answer
/// is exact. With coupling, the smallest admissible k2 is an infimum that is
/// not attained (k1 diverges there); among the Pareto-minimal pairs the one
/// minimising k1 + k2 is returned, found by a geometric scan over k2 followed
/// by ternary refinement (k1 is convex in k2 via the Schur complement).
inline CurvaturePair curvature_of(const Potential& U) {
  const auto hh = h_hessian(U);
  if (!hh) {
    throw Unsupported("curvature_of: Hessian of h is not known to be constant for potential '" +
                      U.name() + "'");
  }
  const int n = U.n();
  const MatrixXd& H = *hh;
  const MatrixXd Hxx = H.topLeftCorner(n, n), Hxv = H.topRightCorner(n, n),
                 Hvv = H.bottomRightCorner(n, n);
  const double k2_floor = std::max(0.0, -min_eigenvalue(Hvv));
  CurvaturePair out;
  if (max_abs(Hxv) <= 1e-14 * std::max(1.0, max_abs(H))) {
    out.k1 = std::max(0.0, -min_eigenvalue(Hxx));
    out.k2 = k2_floor;
    return out;
  }
  auto k1_of = [&](double k2) {
    const MatrixXd shifted = Hvv + k2 * MatrixXd::Identity(n, n);
    const MatrixXd schur = Hxx - Hxv * shifted.ldlt().solve(Hxv.transpose());
    return std::max(0.0, -min_eigenvalue(schur));
  };
  const double scale = std::max(1.0, max_abs(H));
  double best_d = scale, best = k1_of(k2_floor + scale) + k2_floor + scale;
  for (int j = -10; j <= 40; ++j) {
    const double d = scale * std::ldexp(1.0, -j);
    const double total = k1_of(k2_floor + d) + k2_floor + d;
    if (total < best) {
      best = total;
      best_d = d;
    }
  }
  double lo = best_d / 2.0, hi = best_d * 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (k1_of(k2_floor + m1) + m1 <= k1_of(k2_floor + m2) + m2)
      hi = m2;
    else
      lo = m1;
  }
  out.k2 = k2_floor + 0.5 * (lo + hi);
  out.k1 = k1_of(out.k2);
  // Push onto the feasible side of rounding.
  MatrixXd shifted = H;
  shifted.topLeftCorner(n, n).diagonal().array() += out.k1;
  shifted.bottomRightCorner(n, n).diagonal().array() += out.k2;
  const double slack = min_eigenvalue(shifted);
  if (slack < 0.0) out.k1 += -slack * 2.0;
  return out;
}

}  // namespace harnack
