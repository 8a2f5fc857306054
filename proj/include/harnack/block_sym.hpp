#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "harnack/errors.hpp"

namespace harnack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Largest |A - A^T| entry.
inline double asymmetry(const MatrixXd& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of the symmetric part of `a`. Semidefiniteness is
/// always decided with a symmetric eigensolve, never with Cholesky.
inline double min_eigenvalue(const MatrixXd& a) {
  const MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const MatrixXd& a) {
  const MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

inline double max_abs(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

/// Symmetric 2n x 2n matrix in (x, v) block layout:
///
///     [ xx  xv ]
///     [ vx  vv ]
///
/// Used for the Hessian of g = log(rho) - U/2, the Riccati bound N, its
/// inverse S, and the curvature matrix K. The stored matrix is kept exactly
/// symmetric: every constructor projects onto (A + A^T)/2 after checking that
/// the input was symmetric to 1e-12 (or to a caller-chosen tolerance).
class BlockSym2n {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  BlockSym2n() = default;

  explicit BlockSym2n(const MatrixXd& entries, double sym_tol = kSymmetryTol) {
    if (entries.rows() != entries.cols() || entries.rows() == 0 ||
        entries.rows() % 2 != 0) {
      throw InvalidArgument("BlockSym2n: expected a non-empty 2n x 2n matrix, got " +
                            std::to_string(entries.rows()) + "x" +
                            std::to_string(entries.cols()));
    }
    const double drift = asymmetry(entries);
    // Relative to the matrix scale so that large bounds (N ~ 1/t^3) are not
    // rejected for rounding-level asymmetry.
    const double scale = std::max(1.0, max_abs(entries));
    if (!(drift <= sym_tol * scale)) {
      throw InvalidArgument("BlockSym2n: asymmetry " + std::to_string(drift) +
                           " exceeds tolerance");
    }
    entries_ = 0.5 * (entries + entries.transpose());
  }

  static BlockSym2n zero(int n) { return BlockSym2n(MatrixXd::Zero(2 * n, 2 * n)); }

  /// Assemble from n x n blocks; `vv` and `xx` must be symmetric.
  static BlockSym2n from_blocks(const MatrixXd& xx, const MatrixXd& xv,
                                const MatrixXd& vv) {
    const auto n = xx.rows();
    MatrixXd m(2 * n, 2 * n);
    m << xx, xv, xv.transpose(), vv;
    return BlockSym2n(m);
  }

  /// Blocks proportional to the identity: (a I, b I; b I, c I).
  static BlockSym2n scalar_blocks(int n, double a, double b, double c) {
    const MatrixXd id = MatrixXd::Identity(n, n);
    return from_blocks(a * id, b * id, c * id);
  }

  int n() const { return static_cast<int>(entries_.rows() / 2); }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const MatrixXd& matrix() const { return entries_; }

  auto xx() const { return entries_.topLeftCorner(n(), n()); }
  auto xv() const { return entries_.topRightCorner(n(), n()); }
  auto vx() const { return entries_.bottomLeftCorner(n(), n()); }
  auto vv() const { return entries_.bottomRightCorner(n(), n()); }

  double operator()(int i, int j) const { return entries_(i, j); }

  double min_eig() const { return min_eigenvalue(entries_); }
  double max_eig() const { return max_eigenvalue(entries_); }

  friend BlockSym2n operator+(const BlockSym2n& a, const BlockSym2n& b) {
    return BlockSym2n(a.entries_ + b.entries_);
  }
  friend BlockSym2n operator-(const BlockSym2n& a, const BlockSym2n& b) {
    return BlockSym2n(a.entries_ - b.entries_);
  }
  friend BlockSym2n operator*(double s, const BlockSym2n& a) {
    return BlockSym2n(s * a.entries_);
  }

 private:
  MatrixXd entries_;
};

/// The constant coefficient matrices of the Riccati flow:
///   C = [0 -I; 0 0],  D = [0 0; 0 2I].
struct StructuralPair {
  MatrixXd C;
  MatrixXd D;
};

inline StructuralPair build_structural(int n) {
  if (n < 1) {
    throw InvalidArgument("build_structural: dimension must be >= 1, got " +
                          std::to_string(n));
  }
  StructuralPair p{MatrixXd::Zero(2 * n, 2 * n), MatrixXd::Zero(2 * n, 2 * n)};
  p.C.topRightCorner(n, n) = -MatrixXd::Identity(n, n);
  p.D.bottomRightCorner(n, n) = 2.0 * MatrixXd::Identity(n, n);
  return p;
}

/// Lower bound -K on the Hessian of h. Either diag(k1 I, k2 I) or a general
/// symmetric positive semidefinite 2n x 2n matrix.
class CurvatureBound {
 public:
  static constexpr double kPsdTol = 1e-12;

  CurvatureBound(int n, double k1, double k2)
      : k1_(k1), k2_(k2), block_diagonal_(true) {
    if (n < 1) throw InvalidArgument("CurvatureBound: n must be >= 1");
    if (!(k1 >= 0.0) || !(k2 >= 0.0)) {
      throw InvalidArgument("CurvatureBound: k1, k2 must be non-negative");
    }
    K_ = MatrixXd::Zero(2 * n, 2 * n);
    K_.topLeftCorner(n, n).diagonal().setConstant(k1);
    K_.bottomRightCorner(n, n).diagonal().setConstant(k2);
  }

  explicit CurvatureBound(const MatrixXd& K) : block_diagonal_(false) {
    if (K.rows() != K.cols() || K.rows() == 0 || K.rows() % 2 != 0) {
      throw InvalidArgument("CurvatureBound: K must be 2n x 2n");
    }
    if (asymmetry(K) > 1e-12 * std::max(1.0, max_abs(K))) {
      throw InvalidArgument("CurvatureBound: K must be symmetric");
    }
    K_ = 0.5 * (K + K.transpose());
    if (min_eigenvalue(K_) < -kPsdTol) {
      throw InvalidArgument("CurvatureBound: K must be positive semidefinite");
    }
  }

  static CurvatureBound zero(int n) { return CurvatureBound(n, 0.0, 0.0); }

  int n() const { return static_cast<int>(K_.rows() / 2); }
  const MatrixXd& matrix() const { return K_; }
  bool is_block_diagonal() const { return block_diagonal_; }
  double k1() const { return k1_; }
  double k2() const { return k2_; }

 private:
  MatrixXd K_;
  double k1_ = 0.0;
  double k2_ = 0.0;
  bool block_diagonal_;
};

}  // namespace harnack
