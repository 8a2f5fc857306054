#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "harnack/closed_forms.hpp"
#include "harnack/gaussian_kernel.hpp"

using namespace harnack;

namespace {
double inf_norm(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }
VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(xs.size());
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}
}  // namespace

TEST(Propagate, MomentsAndDeterminant) {
  const auto s = propagate_origin(1, 1.0);
  MatrixXd cov(2, 2);
  cov << 2.0 / 3, 1, 1, 2;
  EXPECT_LE(inf_norm(s.cov - cov), 1e-15);
  EXPECT_EQ(s.mean, VectorXd::Zero(2));
  const auto s2 = propagate(vec({1}), vec({2}), 0.5);
  EXPECT_DOUBLE_EQ(s2.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(s2.mean(1), 2.0);
  EXPECT_NEAR(propagate_origin(1, 1).cov.determinant(), 1.0 / 3, 1e-15);
  EXPECT_NEAR(propagate_origin(1, 2).cov.determinant(), 16.0 / 3, 1e-13);
  EXPECT_THROW(propagate_origin(1, 0.0), InvalidArgument);
}

TEST(Density, PeakSymmetryMass) {
  const auto s = propagate_origin(1, 1.0);
  EXPECT_NEAR(density(s, VectorXd::Zero(2)), std::sqrt(3.0) / (2 * std::numbers::pi), 1e-7);
  EXPECT_NEAR(density(s, VectorXd::Zero(2)), 0.2756644, 1e-7);
  const VectorXd d = vec({0.3, -0.7});
  EXPECT_DOUBLE_EQ(density(s, s.mean + d), density(s, s.mean - d));
  EXPECT_NEAR(log_density(s, d), std::log(density(s, d)), 1e-14);
  // Midpoint rule over +-12 sigma in each coordinate.
  const double sx = std::sqrt(s.cov(0, 0)), sv = std::sqrt(s.cov(1, 1));
  const int N = 600;
  const double hx = 24 * sx / N, hv = 24 * sv / N;
  double mass = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      mass += density(s, vec({-12 * sx + (i + 0.5) * hx, -12 * sv + (j + 0.5) * hv}));
  EXPECT_NEAR(mass * hx * hv, 1.0, 1e-8);
}

TEST(LogHessian, Anchors) {
  MatrixXd a(2, 2), b(2, 2);
  a << -6, 3, 3, -2;
  b << -6.0 / 8, 3.0 / 4, 3.0 / 4, -1;
  EXPECT_LE(inf_norm(log_hessian(propagate_origin(1, 1)).matrix() - a), 1e-13);
  EXPECT_LE(inf_norm(log_hessian(propagate_origin(1, 2)).matrix() - b), 1e-14);
  for (double t : {0.25, 0.5, 1.0, 2.0})
    EXPECT_LE(inf_norm(log_hessian(propagate_origin(1, t)).matrix() -
                       bound_N(CurvatureBound::zero(1), t).matrix()),
              1e-10 * std::max(1.0, 6 / (t * t * t)));
}

TEST(PdeResidual, ExactKernelSolves) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(0.2, 2.0), uy(-2, 2);
  std::vector<std::pair<double, VectorXd>> samples;
  for (int i = 0; i < 50; ++i) samples.emplace_back(ut(rng), vec({uy(rng), uy(rng)}));
  const auto tr = point_source_trajectory(vec({0}), vec({0}));
  EXPECT_LE(pde_residual(tr, samples), 1e-10);
  EXPECT_LE(pde_residual(tr, samples, 2.0), 1e-10);
  // Moving source, two dimensions.
  std::vector<std::pair<double, VectorXd>> s4;
  for (int i = 0; i < 50; ++i) s4.emplace_back(ut(rng), vec({uy(rng), uy(rng), uy(rng), uy(rng)}));
  EXPECT_LE(pde_residual(point_source_trajectory(vec({0.5, -1}), vec({1, 0.3})), s4), 1e-10);
}

TEST(PdeResidual, WrongCovarianceIsDetected) {
  auto tr = point_source_trajectory(vec({0}), vec({0}));
  tr.cov = [](double t) {
    MatrixXd c(2, 2);
    c << t * t * t, t * t, t * t, 2 * t;
    return c;
  };
  tr.cov_dot = [](double t) {
    MatrixXd c(2, 2);
    c << 3 * t * t, 2 * t, 2 * t, 2;
    return c;
  };
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ut(0.2, 2.0), uy(-2, 2);
  std::vector<std::pair<double, VectorXd>> samples;
  for (int i = 0; i < 50; ++i) samples.emplace_back(ut(rng), vec({uy(rng), uy(rng)}));
  EXPECT_GT(pde_residual(tr, samples), 1e-2);
  tr.cov = [](double t) {
    MatrixXd c(2, 2);
    c << t * t * t / 3, t * t, t * t, 2 * t;  // indefinite
    return c;
  };
  EXPECT_THROW(pde_residual(tr, samples), InvalidArgument);
}

TEST(Sharpness, GapVanishes) {
  for (int n : {1, 2})
    for (int k = 1; k <= 20; ++k)
      EXPECT_LE(inf_norm(sharpness_gap(0.1 * k, n).matrix()), 1e-8) << "t=" << 0.1 * k;
  EXPECT_LE(inf_norm(sharpness_gap(1.0, 1).matrix()), 1e-9);
  EXPECT_LE(inf_norm(sharpness_gap(0.3, 2).matrix()), 1e-8);
}

TEST(Sharpness, PrintedNormalizationLeavesAGap) {
  const auto printed =
      assemble_bound(eval_sfuncs(classify(0, 0), 1.0), 1, NormalizationRule::Printed);
  const auto gap = log_hessian(propagate_origin(1, 1.0)) - printed;
  MatrixXd expect(2, 2);
  expect << -3, 1.5, 1.5, 0;
  EXPECT_LE(inf_norm(gap.matrix() - expect), 1e-12);
  EXPECT_LT(gap.min_eig(), 0.0);
}

TEST(Sharpness, ChapmanKolmogorovCovariance) {
  for (double t : {0.5, 1.0, 2.0})
    for (double s : {0.1 * t, 0.5 * t, 0.9 * t}) {
      const MatrixXd phi = free_flow(1, t - s);
      const MatrixXd lhs =
          phi * point_source_cov(1, s) * phi.transpose() + point_source_cov(1, t - s);
      EXPECT_LE(inf_norm(lhs - point_source_cov(1, t)), 1e-12);
    }
}

TEST(Sharpness, ScalarTraceIdentity) {
  for (int n : {1, 2})
    for (double t : {0.3, 1.0, 2.5}) {
      const double tr = log_hessian(propagate_origin(n, t)).vv().trace();
      const auto sf = eval_sfuncs(classify(0, 0), t);
      EXPECT_NEAR(tr, -n * sf.s0dot / (2 * sf.s0), 1e-12);
      EXPECT_NEAR(tr, -2.0 * n / t, 1e-12);
    }
}
