#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "harnack/kinetic_pde.hpp"

using namespace harnack;

namespace {

VectorXd vec(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

std::vector<Potential> shipped() {
  return {Potential::zero(1), Potential::velocity_quadratic(1.0), Potential::cross(1.0),
          Potential::velocity_quadratic(0.3), Potential::cross(-0.7)};
}

// h built from U.value alone by central differences (n = 1).
double h_from_values(const Potential& U, const VectorXd& z) {
  const double e = 1e-4;
  auto u = [&](double dx, double dv) { return U.value(z + vec(dx, dv)); };
  const double ux = (u(e, 0) - u(-e, 0)) / (2 * e);
  const double uv = (u(0, e) - u(0, -e)) / (2 * e);
  const double uvv = (u(0, e) - 2 * u(0, 0) + u(0, -e)) / (e * e);
  return -0.5 * z(1) * ux + 0.5 * uvv - 0.25 * uv * uv;
}

GridField gaussian_field(int N, double var, double t) {
  GaussianState s{1, VectorXd::Zero(2), var * MatrixXd::Identity(2, 2), t};
  return sample_gaussian(GridSpec{N, N}, s);
}

}  // namespace

TEST(Potential, GradientAndHessianConsistency) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& U : shipped())
    for (int i = 0; i < 20; ++i) {
      const VectorXd z = vec(u(rng), u(rng));
      const VectorXd g = U.gradient(z);
      for (int k = 0; k < 2; ++k) {
        VectorXd zp = z, zm = z;
        zp(k) += 1e-6;
        zm(k) -= 1e-6;
        const double fd = (U.value(zp) - U.value(zm)) / 2e-6;
        EXPECT_LE(std::abs(fd - g(k)), 1e-5 * std::max(1.0, std::abs(g(k))));
      }
      EXPECT_EQ(asymmetry(U.hessian(z)), 0.0);
    }
  EXPECT_THROW(Potential::zero(1).value(VectorXd::Zero(3)), InvalidArgument);
}

TEST(ComputeH, ClosedForms) {
  const auto zero = Potential::zero(1);
  const auto vsq = Potential::velocity_quadratic(1.0);
  const auto xv = Potential::cross(1.0);
  for (double v : {-1.0, 0.0, 2.0}) {
    EXPECT_EQ(compute_h(zero, vec(0.3, v)), 0.0);
    EXPECT_NEAR(compute_h(vsq, vec(0.3, v)), 0.5 - v * v / 4, 1e-14);
    EXPECT_NEAR(compute_h(xv, vec(0.7, v)), -v * v / 2 - 0.7 * 0.7 / 4, 1e-14);
  }
}

TEST(ComputeH, AgreesWithValueOnlyFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& U : shipped())
    for (int i = 0; i < 50; ++i) {
      const VectorXd z = vec(u(rng), u(rng));
      const double h = compute_h(U, z), fd = h_from_values(U, z);
      EXPECT_LE(std::abs(h - fd), 1e-4 * std::max(1.0, std::abs(h))) << U.name();
    }
}

TEST(CurvatureOf, Examples) {
  auto c = curvature_of(Potential::velocity_quadratic(1.0));
  EXPECT_DOUBLE_EQ(c.k1, 0.0);
  EXPECT_DOUBLE_EQ(c.k2, 0.5);
  EXPECT_EQ(classify(c.k1, c.k2).tag, RegimeTag::Case4K1Zero);
  c = curvature_of(Potential::cross(1.0));
  EXPECT_DOUBLE_EQ(c.k1, 0.5);
  EXPECT_DOUBLE_EQ(c.k2, 1.0);
  EXPECT_EQ(classify(c.k1, c.k2).tag, RegimeTag::Case2HyperbolicDouble);
  c = curvature_of(Potential::zero(1));
  EXPECT_EQ(c.k1, 0.0);
  EXPECT_EQ(c.k2, 0.0);
  MatrixXd hh(2, 2);
  hh << -0.5, 0, 0, -1;
  EXPECT_LE((*h_hessian(Potential::cross(1.0)) - hh).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CurvatureOf, CoupledHessianFeasibleAndPareto) {
  // U = x^2/2 + x v + v^2: Hess(h) has an (x, v) coupling.
  MatrixXd Q(2, 2);
  Q << 1, 1, 1, 2;
  const auto U = Potential::quadratic(Q, VectorXd(), 0.0);
  const MatrixXd H = *h_hessian(U);
  ASSERT_NE(H(0, 1), 0.0);
  const auto c = curvature_of(U);
  MatrixXd shifted = H;
  shifted(0, 0) += c.k1;
  shifted(1, 1) += c.k2;
  EXPECT_GE(min_eigenvalue(shifted), -1e-10);
  // No feasible pair with a noticeably smaller k1 + k2.
  for (double k2 = 0; k2 < 10; k2 += 0.01) {
    for (double k1 = 0; k1 + k2 < c.k1 + c.k2 - 1e-3; k1 += 0.01) {
      MatrixXd s = H;
      s(0, 0) += k1;
      s(1, 1) += k2;
      EXPECT_LT(min_eigenvalue(s), 0.0) << k1 << "," << k2;
    }
  }
}

TEST(CurvatureOf, CustomNeedsAssertedHessian) {
  CustomPotential cp;
  cp.n = 1;
  cp.value = [](const VectorXd& z) { return std::pow(z(1), 4); };
  cp.gradient = [](const VectorXd& z) { return vec(0, 4 * std::pow(z(1), 3)); };
  cp.hessian = [](const VectorXd& z) {
    MatrixXd h = MatrixXd::Zero(2, 2);
    h(1, 1) = 12 * z(1) * z(1);
    return h;
  };
  EXPECT_THROW(curvature_of(Potential::custom(cp)), Unsupported);
  cp.h_hessian = MatrixXd::Zero(2, 2);
  EXPECT_NO_THROW(curvature_of(Potential::custom(cp)));
}

TEST(Evolve, OneStepPositivityEveryPotential) {
  for (const auto& U : shipped()) {
    auto f = gaussian_field(64, 0.3, 0.2);
    f.at(10, 10) = 0.0;
    f.at(32, 5) = 0.0;
    const double dt = max_stable_dt(f.grid, U);
    const auto r = evolve(f, U, dt, 0.2 + dt);
    for (double x : r.snapshots.back().values) EXPECT_GE(x, 0.0) << U.name();
  }
}

TEST(Evolve, MassAccounting) {
  for (const auto& U : shipped()) {
    // Wide datum so that boundary outflow is not negligible.
    const auto f = gaussian_field(96, 2.0, 0.2);
    const auto r = evolve(f, U, max_stable_dt(f.grid, U), 0.6);
    EXPECT_GT(r.boundary_outflow, 1e-6);
    EXPECT_LE(r.mass_discrepancy(), 1e-10) << U.name();
    if (U.name() == "zero") EXPECT_EQ(r.drift_source, 0.0);
  }
}

TEST(Evolve, CflAndArgumentChecks) {
  const auto f = gaussian_field(64, 0.3, 0.2);
  const auto U = Potential::zero(1);
  EXPECT_THROW(evolve(f, U, 2 * max_stable_dt(f.grid, U), 0.4), InvalidArgument);
  EXPECT_THROW(evolve(f, U, 1e-3, 0.1), InvalidArgument);
  EXPECT_THROW(evolve(f, Potential::zero(2), 1e-3, 0.4), InvalidArgument);
  auto neg = f;
  neg.at(3, 3) = -1e-20;
  EXPECT_THROW(evolve(neg, U, 1e-3, 0.4), InvalidArgument);
}

TEST(Evolve, SnapshotsAndLeakFlag) {
  const auto f = gaussian_field(64, 0.3, 0.2);
  const auto U = Potential::zero(1);
  EvolveOptions eo;
  eo.snapshot_times = {0.3, 0.25, 0.9};  // unsorted; 0.9 is past t_end
  const auto r = evolve(f, U, max_stable_dt(f.grid, U), 0.4, eo);
  ASSERT_EQ(r.snapshots.size(), 3u);
  EXPECT_DOUBLE_EQ(r.snapshots[0].t, 0.25);
  EXPECT_DOUBLE_EQ(r.snapshots[1].t, 0.3);
  EXPECT_DOUBLE_EQ(r.snapshots[2].t, 0.4);
  EXPECT_FALSE(r.leak_warning);
  const auto wide = gaussian_field(64, 3.0, 0.2);
  EXPECT_TRUE(evolve(wide, U, max_stable_dt(wide.grid, U), 0.3).leak_warning);
}

TEST(Evolve, KernelErrorAtQuarterGrid) {
  // First-order upwind error at 256^2 from the t = 0.2 kernel, frozen.
  GridSpec g{256, 256};
  const auto U = Potential::zero(1);
  const auto r = evolve(sample_gaussian(g, propagate_origin(1, 0.2)), U, max_stable_dt(g, U), 0.4);
  EXPECT_NEAR(l1_distance(r.snapshots.back(), propagate_origin(1, 0.4)), 0.1265, 2e-3);
}

TEST(Evolve, AsymptoticallyFirstOrder) {
  // Error ratios per 2x refinement increase toward 2 once the t = 0.2
  // kernel (x standard deviation 0.073) is resolved.
  const auto U = Potential::zero(1);
  std::vector<double> err;
  for (int N : {128, 256, 512}) {
    GridSpec g{N, N};
    const auto r = evolve(sample_gaussian(g, propagate_origin(1, 0.2)), U, max_stable_dt(g, U), 0.4);
    err.push_back(l1_distance(r.snapshots.back(), propagate_origin(1, 0.4)));
  }
  EXPECT_GE(err[0] / err[1], 1.7);
  EXPECT_GE(err[1] / err[2], 1.7);
  EXPECT_GT(err[1] / err[2], err[0] / err[1]);
}

TEST(LogHessian, KernelStencil) {
  GridSpec g{256, 256};
  const auto f = sample_gaussian(g, propagate_origin(1, 1.0));
  const auto H = estimate_log_hessian(f, Potential::zero(1), 128, 128, 1e-12 * f.peak());
  MatrixXd expect(2, 2);
  expect << -6, 3, 3, -2;
  EXPECT_LE((H.matrix() - expect).cwiseAbs().maxCoeff(), 0.05);
}

TEST(LogHessian, ExactOnQuadraticLog) {
  GridSpec g{64, 64};
  GridField f{g, std::vector<double>(g.size()), 1.0};
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) f.at(i, j) = std::exp(-g.x(i) * g.x(i) - g.v(j) * g.v(j));
  const auto H = estimate_log_hessian(f, Potential::zero(1), 30, 35, 1e-300);
  EXPECT_NEAR(H(0, 0), -2.0, 1e-8);
  EXPECT_NEAR(H(1, 1), -2.0, 1e-8);
  EXPECT_NEAR(H(0, 1), 0.0, 1e-8);
  // Subtracting U/2 removes its Hessian.
  const auto Hu = estimate_log_hessian(f, Potential::cross(1.0), 30, 35, 1e-300);
  EXPECT_NEAR(Hu(0, 1), -0.5, 1e-8);
}

TEST(LogHessian, UntestablePoints) {
  GridSpec g{64, 64};
  const auto f = sample_gaussian(g, propagate_origin(1, 1.0));
  EXPECT_THROW(estimate_log_hessian(f, Potential::zero(1), 0, 0, 0.0), UntestablePoint);
  EXPECT_THROW(estimate_log_hessian(f, Potential::zero(1), 63, 10, 0.0), UntestablePoint);
  EXPECT_THROW(estimate_log_hessian(f, Potential::zero(1), 32, 32, 10 * f.peak()), UntestablePoint);
}

namespace {
std::vector<GridField> kernel_snapshots(int N) {
  std::vector<GridField> s;
  for (double t : {0.5, 1.0, 2.0}) s.push_back(sample_gaussian(GridSpec{N, N}, propagate_origin(1, t)));
  return s;
}
}  // namespace

TEST(MatrixHarnack, ExactKernelIsSharp) {
  const auto snaps = kernel_snapshots(256);
  const auto U = Potential::zero(1);
  const auto rep = verify_matrix_harnack(snaps, U, Region{});
  EXPECT_TRUE(rep.pass());
  EXPECT_GE(rep.worst()->value, -0.05);
  EXPECT_GT(rep.untestable_points, 0u);
  EXPECT_DOUBLE_EQ(rep.fraction_within_tol, 1.0);
  HarnackCheckOptions cf;
  cf.bound_source = BoundSource::ClosedForm;
  EXPECT_GE(verify_matrix_harnack(snaps, U, Region{}, cf).worst()->value, -0.05);
}

TEST(MatrixHarnack, ShiftedBoundIsViolated) {
  HarnackCheckOptions o;
  o.bound_shift = 0.5;
  const auto rep = verify_matrix_harnack(kernel_snapshots(128), Potential::zero(1), Region{}, o);
  EXPECT_FALSE(rep.pass());
  EXPECT_NEAR(rep.worst()->value, -0.5, 1e-6);
}

TEST(MatrixHarnack, EmptyRegionIsAnError) {
  EXPECT_THROW(verify_matrix_harnack(kernel_snapshots(64), Potential::zero(1),
                                     Region{10, 11, 10, 11}),
               InvalidArgument);
}

TEST(ScalarHarnack, ExactKernelEqualityAndTightening) {
  const auto snaps = kernel_snapshots(256);
  const auto rep = verify_scalar_harnack(snaps, Potential::zero(1), Region{});
  for (const auto& r : rep.records) EXPECT_LE(std::abs(r.value), 0.02);
  HarnackCheckOptions o;
  o.scalar_tightening = 1.1;
  EXPECT_FALSE(verify_scalar_harnack(snaps, Potential::zero(1), Region{}, o).pass());
}

TEST(PdeHarnack, EvolvedBroadGaussianVelocityQuadratic) {
  const auto U = Potential::velocity_quadratic(1.0);
  const auto f = gaussian_field(256, 0.25, 0.2);
  EvolveOptions eo;
  eo.snapshot_times = {0.3, 0.4, 0.5};
  const auto ev = evolve(f, U, max_stable_dt(f.grid, U), 0.6, eo);
  HarnackCheckOptions o;
  o.time_shift = 0.2;
  const auto m = verify_matrix_harnack(ev.snapshots, U, Region{}, o);
  const auto s = verify_scalar_harnack(ev.snapshots, U, Region{}, o);
  EXPECT_GE(m.worst()->value, -0.1);
  EXPECT_GE(s.worst()->value, -0.1);
  ASSERT_EQ(m.points.size(), s.points.size());
  for (std::size_t k = 0; k < m.points.size(); ++k)
    EXPECT_GE(s.points[k].value, m.points[k].value - 1e-12);
}

TEST(Export, CsvAndBinaryRoundTrip) {
  const auto f = gaussian_field(16, 0.5, 0.7);
  std::ostringstream os;
  write_field_csv(os, f);
  EXPECT_EQ(os.str().substr(0, 8), "x,v,rho\n");
  const auto dir = std::filesystem::temp_directory_path() / "harnack_export_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "f.bin").string();
  write_field_binary(path, f);
  const auto back = read_field_binary(path);
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(back.grid.nx, 16);
  EXPECT_DOUBLE_EQ(back.t, 0.7);
  EXPECT_DOUBLE_EQ(back.grid.x_lo, -4.0);
  std::filesystem::remove_all(dir);
}
