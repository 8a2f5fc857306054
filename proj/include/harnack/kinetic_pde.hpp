#pragma once

// Finite-difference simulator for
//
//   rho_t = rho_vv - U_v rho_v - v rho_x        on [x_lo, x_hi] x [v_lo, v_hi],
//
// (one space and one velocity dimension), and pointwise checks of the matrix
// and scalar Harnack inequalities on its output.
//
// One time step is split into
//   1. x-transport  -v rho_x     first-order upwind, conservative fluxes;
//   2. v-drift      -U_v rho_v   first-order upwind, advective form;
//   3. v-diffusion  rho_vv       backward Euler, one tridiagonal solve per x.
// Steps 1 and 2 are convex combinations under the CFL bound and step 3 is an
// M-matrix solve, so the field stays non-negative exactly. Boundaries are
// homogeneous Dirichlet (no inflow); the mass that leaves is accounted for.
//
// The drift term is not in divergence form, so step 2 changes the total
// mass; that change is tracked separately as `drift_source`.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "harnack/block_sym.hpp"
#include "harnack/closed_forms.hpp"
#include "harnack/errors.hpp"
#include "harnack/gaussian_kernel.hpp"
#include "harnack/potential.hpp"
#include "harnack/report.hpp"
#include "harnack/riccati.hpp"

namespace harnack {

struct GridSpec {
  int nx = 0, nv = 0;
  double x_lo = -4, x_hi = 4, v_lo = -4, v_hi = 4;

  double dx() const { return (x_hi - x_lo) / nx; }
  double dv() const { return (v_hi - v_lo) / nv; }
  /// Cell centres.
  double x(int i) const { return x_lo + (i + 0.5) * dx(); }
  double v(int j) const { return v_lo + (j + 0.5) * dv(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * nv; }

  void validate() const {
    if (nx < 3 || nv < 3 || !(x_hi > x_lo) || !(v_hi > v_lo))
      throw InvalidArgument("GridSpec: need nx, nv >= 3 and non-empty ranges");
  }
};

/// Density on the grid, row-major with x as the slow index: values[i*nv + j].
struct GridField {
  GridSpec grid;
  std::vector<double> values;
  double t = 0.0;
  bool leak_warning = false;

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.nv + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.nv + j]; }

  double mass() const {
    double m = 0.0;
    for (double r : values) m += r;
    return m * grid.dx() * grid.dv();
  }
  double peak() const { return *std::max_element(values.begin(), values.end()); }

  /// Share of the mass sitting in the outermost ring of cells.
  double boundary_fraction() const {
    double b = 0.0, total = 0.0;
    for (int i = 0; i < grid.nx; ++i)
      for (int j = 0; j < grid.nv; ++j) {
        total += at(i, j);
        if (i == 0 || j == 0 || i == grid.nx - 1 || j == grid.nv - 1) b += at(i, j);
      }
    return total > 0.0 ? b / total : 0.0;
  }
};

/// Sample a Gaussian state at cell centres.
inline GridField sample_gaussian(const GridSpec& grid, const GaussianState& s,
                                 double amplitude = 1.0) {
  grid.validate();
  if (s.n != 1) throw InvalidArgument("sample_gaussian: the simulator is 1+1 dimensional");
  GridField f{grid, std::vector<double>(grid.size()), s.t};
  const MatrixXd P = s.cov.inverse();
  const double norm = amplitude / (2.0 * std::numbers::pi * std::sqrt(s.cov.determinant()));
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.nv; ++j) {
      const double dx = grid.x(i) - s.mean(0), dv = grid.v(j) - s.mean(1);
      const double q = P(0, 0) * dx * dx + 2.0 * P(0, 1) * dx * dv + P(1, 1) * dv * dv;
      f.at(i, j) = norm * std::exp(-0.5 * q);
    }
  return f;
}

struct EvolveOptions {
  /// Times at which to record snapshots; t_end is always recorded.
  std::vector<double> snapshot_times;
  double leak_threshold = 1e-4;
  double cfl = 0.9;
};

struct EvolveResult {
  std::vector<GridField> snapshots;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  /// Mass that left through the Dirichlet boundaries (transport + diffusion).
  double boundary_outflow = 0.0;
  /// Net mass created by the non-conservative drift step.
  double drift_source = 0.0;
  bool leak_warning = false;
  int steps = 0;

  /// |final - (initial - outflow + drift)| relative to the initial mass.
  double mass_discrepancy() const {
    return std::abs(final_mass - (initial_mass - boundary_outflow + drift_source)) /
           std::max(initial_mass, std::numeric_limits<double>::min());
  }
};

/// Largest dt the CFL bound admits for this grid and potential.
inline double max_stable_dt(const GridSpec& grid, const Potential& U, double cfl = 0.9) {
  double vmax = 0.0, amax = 0.0;
  VectorXd z(2);
  for (int j = 0; j < grid.nv; ++j) vmax = std::max(vmax, std::abs(grid.v(j)));
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.nv; ++j) {
      z << grid.x(i), grid.v(j);
      amax = std::max(amax, std::abs(U.gradient(z)(1)));
    }
  double dt = std::numeric_limits<double>::infinity();
  if (vmax > 0.0) dt = std::min(dt, grid.dx() / vmax);
  if (amax > 0.0) dt = std::min(dt, grid.dv() / amax);
  return cfl * dt;
}

inline EvolveResult evolve(const GridField& initial, const Potential& U, double dt, double t_end,
                           const EvolveOptions& opts = {}) {
  const GridSpec& g = initial.grid;
  g.validate();
  if (U.n() != 1) throw InvalidArgument("evolve: potential must be 1+1 dimensional");
  if (!(dt > 0.0)) throw InvalidArgument("evolve: dt must be positive");
  if (!(t_end >= initial.t)) throw InvalidArgument("evolve: t_end precedes the initial time");
  const double dt_max = max_stable_dt(g, U, opts.cfl);
  if (dt > dt_max * (1.0 + 1e-12)) {
    throw InvalidArgument("evolve: dt=" + std::to_string(dt) + " violates the CFL bound " +
                          std::to_string(dt_max));
  }
  for (double r : initial.values)
    if (!(r >= 0.0)) throw InvalidArgument("evolve: initial field must be non-negative");

  const int nx = g.nx, nv = g.nv;
  const double dx = g.dx(), dv = g.dv(), cell = dx * dv;

  std::vector<double> drift(g.size());
  {
    VectorXd z(2);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nv; ++j) {
        z << g.x(i), g.v(j);
        drift[static_cast<std::size_t>(i) * nv + j] = U.gradient(z)(1);
      }
  }
  bool has_drift = false;
  for (double a : drift) has_drift = has_drift || a != 0.0;

  std::vector<double> stops;
  for (double s : opts.snapshot_times)
    if (s > initial.t && s < t_end) stops.push_back(s);
  std::sort(stops.begin(), stops.end());
  stops.push_back(t_end);

  EvolveResult res;
  GridField f = initial;
  f.leak_warning = false;
  res.initial_mass = f.mass();
  std::vector<double> tmp(g.size());
  std::vector<double> modified(nv), rhs(nv);

  auto sum = [](const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s;
  };

  auto step = [&](double h) {
    // 1. x-transport, one row per velocity.
    double out = 0.0;
    for (int j = 0; j < nv; ++j) {
      const double c = std::abs(g.v(j)) * h / dx;
      const double keep = 1.0 - c;
      if (g.v(j) > 0.0) {
        out += c * f.at(nx - 1, j);
        for (int i = 0; i < nx; ++i)
          tmp[static_cast<std::size_t>(i) * nv + j] =
              keep * f.at(i, j) + (i > 0 ? c * f.at(i - 1, j) : 0.0);
      } else {
        out += c * f.at(0, j);
        for (int i = 0; i < nx; ++i)
          tmp[static_cast<std::size_t>(i) * nv + j] =
              keep * f.at(i, j) + (i + 1 < nx ? c * f.at(i + 1, j) : 0.0);
      }
    }
    f.values.swap(tmp);
    res.boundary_outflow += out * cell;

    // 2. v-drift.
    if (has_drift) {
      const double before = sum(f.values);
      for (int i = 0; i < nx; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nv;
        for (int j = 0; j < nv; ++j) {
          const double a = drift[row + j];
          const double c = std::abs(a) * h / dv;
          double up = 0.0;
          if (a > 0.0 && j > 0) up = f.values[row + j - 1];
          if (a < 0.0 && j + 1 < nv) up = f.values[row + j + 1];
          tmp[row + j] = (1.0 - c) * f.values[row + j] + c * up;
        }
      }
      f.values.swap(tmp);
      res.drift_source += (sum(f.values) - before) * cell;
    }

    // 3. Implicit v-diffusion: (1 + 2L) r_j - L (r_{j-1} + r_{j+1}) = old_j,
    // with zero ghosts. Thomas sweep written with non-negative quantities.
    const double lam = h / (dv * dv);
    double lost = 0.0;
    for (int i = 0; i < nx; ++i) {
      double* col = &f.values[static_cast<std::size_t>(i) * nv];
      double w_prev = 0.0;
      for (int j = 0; j < nv; ++j) {
        const double m = 1.0 + 2.0 * lam - lam * w_prev;
        modified[j] = lam / m;  // w_j
        rhs[j] = (col[j] + (j > 0 ? lam * rhs[j - 1] : 0.0)) / m;
        w_prev = modified[j];
      }
      col[nv - 1] = rhs[nv - 1];
      for (int j = nv - 2; j >= 0; --j) col[j] = rhs[j] + modified[j] * col[j + 1];
      lost += lam * (col[0] + col[nv - 1]);
    }
    res.boundary_outflow += lost * cell;
    f.t += h;
    ++res.steps;
    if (f.boundary_fraction() > opts.leak_threshold) f.leak_warning = true;
  };

  for (double stop : stops) {
    while (f.t < stop - 1e-12 * std::max(1.0, stop)) {
      const double remaining = stop - f.t;
      const int n_left = static_cast<int>(std::ceil(remaining / dt - 1e-9));
      step(remaining / std::max(1, n_left));
    }
    f.t = stop;
    res.snapshots.push_back(f);
  }
  res.final_mass = f.mass();
  res.leak_warning = f.leak_warning;
  return res;
}

/// Grid point rejected by estimate_log_hessian.
class UntestablePoint : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Hessian of g = log(rho) - U/2 at cell (i, j) by centred second
/// differences; the mixed entry uses the four diagonal neighbours.
/// The whole 5x5 neighbourhood must be inside the grid and above `floor`.
inline BlockSym2n estimate_log_hessian(const GridField& f, const Potential& U, int i, int j,
                                       double floor) {
  const GridSpec& g = f.grid;
  if (i < 2 || j < 2 || i > g.nx - 3 || j > g.nv - 3) {
    throw UntestablePoint("estimate_log_hessian: stencil at (" + std::to_string(i) + "," +
                          std::to_string(j) + ") touches the boundary");
  }
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      if (!(f.at(i + a, j + b) >= floor)) {
        throw UntestablePoint("estimate_log_hessian: density below floor near (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
  VectorXd z(2);
  auto gval = [&](int a, int b) {
    z << g.x(i + a), g.v(j + b);
    return std::log(f.at(i + a, j + b)) - 0.5 * U.value(z);
  };
  const double dx = g.dx(), dv = g.dv();
  const double c = gval(0, 0);
  const double gxx = (gval(1, 0) - 2.0 * c + gval(-1, 0)) / (dx * dx);
  const double gvv = (gval(0, 1) - 2.0 * c + gval(0, -1)) / (dv * dv);
  const double gxv = (gval(1, 1) - gval(1, -1) - gval(-1, 1) + gval(-1, -1)) / (4.0 * dx * dv);
  return BlockSym2n::scalar_blocks(1, gxx, gxv, gvv);
}

enum class BoundSource { Oracle, ClosedForm };

inline const char* to_string(BoundSource b) {
  return b == BoundSource::Oracle ? "oracle" : "closed_form";
}

struct Region {
  double x_lo = -2, x_hi = 2, v_lo = -2, v_hi = 2;
};

struct HarnackCheckOptions {
  BoundSource bound_source = BoundSource::Oracle;
  /// The bound is evaluated at t - time_shift. Zero when the field equals the
  /// fundamental solution at its birth time; the birth time otherwise.
  double time_shift = 0.0;
  double tolerance = 0.1;
  /// Relative density floor (times the snapshot peak) for testable points.
  double floor_rel = 1e-12;
  /// Negative controls: add bound_shift * I to the matrix bound; divide the
  /// scalar bound by scalar_tightening.
  double bound_shift = 0.0;
  double scalar_tightening = 1.0;
  double riccati_tol = 1e-10;
};

/// Harnack bound N(t) for the curvature pair of U.
inline BlockSym2n harnack_bound(const Potential& U, double t, BoundSource src,
                                double riccati_tol = 1e-10) {
  const auto kp = curvature_of(U);
  if (src == BoundSource::Oracle)
    return bound_N(CurvatureBound(U.n(), kp.k1, kp.k2), t, riccati_tol);
  return closed_form_bound(kp.k1, kp.k2, t, U.n(), NormalizationRule::OracleCalibrated);
}

namespace detail {

template <typename PerPoint>
HarnackReport scan_points(const std::vector<GridField>& snapshots, const Potential& U,
                          const Region& region, const HarnackCheckOptions& opts,
                          const std::string& check, PerPoint&& per_point) {
  HarnackReport rep;
  rep.campaign = check;
  std::size_t tested = 0, within = 0;
  for (const auto& f : snapshots) {
    const double tb = f.t - opts.time_shift;
    if (!(tb > 0.0)) throw InvalidArgument(check + ": bound time must be positive");
    BlockSym2n N = harnack_bound(U, tb, opts.bound_source, opts.riccati_tol);
    if (opts.bound_shift != 0.0) N = N + BlockSym2n(opts.bound_shift * MatrixXd::Identity(2, 2));
    const double floor = opts.floor_rel * f.peak();
    HarnackRecord rec{check, f.t, {}, std::numeric_limits<double>::infinity(),
                      -opts.tolerance, Bound::AtLeast};
    if (f.leak_warning) rep.warnings.push_back("mass leak above threshold at t=" + std::to_string(f.t));
    for (int i = 0; i < f.grid.nx; ++i) {
      const double x = f.grid.x(i);
      if (x < region.x_lo || x > region.x_hi) continue;
      for (int j = 0; j < f.grid.nv; ++j) {
        const double v = f.grid.v(j);
        if (v < region.v_lo || v > region.v_hi) continue;
        double value;
        try {
          value = per_point(estimate_log_hessian(f, U, i, j, floor), N);
        } catch (const UntestablePoint&) {
          ++rep.untestable_points;
          continue;
        }
        ++tested;
        if (value >= -opts.tolerance) ++within;
        rep.points.push_back({f.t, i, j, value});
        if (value < rec.value) {
          rec.value = value;
          rec.location = {x, v};
        }
      }
    }
    if (!std::isfinite(rec.value)) {
      throw InvalidArgument(check + ": no testable points in region at t=" + std::to_string(f.t));
    }
    rep.add(rec);
  }
  rep.fraction_within_tol = tested ? static_cast<double>(within) / tested : 0.0;
  return rep;
}

}  // namespace detail

/// Minimum eigenvalue of Hess(g) - N(t) over the region, per snapshot.
inline HarnackReport verify_matrix_harnack(const std::vector<GridField>& snapshots,
                                           const Potential& U, const Region& region,
                                           const HarnackCheckOptions& opts = {}) {
  return detail::scan_points(snapshots, U, region, opts, "matrix_harnack",
                             [](const BlockSym2n& hess, const BlockSym2n& N) {
                               return min_eigenvalue(hess.matrix() - N.matrix());
                             });
}

/// Margin of  Laplacian_v log(rho) - Laplacian_v U / 2 >= tr N_vv(t),
/// where tr N_vv = -n s0'/(2 s0).
inline HarnackReport verify_scalar_harnack(const std::vector<GridField>& snapshots,
                                           const Potential& U, const Region& region,
                                           const HarnackCheckOptions& opts = {}) {
  const double tighten = opts.scalar_tightening;
  return detail::scan_points(snapshots, U, region, opts, "scalar_harnack",
                             [tighten](const BlockSym2n& hess, const BlockSym2n& N) {
                               return hess.vv().trace() - N.vv().trace() / tighten;
                             });
}

/// L1 distance between a field and a Gaussian sampled on the same grid.
inline double l1_distance(const GridField& f, const GaussianState& exact) {
  const auto ref = sample_gaussian(f.grid, exact);
  double s = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) s += std::abs(f.values[k] - ref.values[k]);
  return s * f.grid.dx() * f.grid.dv();
}

/// CSV `x,v,rho`.
inline void write_field_csv(std::ostream& os, const GridField& f) {
  os << "x,v,rho\n";
  os.precision(17);
  for (int i = 0; i < f.grid.nx; ++i)
    for (int j = 0; j < f.grid.nv; ++j)
      os << f.grid.x(i) << ',' << f.grid.v(j) << ',' << f.at(i, j) << '\n';
}

inline json field_metadata(const GridField& f) {
  json j;
  j["nx"] = f.grid.nx;
  j["nv"] = f.grid.nv;
  j["x_range"] = {f.grid.x_lo, f.grid.x_hi};
  j["v_range"] = {f.grid.v_lo, f.grid.v_hi};
  j["t"] = f.t;
  j["layout"] = "row-major float64, x slow, v fast";
  return j;
}

/// Raw little-endian doubles at `path` plus `path + ".json"` metadata.
inline void write_field_binary(const std::string& path, const GridField& f) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("write_field_binary: cannot open " + path);
  bin.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  std::ofstream meta(path + ".json");
  meta << field_metadata(f).dump(2) << '\n';
}

inline GridField read_field_binary(const std::string& path) {
  std::ifstream meta_in(path + ".json");
  if (!meta_in) throw std::runtime_error("read_field_binary: missing sidecar for " + path);
  const json meta = json::parse(meta_in);
  GridField f;
  f.grid.nx = meta.at("nx");
  f.grid.nv = meta.at("nv");
  f.grid.x_lo = meta.at("x_range")[0];
  f.grid.x_hi = meta.at("x_range")[1];
  f.grid.v_lo = meta.at("v_range")[0];
  f.grid.v_hi = meta.at("v_range")[1];
  f.t = meta.at("t");
  f.values.resize(f.grid.size());
  std::ifstream bin(path, std::ios::binary);
  bin.read(reinterpret_cast<char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!bin) throw std::runtime_error("read_field_binary: short read from " + path);
  return f;
}

}  // namespace harnack
