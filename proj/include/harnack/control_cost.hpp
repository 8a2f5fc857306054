#pragma once

// Optimal control cost for the double integrator  x' = v, v' = u  on [s, t]:
//
//   c_{s,t}(z0, z1) = inf  int_s^t  1/4 |u|^2 - h(x, v)  dtau
//
// over piecewise-constant u steering z0 = (x0, v0) to z1 = (x1, v1).
// For h = 0 the infimum is the Gramian form in energy_cost. Otherwise the
// problem is transcribed: m equal segments, the last two controls are solved
// from the endpoint conditions, the rest are free variables minimised by BFGS
// (GSL) with a Newton polish.

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "harnack/block_sym.hpp"
#include "harnack/closed_forms.hpp"
#include "harnack/errors.hpp"
#include "harnack/gaussian_kernel.hpp"
#include "harnack/potential.hpp"
#include "harnack/report.hpp"

namespace harnack {

/// h(x, v) as a function of the stacked state z = (x, v).
struct HFunction {
  std::function<double(const VectorXd&)> value;
  /// Optional; central differences of `value` otherwise.
  std::function<VectorXd(const VectorXd&)> gradient;
  bool is_zero = false;

  static HFunction zero() { return {nullptr, nullptr, true}; }

  static HFunction from_potential(const Potential& U) {
    if (std::holds_alternative<ZeroPotential>(U.variant())) return zero();
    return {[U](const VectorXd& z) { return compute_h(U, z); },
            [U](const VectorXd& z) { return h_gradient(U, z); }, false};
  }

  static HFunction from_callable(std::function<double(const VectorXd&)> f,
                                 std::function<VectorXd(const VectorXd&)> grad = nullptr) {
    if (!f) throw InvalidArgument("HFunction: value callable is required");
    return {std::move(f), std::move(grad), false};
  }

  double operator()(const VectorXd& z) const { return is_zero ? 0.0 : value(z); }

  VectorXd grad(const VectorXd& z) const {
    if (is_zero) return VectorXd::Zero(z.size());
    if (gradient) return gradient(z);
    VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(z(i)));
      VectorXd zp = z, zm = z;
      zp(i) += step;
      zm(i) -= step;
      g(i) = (value(zp) - value(zm)) / (2.0 * step);
    }
    return g;
  }
};

struct ControlProblem {
  int n = 1;
  VectorXd start, end;  // 2n each, (x, v)
  double s = 0.0, t = 1.0;
  HFunction h = HFunction::zero();
  int m = 32;

  void validate() const {
    if (n < 1) throw InvalidArgument("ControlProblem: n must be positive");
    if (start.size() != 2 * n || end.size() != 2 * n)
      throw InvalidArgument("ControlProblem: endpoints must have dimension 2n");
    if (!(t > s)) throw InvalidArgument("ControlProblem: need t > s");
    if (m < 1) throw InvalidArgument("ControlProblem: need m >= 1");
  }
};

/// One step of the double integrator under constant control u for time dt.
inline VectorXd flow_segment(const VectorXd& z, const VectorXd& u, double dt) {
  const auto n = u.size();
  VectorXd out(2 * n);
  out.head(n) = z.head(n) + dt * z.tail(n) + 0.5 * dt * dt * u;
  out.tail(n) = z.tail(n) + dt * u;
  return out;
}

struct ControlPath {
  std::vector<double> breakpoints;  // m + 1 absolute times
  std::vector<VectorXd> controls;   // m
  std::vector<VectorXd> states;     // m + 1, exact flow at breakpoints

  int segments() const { return static_cast<int>(controls.size()); }

  /// State at absolute time tau, by exact flow from the enclosing breakpoint.
  VectorXd state_at(double tau) const {
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), tau);
    int k = static_cast<int>(it - breakpoints.begin()) - 1;
    k = std::clamp(k, 0, segments() - 1);
    return flow_segment(states[k], controls[k], tau - breakpoints[k]);
  }
};

inline ControlPath make_path(const VectorXd& start, double s, double t,
                             std::vector<VectorXd> controls) {
  ControlPath p;
  const int m = static_cast<int>(controls.size());
  const double dt = (t - s) / m;
  p.controls = std::move(controls);
  p.breakpoints.resize(m + 1);
  p.states.resize(m + 1);
  p.states[0] = start;
  for (int k = 0; k <= m; ++k) p.breakpoints[k] = (k == m) ? t : s + k * dt;
  for (int k = 0; k < m; ++k) p.states[k + 1] = flow_segment(p.states[k], p.controls[k], dt);
  return p;
}

namespace detail {

// x-row (a) and v-row (b) coefficients of control k in the final state,
// equal segments of length dt, total horizon T.
inline std::pair<double, double> endpoint_coeff(int k, double dt, double T) {
  return {0.5 * dt * dt + dt * (T - (k + 1) * dt), dt};
}

/// Replace the last two controls so that the path lands on `end` exactly.
inline void correct_endpoint(std::vector<VectorXd>& u, const VectorXd& start,
                             const VectorXd& end, double T) {
  const int m = static_cast<int>(u.size());
  const auto n = start.size() / 2;
  const double dt = T / m;
  VectorXd rx = end.head(n) - start.head(n) - T * start.tail(n);
  VectorXd rv = end.tail(n) - start.tail(n);
  for (int k = 0; k < m - 2; ++k) {
    const auto [a, b] = endpoint_coeff(k, dt, T);
    rx -= a * u[k];
    rv -= b * u[k];
  }
  const auto [a1, b1] = endpoint_coeff(m - 2, dt, T);
  const auto [a2, b2] = endpoint_coeff(m - 1, dt, T);
  const double det = a1 * b2 - a2 * b1;
  u[m - 2] = (b2 * rx - a2 * rv) / det;
  u[m - 1] = (a1 * rv - b1 * rx) / det;
}

}  // namespace detail

/// Minimum-energy control for h = 0 at local time sigma in [0, T]: the second
/// derivative of the cubic Hermite interpolant of the positions.
inline VectorXd hermite_control(const VectorXd& start, const VectorXd& end, double T,
                                double sigma) {
  const auto n = start.size() / 2;
  const VectorXd rx = end.head(n) - start.head(n) - T * start.tail(n);
  const VectorXd rv = end.tail(n) - start.tail(n);
  const VectorXd c = (3.0 * rx - T * rv) / (T * T);
  const VectorXd e = (T * rv - 2.0 * rx) / (T * T * T);
  return 2.0 * c + 6.0 * sigma * e;
}

/// Hermite state (x, v) at local time sigma.
inline VectorXd hermite_state(const VectorXd& start, const VectorXd& end, double T,
                              double sigma) {
  const auto n = start.size() / 2;
  const VectorXd rx = end.head(n) - start.head(n) - T * start.tail(n);
  const VectorXd rv = end.tail(n) - start.tail(n);
  const VectorXd c = (3.0 * rx - T * rv) / (T * T);
  const VectorXd e = (T * rv - 2.0 * rx) / (T * T * T);
  VectorXd z(2 * n);
  z.head(n) = start.head(n) + sigma * start.tail(n) + sigma * sigma * c + sigma * sigma * sigma * e;
  z.tail(n) = start.tail(n) + 2.0 * sigma * c + 3.0 * sigma * sigma * e;
  return z;
}

/// Hermite control sampled at segment midpoints, last two segments corrected
/// so the endpoint is met exactly. m = 1 keeps the single midpoint sample.
inline ControlPath steer_exact(const VectorXd& start, const VectorXd& end, double s, double t,
                               int m = 32) {
  if (!(t > s)) throw InvalidArgument("steer_exact: need t > s");
  if (start.size() != end.size() || start.size() == 0 || start.size() % 2 != 0)
    throw InvalidArgument("steer_exact: endpoints must be 2n-vectors of equal size");
  if (m < 1) throw InvalidArgument("steer_exact: need m >= 1");
  const double T = t - s, dt = T / m;
  std::vector<VectorXd> u(m);
  for (int k = 0; k < m; ++k) u[k] = hermite_control(start, end, T, (k + 0.5) * dt);
  if (m >= 2) detail::correct_endpoint(u, start, end, T);
  return make_path(start, s, t, std::move(u));
}

/// Controllability Gramian of the double integrator over tau.
inline MatrixXd gramian(int n, double tau) {
  const MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd W(2 * n, 2 * n);
  W << (tau * tau * tau / 3.0) * id, (tau * tau / 2.0) * id, (tau * tau / 2.0) * id, tau * id;
  return W;
}

inline double energy_cost(const VectorXd& start, const VectorXd& end, double s, double t) {
  const double tau = t - s;
  if (!(tau > 0.0)) throw InvalidArgument("energy_cost: need t > s");
  if (start.size() != end.size() || start.size() == 0 || start.size() % 2 != 0)
    throw InvalidArgument("energy_cost: endpoints must be 2n-vectors of equal size");
  const int n = static_cast<int>(start.size() / 2);
  VectorXd d(2 * n);
  d << end.head(n) - start.head(n) - tau * start.tail(n), end.tail(n) - start.tail(n);
  return 0.25 * d.dot(gramian(n, tau).ldlt().solve(d));
}

/// Gauss-Legendre 5-point nodes and weights on [-1, 1].
inline const std::array<std::pair<double, double>, 5>& gauss_legendre5() {
  static const std::array<std::pair<double, double>, 5> gl = [] {
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    return std::array<std::pair<double, double>, 5>{
        {{-b, wb}, {-a, wa}, {0.0, 128.0 / 225.0}, {a, wa}, {b, wb}}};
  }();
  return gl;
}

/// Transcribed objective as a function of the free controls W ((m-2) x n).
/// Everything except h is linear in the controls, so the states at the
/// quadrature points are precomputed affine maps.
class TranscribedObjective {
 public:
  explicit TranscribedObjective(const ControlProblem& p) : p_(p) {
    p.validate();
    if (p.m < 2) throw InvalidArgument("transcribe_cost: need m >= 2");
    const int m = p.m, n = p.n;
    T_ = p.t - p.s;
    dt_ = T_ / m;
    const auto& gl = gauss_legendre5();
    const int Q = 5 * m;
    A_ = MatrixXd::Zero(Q, m);
    B_ = MatrixXd::Zero(Q, m);
    w_.resize(Q);
    Xf_.resize(Q, n);
    Vf_.resize(Q, n);
    const VectorXd x0 = p.start.head(n), v0 = p.start.tail(n);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < 5; ++i) {
        const int q = 5 * j + i;
        const double sigma = 0.5 * dt_ * (1.0 + gl[i].first);
        const double tau = j * dt_ + sigma;
        w_(q) = 0.5 * dt_ * gl[i].second;
        for (int k = 0; k < j; ++k) {
          A_(q, k) = 0.5 * dt_ * dt_ + dt_ * (tau - (k + 1) * dt_);
          B_(q, k) = dt_;
        }
        A_(q, j) = 0.5 * sigma * sigma;
        B_(q, j) = sigma;
        Xf_.row(q) = (x0 + tau * v0).transpose();
        Vf_.row(q) = v0.transpose();
      }
    // U = P W + C0.
    P_ = MatrixXd::Zero(m, m - 2);
    P_.topRows(m - 2).setIdentity();
    const auto [a1, b1] = detail::endpoint_coeff(m - 2, dt_, T_);
    const auto [a2, b2] = detail::endpoint_coeff(m - 1, dt_, T_);
    const double det = a1 * b2 - a2 * b1;
    for (int k = 0; k < m - 2; ++k) {
      const auto [a, b] = detail::endpoint_coeff(k, dt_, T_);
      P_(m - 2, k) = -(b2 * a - a2 * b) / det;
      P_(m - 1, k) = -(a1 * b - b1 * a) / det;
    }
    const VectorXd rx = p.end.head(n) - x0 - T_ * v0;
    const VectorXd rv = p.end.tail(n) - v0;
    C0_ = MatrixXd::Zero(m, n);
    C0_.row(m - 2) = ((b2 * rx - a2 * rv) / det).transpose();
    C0_.row(m - 1) = ((a1 * rv - b1 * rx) / det).transpose();
  }

  int free_rows() const { return p_.m - 2; }
  int dim() const { return (p_.m - 2) * p_.n; }

  MatrixXd controls(const VectorXd& w) const { return P_ * unpack(w) + C0_; }

  VectorXd pack(const MatrixXd& W) const {
    return Eigen::Map<const VectorXd>(W.data(), W.size());
  }
  MatrixXd unpack(const VectorXd& w) const {
    return Eigen::Map<const MatrixXd>(w.data(), p_.m - 2, p_.n);
  }

  double value(const VectorXd& w) const {
    double out;
    eval(w, &out, nullptr);
    return out;
  }

  void eval(const VectorXd& w, double* f, VectorXd* grad) const {
    const int n = p_.n;
    const MatrixXd U = controls(w);
    double J = 0.25 * dt_ * U.squaredNorm();
    MatrixXd gU = 0.5 * dt_ * U;
    if (!p_.h.is_zero) {
      const MatrixXd X = Xf_ + A_ * U, V = Vf_ + B_ * U;
      MatrixXd Gx(X.rows(), n), Gv(X.rows(), n);
      VectorXd z(2 * n);
      for (Eigen::Index q = 0; q < X.rows(); ++q) {
        z << X.row(q).transpose(), V.row(q).transpose();
        J -= w_(q) * p_.h(z);
        if (grad) {
          const VectorXd g = p_.h.grad(z);
          Gx.row(q) = w_(q) * g.head(n).transpose();
          Gv.row(q) = w_(q) * g.tail(n).transpose();
        }
      }
      if (grad) gU -= A_.transpose() * Gx + B_.transpose() * Gv;
    }
    if (f) *f = J;
    if (grad) *grad = pack(P_.transpose() * gU);
  }

  /// Free variables of the Hermite seed.
  VectorXd hermite_seed() const {
    MatrixXd W(p_.m - 2, p_.n);
    for (int k = 0; k < p_.m - 2; ++k)
      W.row(k) = hermite_control(p_.start, p_.end, T_, (k + 0.5) * dt_).transpose();
    return pack(W);
  }

  ControlPath path(const VectorXd& w) const {
    const MatrixXd U = controls(w);
    std::vector<VectorXd> u(p_.m);
    for (int k = 0; k < p_.m; ++k) u[k] = U.row(k).transpose();
    return make_path(p_.start, p_.s, p_.t, std::move(u));
  }

 private:
  ControlProblem p_;
  double T_ = 0.0, dt_ = 0.0;
  MatrixXd A_, B_, Xf_, Vf_, P_, C0_;
  VectorXd w_;
};

struct TranscribeOptions {
  int starts = 5;
  std::uint64_t seed = 0;
  int max_iter = 5000;
  /// Converged when |grad| <= grad_tol * (1 + |J|).
  double grad_tol = 1e-9;
  /// Objective below -unbounded_level (or non-finite) means unbounded below.
  double unbounded_level = 1e12;
  /// Replaces the Hermite seed of the first start; (m-2) x n.
  std::optional<MatrixXd> warm_start;
};

struct TranscribeResult {
  double cost = 0.0;
  ControlPath path;
  int best_start = 0;
  int iterations = 0;
};

namespace detail {

struct GslContext {
  const TranscribedObjective* obj;
  double lowest;
};

inline VectorXd from_gsl(const gsl_vector* x) {
  VectorXd out(x->size);
  for (std::size_t i = 0; i < x->size; ++i) out(i) = gsl_vector_get(x, i);
  return out;
}

inline double gsl_f(const gsl_vector* x, void* params) {
  auto* ctx = static_cast<GslContext*>(params);
  double f;
  ctx->obj->eval(from_gsl(x), &f, nullptr);
  ctx->lowest = std::min(ctx->lowest, std::isfinite(f) ? f : -HUGE_VAL);
  return f;
}

inline void gsl_df(const gsl_vector* x, void* params, gsl_vector* g) {
  auto* ctx = static_cast<GslContext*>(params);
  VectorXd grad;
  ctx->obj->eval(from_gsl(x), nullptr, &grad);
  for (Eigen::Index i = 0; i < grad.size(); ++i) gsl_vector_set(g, i, grad(i));
}

inline void gsl_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
  auto* ctx = static_cast<GslContext*>(params);
  VectorXd grad;
  ctx->obj->eval(from_gsl(x), f, &grad);
  ctx->lowest = std::min(ctx->lowest, std::isfinite(*f) ? *f : -HUGE_VAL);
  for (Eigen::Index i = 0; i < grad.size(); ++i) gsl_vector_set(g, i, grad(i));
}

struct LocalResult {
  VectorXd w;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

inline LocalResult bfgs(const TranscribedObjective& obj, VectorXd w0,
                        const TranscribeOptions& opts) {
  const std::size_t dim = static_cast<std::size_t>(obj.dim());
  GslContext ctx{&obj, HUGE_VAL};
  gsl_multimin_function_fdf fn{&gsl_f, &gsl_df, &gsl_fdf, dim, &ctx};
  gsl_vector* x = gsl_vector_alloc(dim);
  for (std::size_t i = 0; i < dim; ++i) gsl_vector_set(x, i, w0(i));
  gsl_multimin_fdfminimizer* mz =
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, dim);
  gsl_multimin_fdfminimizer_set(mz, &fn, x, 0.01 * (1.0 + w0.norm()), 0.1);
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (gsl_multimin_fdfminimizer_iterate(mz) != GSL_SUCCESS) break;
    if (!(ctx.lowest > -opts.unbounded_level)) break;
    const double f = gsl_multimin_fdfminimizer_minimum(mz);
    if (gsl_multimin_test_gradient(mz->gradient, opts.grad_tol * (1.0 + std::abs(f))) ==
        GSL_SUCCESS)
      break;
  }
  LocalResult r;
  r.w = from_gsl(gsl_multimin_fdfminimizer_x(mz));
  r.f = gsl_multimin_fdfminimizer_minimum(mz);
  r.grad_norm = gsl_blas_dnrm2(mz->gradient);
  r.iterations = iter;
  gsl_multimin_fdfminimizer_free(mz);
  gsl_vector_free(x);
  if (!(ctx.lowest > -opts.unbounded_level)) {
    throw UnboundedBelow("transcribe_cost: objective fell below " +
                         std::to_string(-opts.unbounded_level) + "; h is too large on the tube");
  }
  return r;
}

// Newton steps on a finite-difference Hessian of the analytic gradient. Also
// the unboundedness probe: a direction of negative curvature is followed
// until the objective either turns up or passes the unbounded level.
inline void newton_polish(const TranscribedObjective& obj, LocalResult& r,
                          const TranscribeOptions& opts) {
  const int dim = obj.dim();
  for (int it = 0; it < 6; ++it) {
    VectorXd g;
    obj.eval(r.w, nullptr, &g);
    r.grad_norm = g.norm();
    if (r.grad_norm <= 1e-3 * opts.grad_tol * (1.0 + std::abs(r.f))) return;
    MatrixXd H(dim, dim);
    for (int i = 0; i < dim; ++i) {
      const double step = 1e-5 * (1.0 + std::abs(r.w(i)));
      VectorXd wp = r.w, wm = r.w, gp, gm;
      wp(i) += step;
      wm(i) -= step;
      obj.eval(wp, nullptr, &gp);
      obj.eval(wm, nullptr, &gm);
      H.col(i) = (gp - gm) / (2.0 * step);
    }
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    const double lmin = es.eigenvalues()(0);
    if (lmin <= 0.0) {
      const VectorXd dir = es.eigenvectors().col(0);
      for (int k = 0; k <= 12; ++k) {
        const double step = std::ldexp(1.0, k);
        const double f = std::min(obj.value(r.w + step * dir), obj.value(r.w - step * dir));
        if (!(f > -opts.unbounded_level))
          throw UnboundedBelow("transcribe_cost: negative curvature direction is unbounded below");
      }
      return;
    }
    const VectorXd d = -es.eigenvectors() *
                       (es.eigenvalues().cwiseInverse().asDiagonal() *
                        (es.eigenvectors().transpose() * g));
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const VectorXd w = r.w + alpha * d;
      double f;
      VectorXd gn;
      obj.eval(w, &f, &gn);
      // Near the optimum f only moves by rounding; a smaller gradient decides.
      const bool flat = f <= r.f + 1e-14 * (1.0 + std::abs(r.f)) && gn.norm() < r.grad_norm;
      if (f < r.f || flat) {
        r.w = w;
        r.f = f;
        r.grad_norm = gn.norm();
        break;
      }
    }
  }
}

}  // namespace detail

inline TranscribeResult transcribe_cost(const ControlProblem& problem,
                                        const TranscribeOptions& opts = {}) {
  if (opts.starts < 1) throw InvalidArgument("transcribe_cost: need at least one start");
  const TranscribedObjective obj(problem);
  if (obj.dim() == 0) {
    TranscribeResult r;
    r.cost = obj.value(VectorXd());
    r.path = obj.path(VectorXd());
    return r;
  }
  gsl_set_error_handler_off();
  VectorXd seed = obj.hermite_seed();
  if (opts.warm_start) {
    if (opts.warm_start->rows() != obj.free_rows() || opts.warm_start->cols() != problem.n)
      throw InvalidArgument("transcribe_cost: warm start has the wrong shape");
    seed = obj.pack(*opts.warm_start);
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  const double spread = 0.5 * (1.0 + seed.cwiseAbs().maxCoeff());

  TranscribeResult best;
  best.cost = std::numeric_limits<double>::infinity();
  double lowest_seen = std::numeric_limits<double>::infinity();
  VectorXd best_w;
  for (int k = 0; k < opts.starts; ++k) {
    VectorXd w0 = seed;
    if (k > 0)
      for (Eigen::Index i = 0; i < w0.size(); ++i) w0(i) += spread * normal(rng);
    auto local = detail::bfgs(obj, w0, opts);
    detail::newton_polish(obj, local, opts);
    best.iterations += local.iterations;
    lowest_seen = std::min(lowest_seen, local.f);
    const bool converged =
        local.grad_norm <= std::max(opts.grad_tol, 1e-7) * (1.0 + std::abs(local.f));
    if (converged && local.f < best.cost) {
      best.cost = local.f;
      best_w = local.w;
      best.best_start = k;
    }
  }
  if (best_w.size() == 0) {
    throw NonConvergence("transcribe_cost: no start converged after " +
                             std::to_string(best.iterations) + " iterations",
                         lowest_seen);
  }
  best.path = obj.path(best_w);
  return best;
}

/// (s0(t)/s0(s))^{-n/2} exp(-c + U(y)/2 - U(x)/2), s0 from the corrected
/// closed forms of `regime`.
inline double harnack_rhs(double s, double t, const VectorXd& x, const VectorXd& y,
                          const Potential& U, const Regime& regime, int m = 32,
                          const TranscribeOptions& opts = {}) {
  if (!(s > 0.0 && t > s)) throw InvalidArgument("harnack_rhs: need 0 < s < t");
  const int n = U.n();
  const double s0t = eval_sfuncs(regime, t, SFormulas::Corrected).s0;
  const double s0s = eval_sfuncs(regime, s, SFormulas::Corrected).s0;
  double c;
  if (std::holds_alternative<ZeroPotential>(U.variant())) {
    c = energy_cost(x, y, s, t);
  } else {
    ControlProblem p{n, x, y, s, t, HFunction::from_potential(U), m};
    c = transcribe_cost(p, opts).cost;
  }
  return std::pow(s0t / s0s, -0.5 * n) * std::exp(-c + 0.5 * U.value(y) - 0.5 * U.value(x));
}

/// Per-sample generator: independent of evaluation order.
inline std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// min over sampled (x, y) of [rho_t(y)/rho_s(x)] / RHS for the origin kernel
/// (n = 1, pairs uniform on [-3, 3]^4). Ratios are formed in log space.
/// Record 0 is the sampled minimum; record 1 the mean-to-mean pair.
inline HarnackReport verify_harnack_kernel(double s, double t, int samples, std::uint64_t seed,
                                           double tol = 1e-6) {
  if (!(s > 0.0 && t > s)) throw InvalidArgument("verify_harnack_kernel: need 0 < s < t");
  if (samples < 1) throw InvalidArgument("verify_harnack_kernel: need samples >= 1");
  const auto ks = propagate_origin(1, s), kt = propagate_origin(1, t);
  const Regime r5 = classify(0.0, 0.0);
  const double log_pref = -0.5 * std::log(eval_sfuncs(r5, t, SFormulas::Corrected).s0 /
                                          eval_sfuncs(r5, s, SFormulas::Corrected).s0);
  auto log_ratio = [&](const VectorXd& x, const VectorXd& y) {
    return log_density(kt, y) - log_density(ks, x) - (log_pref - energy_cost(x, y, s, t));
  };
  HarnackReport rep;
  rep.campaign = "harnack_kernel";
  HarnackRecord worst{"min_ratio", t, {}, std::numeric_limits<double>::infinity(), 1.0 - tol,
                      Bound::AtLeast};
  std::size_t within = 0;
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int k = 0; k < samples; ++k) {
    auto rng = sample_rng(seed, static_cast<std::uint64_t>(k));
    VectorXd x(2), y(2);
    x << unif(rng), unif(rng);
    y << unif(rng), unif(rng);
    const double ratio = std::exp(log_ratio(x, y));
    if (ratio >= 1.0 - tol) ++within;
    if (ratio < worst.value) {
      worst.value = ratio;
      worst.location = {x(0), x(1), y(0), y(1)};
    }
  }
  rep.add(worst);
  const VectorXd zero = VectorXd::Zero(2);
  const double eq = std::exp(log_ratio(zero, zero));
  rep.add({"equality_pair_deviation", t, {0, 0, 0, 0}, std::abs(eq - 1.0), 1e-10, Bound::AtMost});
  rep.fraction_within_tol = static_cast<double>(within) / samples;
  return rep;
}

struct CostRow {
  double s, t, x0, v0, x1, v1, cost;
  std::string method;
  int m;
  double gap;
};

/// CSV `s,t,x0,v0,x1,v1,cost,method,m,gap` (n = 1 rows).
inline void write_cost_csv(std::ostream& os, const std::vector<CostRow>& rows) {
  os << "s,t,x0,v0,x1,v1,cost,method,m,gap\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.s << ',' << r.t << ',' << r.x0 << ',' << r.v0 << ',' << r.x1 << ',' << r.v1 << ','
       << r.cost << ',' << r.method << ',' << r.m << ',' << r.gap << '\n';
  }
}

}  // namespace harnack
