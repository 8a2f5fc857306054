#pragma once

// Closed-form Harnack bounds for K = diag(k1 I, k2 I).
//
// The bound has the shape
//
//   N(t) = 1/2 [ -s1/s0 I    s2/s0 I  ]
//              [  s2/s0 I  -s0'/s0 I  ]
//
// with (s0, s1, s2) given in five regimes of (k1, k2). Two formula sets are
// kept side by side:
//
//   Printed    the formulas exactly as published;
//   Corrected  the formulas that reproduce the Riccati solution. Regimes 1-3
//              are unchanged. In regime 4 the first sinh^2 term takes the
//              argument sqrt(k2/2) t (not sqrt(2 k2) t) and the overall sign
//              is flipped so that s0 > 0. In regime 5, s1 = 12 t and
//              s2 = 6 t^2 (twice the printed values).
//
// Ratios s_i/s0 are invariant under a common rescaling of (s0, s1, s2), so
// the sign flip in regime 4 changes nothing in the bound itself.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "harnack/block_sym.hpp"
#include "harnack/errors.hpp"
#include "harnack/riccati.hpp"

namespace harnack {

enum class RegimeTag {
  Case1HyperbolicDistinct,
  Case2HyperbolicDouble,
  Case3Oscillatory,
  Case4K1Zero,
  Case5FullyDegenerate,
};

inline const char* to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::Case1HyperbolicDistinct: return "CASE1_hyperbolic_distinct";
    case RegimeTag::Case2HyperbolicDouble: return "CASE2_hyperbolic_double";
    case RegimeTag::Case3Oscillatory: return "CASE3_oscillatory";
    case RegimeTag::Case4K1Zero: return "CASE4_k1_zero";
    case RegimeTag::Case5FullyDegenerate: return "CASE5_fully_degenerate";
  }
  return "?";
}

enum class SFormulas { Printed, Corrected };

enum class NormalizationRule {
  /// Published formulas with the global factor 1/2.
  Printed,
  /// Formulas calibrated against the Riccati solution (the Corrected set).
  OracleCalibrated,
};

inline const char* to_string(NormalizationRule r) {
  return r == NormalizationRule::Printed ? "PRINTED" : "ORACLE_CALIBRATED";
}

struct Regime {
  RegimeTag tag{};
  double k1 = 0.0;
  double k2 = 0.0;
  // Spectral parameters; only those belonging to `tag` are meaningful.
  double lambda1 = 0.0, lambda2 = 0.0;  // case 1
  double root = 0.0;                    // sqrt(k2) in case 2, sqrt(2 k2) in case 4
  double mu1 = 0.0, mu2 = 0.0;          // case 3
  /// (0, window) is where s0 > 0; +inf when no zero was found.
  double window_printed = std::numeric_limits<double>::infinity();
  double window_corrected = std::numeric_limits<double>::infinity();

  double window(SFormulas f) const {
    return f == SFormulas::Printed ? window_printed : window_corrected;
  }
};

struct SFuncs {
  Regime regime;
  SFormulas formulas = SFormulas::Printed;
  double t = 0.0;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s0dot = 0.0;
};

namespace detail {

constexpr double kHypClamp = 700.0;

inline double sh(double x) { return std::sinh(std::clamp(x, -kHypClamp, kHypClamp)); }
inline double ch(double x) { return std::cosh(std::clamp(x, -kHypClamp, kHypClamp)); }

/// (s0, s1, s2, s0dot) at t without any domain check.
inline std::array<double, 4> raw_sfuncs(const Regime& r, double t, SFormulas f) {
  using std::sin, std::cos, std::sqrt;
  switch (r.tag) {
    case RegimeTag::Case1HyperbolicDistinct: {
      const double l1 = r.lambda1, l2 = r.lambda2;
      const double sh1 = sh(l1 * t), ch1 = ch(l1 * t), sh2 = sh(l2 * t), ch2 = ch(l2 * t);
      const double p = l1 * l1 + l2 * l2, q = l1 * l2;
      const double s0 = p * sh1 * sh2 + 2.0 * q * (1.0 - ch1 * ch2);
      const double s1 = q * (l1 * l1 - l2 * l2) * (l1 * sh1 * ch2 - l2 * ch1 * sh2);
      const double s2 = q * (p * (ch1 * ch2 - 1.0) - 2.0 * q * sh1 * sh2);
      const double s0dot =
          p * (l1 * ch1 * sh2 + l2 * sh1 * ch2) - 2.0 * q * (l1 * sh1 * ch2 + l2 * ch1 * sh2);
      return {s0, s1, s2, s0dot};
    }
    case RegimeTag::Case2HyperbolicDouble: {
      const double k2 = r.k2, rt = r.root * t;
      const double s = sh(rt), c = ch(rt);
      const double s0 = s * s - k2 * t * t;
      const double s1 = 2.0 * std::pow(k2, 1.5) * (rt + s * c);
      const double s2 = k2 * (s * s + k2 * t * t);
      const double s0dot = 2.0 * r.root * s * c - 2.0 * k2 * t;
      return {s0, s1, s2, s0dot};
    }
    case RegimeTag::Case3Oscillatory: {
      const double m1 = r.mu1, m2 = r.mu2;
      const double a = m1 / std::sqrt(2.0), b = m2 / std::sqrt(2.0);
      const double sa = sh(a * t), ca = ch(a * t), sb = sin(b * t), cb = cos(b * t);
      const double s0 = m2 * m2 * sa * sa - m1 * m1 * sb * sb;
      const double s1 = 2.0 * sqrt(r.k1) * m1 * m2 * (m1 * sb * cb + m2 * ca * sa);
      const double s2 = sqrt(2.0 * r.k1) * (m1 * m1 * sb * sb + m2 * m2 * sa * sa);
      const double s0dot = 2.0 * a * m2 * m2 * sa * ca - 2.0 * b * m1 * m1 * sb * cb;
      return {s0, s1, s2, s0dot};
    }
    case RegimeTag::Case4K1Zero: {
      const double L = r.root;                  // sqrt(2 k2)
      const double a = sqrt(r.k2 / 2.0);        // sqrt(k2 / 2) = L / 2
      const double sa = sh(a * t), ca = ch(a * t);
      const double s1c = 2.0 * sqrt(2.0 * r.k2 * r.k2 * r.k2) * sa * ca;
      const double s2c = 2.0 * r.k2 * sa * sa;
      const double cross = L * t * ca * sa;
      const double cross_dot = L * (sa * ca + a * t * (ca * ca + sa * sa));
      if (f == SFormulas::Printed) {
        const double sL = sh(L * t), cL = ch(L * t);
        return {2.0 * sL * sL - cross, -s1c, -s2c, 4.0 * L * sL * cL - cross_dot};
      }
      return {cross - 2.0 * sa * sa, s1c, s2c, cross_dot - 4.0 * a * sa * ca};
    }
    case RegimeTag::Case5FullyDegenerate: {
      const double scale = f == SFormulas::Printed ? 1.0 : 2.0;
      return {t * t * t * t, scale * 6.0 * t, scale * 3.0 * t * t, 4.0 * t * t * t};
    }
  }
  return {0, 0, 0, 0};
}

/// Largest exponential rate appearing in the regime's formulas.
inline double growth_rate(const Regime& r) {
  switch (r.tag) {
    case RegimeTag::Case1HyperbolicDistinct: return r.lambda1 + r.lambda2;
    case RegimeTag::Case2HyperbolicDouble: return 2.0 * r.root;
    case RegimeTag::Case3Oscillatory: return 2.0 * r.mu1 / std::sqrt(2.0);
    case RegimeTag::Case4K1Zero: return 2.0 * r.root;
    case RegimeTag::Case5FullyDegenerate: return 0.0;
  }
  return 0.0;
}

/// First positive zero of s0, located by bracketing with `step` and then
/// bisection. +inf if s0 stays positive over the scanned range.
inline double first_zero(const Regime& r, SFormulas f, double step = 0.01,
                         double t_scan_max = 50.0) {
  const double rate = growth_rate(r);
  const double t_stop = rate > 0.0 ? std::min(t_scan_max, 300.0 / rate) : t_scan_max;
  auto s0 = [&](double t) { return raw_sfuncs(r, t, f)[0]; };
  double lo = 0.0;
  for (double t = step; t <= t_stop + 0.5 * step; t += step) {
    if (!(s0(t) > 0.0)) {
      double a = lo, b = t;
      if (a == 0.0) a = 1e-3 * step;
      if (!(s0(a) > 0.0)) return 0.0;
      for (int i = 0; i < 200 && b - a > 1e-15 * b; ++i) {
        const double m = 0.5 * (a + b);
        (s0(m) > 0.0 ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    lo = t;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Classify (k1, k2). |k2^2 - 2 k1| <= eq_tol * max(1, k2^2) resolves to the
/// equality regimes.
inline Regime classify(double k1, double k2, double eq_tol = 1e-12) {
  if (!(k1 >= 0.0) || !(k2 >= 0.0)) {
    throw InvalidArgument("classify: k1 and k2 must be non-negative");
  }
  Regime r;
  r.k1 = k1;
  r.k2 = k2;
  const double disc = k2 * k2 - 2.0 * k1;
  const bool equal = std::abs(disc) <= eq_tol * std::max(1.0, k2 * k2);
  if (k1 == 0.0 && k2 == 0.0) {
    r.tag = RegimeTag::Case5FullyDegenerate;
  } else if (k1 == 0.0) {
    r.tag = RegimeTag::Case4K1Zero;
    r.root = std::sqrt(2.0 * k2);
  } else if (equal) {
    r.tag = RegimeTag::Case2HyperbolicDouble;
    r.root = std::sqrt(k2);
  } else if (disc > 0.0) {
    r.tag = RegimeTag::Case1HyperbolicDistinct;
    const double sq = std::sqrt(disc);
    r.lambda1 = std::sqrt(k2 + sq);
    r.lambda2 = std::sqrt(k2 - sq);
  } else {
    r.tag = RegimeTag::Case3Oscillatory;
    r.mu1 = std::sqrt(std::sqrt(2.0 * k1) + k2);
    r.mu2 = std::sqrt(std::sqrt(2.0 * k1) - k2);
  }
  r.window_printed = detail::first_zero(r, SFormulas::Printed);
  r.window_corrected = detail::first_zero(r, SFormulas::Corrected);
  return r;
}

/// s0, s1, s2 and the analytic derivative of s0 at time t.
inline SFuncs eval_sfuncs(const Regime& regime, double t,
                          SFormulas formulas = SFormulas::Printed) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("eval_sfuncs: t must be positive");
  const double window = regime.window(formulas);
  const auto v = detail::raw_sfuncs(regime, t, formulas);
  if (t >= window || !(v[0] > 0.0)) {
    // Past the scanned range the window is reported as +inf; rescan up to t.
    const double zero =
        std::isfinite(window) ? window : detail::first_zero(regime, formulas, 0.01, t + 1.0);
    throw DomainError(std::string("eval_sfuncs: t=") + std::to_string(t) +
                      " outside the validity window of " + to_string(regime.tag) +
                      "; first positive zero of s0 at t=" + std::to_string(zero));
  }
  return SFuncs{regime, formulas, t, v[0], v[1], v[2], v[3]};
}

/// Harnack bound matrix 1/2 (-s1/s0 I, s2/s0 I; s2/s0 I, -s0'/s0 I).
/// OracleCalibrated re-evaluates Printed inputs with the Corrected formulas.
inline BlockSym2n assemble_bound(const SFuncs& sf, int n,
                                 NormalizationRule rule = NormalizationRule::OracleCalibrated) {
  if (n < 1) throw InvalidArgument("assemble_bound: n must be >= 1");
  SFuncs use = sf;
  if (rule == NormalizationRule::OracleCalibrated && sf.formulas == SFormulas::Printed) {
    use = eval_sfuncs(sf.regime, sf.t, SFormulas::Corrected);
  }
  if (use.s0 == 0.0) throw DomainError("assemble_bound: s0 = 0");
  return BlockSym2n::scalar_blocks(n, -0.5 * use.s1 / use.s0, 0.5 * use.s2 / use.s0,
                                   -0.5 * use.s0dot / use.s0);
}

/// Convenience: classify, evaluate and assemble in one go.
inline BlockSym2n closed_form_bound(double k1, double k2, double t, int n,
                                    NormalizationRule rule = NormalizationRule::OracleCalibrated) {
  const auto regime = classify(k1, k2);
  const auto formulas =
      rule == NormalizationRule::Printed ? SFormulas::Printed : SFormulas::Corrected;
  return assemble_bound(eval_sfuncs(regime, t, formulas), n, rule);
}

struct ErrataRow {
  std::string regime;
  double k1 = 0, k2 = 0, t = 0;
  std::string block;
  double printed = 0, oracle = 0, ratio = 0;
};

struct BlockCalibration {
  std::string block;
  /// Least-squares scale c minimising sum (printed - c * oracle)^2.
  double scale = 0.0;
  /// max |printed - scale * oracle| / |oracle| over the grid.
  double fit_residual = 0.0;
  bool sign_disagreement = false;
};

struct ReconcileReport {
  Regime regime;
  std::vector<ErrataRow> rows;
  std::vector<BlockCalibration> blocks;
};

/// Compare the printed bound to the Riccati solution on a time grid.
/// Discrepancies are data: nothing here throws for a mismatch.
inline ReconcileReport reconcile(double k1, double k2, const std::vector<double>& t_grid,
                                 double tol = 1e-10) {
  ReconcileReport rep;
  rep.regime = classify(k1, k2);
  const CurvatureBound K(1, k1, k2);
  const char* names[3] = {"xx", "xv", "vv"};
  const int idx[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  double num[3] = {0, 0, 0}, den[3] = {0, 0, 0};
  std::vector<std::array<double, 2>> pairs[3];
  for (double t : t_grid) {
    const auto oracle = bound_N(K, t, tol);
    double printed_vals[3];
    bool have_printed = true;
    try {
      const auto pb = assemble_bound(eval_sfuncs(rep.regime, t, SFormulas::Printed), 1,
                                     NormalizationRule::Printed);
      for (int b = 0; b < 3; ++b) printed_vals[b] = pb(idx[b][0], idx[b][1]);
    } catch (const DomainError&) {
      have_printed = false;
    }
    for (int b = 0; b < 3; ++b) {
      const double o = oracle(idx[b][0], idx[b][1]);
      const double p = have_printed ? printed_vals[b] : std::numeric_limits<double>::quiet_NaN();
      rep.rows.push_back({to_string(rep.regime.tag), k1, k2, t, names[b], p, o, p / o});
      if (have_printed) {
        num[b] += p * o;
        den[b] += o * o;
        pairs[b].push_back({p, o});
      }
    }
  }
  for (int b = 0; b < 3; ++b) {
    BlockCalibration cal;
    cal.block = names[b];
    cal.scale = den[b] > 0.0 ? num[b] / den[b] : std::numeric_limits<double>::quiet_NaN();
    for (const auto& [p, o] : pairs[b]) {
      cal.fit_residual = std::max(cal.fit_residual, std::abs(p - cal.scale * o) / std::abs(o));
      if ((p > 0.0) != (o > 0.0) && p != 0.0 && o != 0.0) cal.sign_disagreement = true;
    }
    rep.blocks.push_back(cal);
  }
  return rep;
}

/// CSV with header `regime,k1,k2,t,block,printed,oracle,ratio`.
inline void write_errata_csv(std::ostream& os, const std::vector<ErrataRow>& rows,
                             bool header = true) {
  if (header) os << "regime,k1,k2,t,block,printed,oracle,ratio\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.regime << ',' << r.k1 << ',' << r.k2 << ',' << r.t << ',' << r.block << ','
       << r.printed << ',' << r.oracle << ',' << r.ratio << '\n';
  }
}

}  // namespace harnack
