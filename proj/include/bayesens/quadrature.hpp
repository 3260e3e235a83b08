#pragma once

// Posterior means of one-dimensional unnormalized densities w on (0, inf)
// given in log space.
//
// Integration runs in u = log x, where the integrand is w(e^u) e^u. Power
// laws at the origin (w ~ x^k) become exponential tails in u, so endpoint
// behaviour that stalls Gauss-Kronrod in x is smooth here.
//
// 1. Peak: coarse scan over u = log(1e-12) + k log 2, k < 81, then golden
//    section inside the best bracket.
// 2. Support: walk outward from the peak with doubling steps until the log
//    integrand drops below peak - log_drop; the default drop of 745 is where
//    exp() underflows in double precision.
// 3. Integrate w and x * w (both shifted by the peak) over `initial_panels`
//    equal panels with adaptive 7/15-point Gauss-Kronrod bisection, both
//    integrands sharing nodes. Panel tolerance is rel_tol scaled by the
//    panel's share of the support.
// 4. If a panel exhausts max_depth the whole integral is redone with a
//    doubling trapezoid rule; if that also fails a NumericalError is thrown.
//
// The node schedule is fixed, so identical inputs give bit-identical output.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>

#include "bayesens/errors.hpp"

namespace bayesens {

struct QuadratureOptions {
  int initial_panels = 32;
  double rel_tol = 1e-10;
  int max_depth = 40;
  double log_drop = 745.0;
  int max_trapezoid_levels = 22;
};

struct DensityMoments {
  double mean = 0.0;            // E[x]
  double log_normalizer = 0.0;  // log of the integral of w
  double mode = 0.0;            // peak of x * w(x)
  double lower = 0.0;  // integration support
  double upper = 0.0;
  std::size_t evaluations = 0;
  bool used_fallback = false;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename LogDensity>
class MomentIntegrator {
 public:
  MomentIntegrator(LogDensity& logw, double shift, const QuadratureOptions& opt)
      : logw_(logw), shift_(shift), opt_(opt) {}

  struct Pair {
    double w = 0.0;
    double xw = 0.0;
  };

  // Integrand in u = log x: w(e^u) e^u, shifted by the log peak.
  double weight(double u) {
    ++evaluations_;
    const double lw = logw_(std::exp(u)) + u - shift_;
    return std::isfinite(lw) ? std::exp(lw) : 0.0;
  }

  // Kronrod estimate and |Kronrod - Gauss| for both integrands on [a, b].
  std::pair<Pair, Pair> gk15(double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Pair k{}, g{};
    const double fc = weight(c);
    k.w = kWgk[7] * fc;
    k.xw = kWgk[7] * std::exp(c) * fc;
    g.w = kWg[3] * fc;
    g.xw = kWg[3] * std::exp(c) * fc;
    for (int j = 0; j < 7; ++j) {
      const double dx = h * kXgk[j];
      const double x1 = c - dx, x2 = c + dx;
      const double f1 = weight(x1), f2 = weight(x2);
      k.w += kWgk[j] * (f1 + f2);
      const double m1 = std::exp(x1) * f1, m2 = std::exp(x2) * f2;
      k.xw += kWgk[j] * (m1 + m2);
      if (j % 2 == 1) {
        g.w += kWg[j / 2] * (f1 + f2);
        g.xw += kWg[j / 2] * (m1 + m2);
      }
    }
    k.w *= h;
    k.xw *= h;
    g.w *= h;
    g.xw *= h;
    return {k, {std::abs(k.w - g.w), std::abs(k.xw - g.xw)}};
  }

  Pair adaptive(double a, double b, double tol_w, double tol_xw, int depth) {
    const auto [est, err] = gk15(a, b);
    if ((err.w <= tol_w && err.xw <= tol_xw) || !(b - a > 0.0)) return est;
    if (depth >= opt_.max_depth) {
      failed_ = true;
      return est;
    }
    const double m = 0.5 * (a + b);
    const Pair l = adaptive(a, m, 0.5 * tol_w, 0.5 * tol_xw, depth + 1);
    const Pair r = adaptive(m, b, 0.5 * tol_w, 0.5 * tol_xw, depth + 1);
    return {l.w + r.w, l.xw + r.xw};
  }

  Pair panels(double lo, double hi) {
    const int n = opt_.initial_panels;
    const double width = (hi - lo) / n;
    Pair scale{};
    for (int p = 0; p < n; ++p) {
      const double a = lo + p * width;
      const double b = p + 1 == n ? hi : lo + (p + 1) * width;
      const auto est = gk15(a, b).first;
      scale.w += std::abs(est.w);
      scale.xw += std::abs(est.xw);
    }
    Pair total{};
    for (int p = 0; p < n; ++p) {
      const double a = lo + p * width;
      const double b = p + 1 == n ? hi : lo + (p + 1) * width;
      const Pair part = adaptive(a, b, opt_.rel_tol * scale.w / n, opt_.rel_tol * scale.xw / n, 0);
      total.w += part.w;
      total.xw += part.xw;
    }
    return total;
  }

  Pair trapezoid(double lo, double hi) {
    std::size_t n = 64;
    auto rule = [&](std::size_t count) {
      const double h = (hi - lo) / static_cast<double>(count);
      Pair s{};
      for (std::size_t i = 0; i <= count; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double f = weight(x) * (i == 0 || i == count ? 0.5 : 1.0);
        s.w += f;
        s.xw += std::exp(x) * f;
      }
      return Pair{s.w * h, s.xw * h};
    };
    Pair prev = rule(n);
    for (int level = 1; level <= opt_.max_trapezoid_levels; ++level) {
      n *= 2;
      const Pair cur = rule(n);
      const bool ok = std::abs(cur.w - prev.w) <= opt_.rel_tol * 100 * std::abs(cur.w) &&
                      std::abs(cur.xw - prev.xw) <= opt_.rel_tol * 100 * std::abs(cur.xw);
      if (ok) return cur;
      prev = cur;
    }
    failed_ = true;
    return prev;
  }

  bool failed() const noexcept { return failed_; }
  void reset_failure() noexcept { failed_ = false; }
  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  LogDensity& logw_;
  double shift_;
  const QuadratureOptions& opt_;
  bool failed_ = false;
  std::size_t evaluations_ = 0;
};

}  // namespace detail

/// Mean of the density proportional to exp(logw(x)) on (0, inf).
/// `logw` may return -inf (or NaN) where the density vanishes; it must be
/// finite somewhere on the scan grid.
template <typename LogDensity>
DensityMoments log_space_mean(LogDensity&& logw, const QuadratureOptions& opt = {}) {
  std::size_t evals = 0;
  auto f = [&](double x) {
    ++evals;
    const double v = logw(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  // log of the integrand in u = log x
  auto h = [&](double u) { return f(std::exp(u)) + u; };

  // Coarse scan for the peak.
  const double scan_lo = std::log(1e-12);
  const double scan_step = std::log(2.0);
  constexpr int kScanPoints = 81;  // up to ~1.2e12
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScanPoints; ++k) {
    const double v = h(scan_lo + k * scan_step);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  if (!std::isfinite(best_val)) throw NumericalError("log-density is not finite anywhere on the scan grid");

  // Golden section on the neighbouring bracket; an edge bracket extends
  // further out so densities peaking beyond the grid are still found.
  double a = scan_lo + (best == 0 ? -40.0 : (best - 1) * scan_step);
  double b = scan_lo + (best == kScanPoints - 1 ? best * scan_step + 40.0 : (best + 1) * scan_step);
  constexpr double kInvPhi = 0.6180339887498948482;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = h(c), fd = h(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = h(d);
    }
  }
  double mode_u = fc >= fd ? c : d;
  double peak = std::max(fc, fd);
  if (best_val > peak) {
    mode_u = scan_lo + best * scan_step;
    peak = best_val;
  }

  // Support where the log integrand stays within log_drop of the peak.
  // Below u = -708 (x near the smallest normal double) nothing is left to add.
  constexpr double kMinU = -708.0;
  const double floor_val = peak - opt.log_drop;
  double lo = mode_u;
  for (double step = 0.25; lo > kMinU; step *= 2.0) {
    lo = std::max(mode_u - step, kMinU);
    if (h(lo) < floor_val) break;
  }
  double hi = mode_u;
  for (double step = 0.25; step < 1e4; step *= 2.0) {
    hi = mode_u + step;
    if (h(hi) < floor_val) break;
  }

  detail::MomentIntegrator integ(f, peak, opt);
  auto total = integ.panels(lo, hi);
  bool fallback = false;
  if (integ.failed()) {
    integ.reset_failure();
    fallback = true;
    total = integ.trapezoid(lo, hi);
  }
  if (integ.failed() || !(total.w > 0.0) || !std::isfinite(total.xw)) {
    std::ostringstream msg;
    msg << "posterior-mean quadrature did not converge: support [" << std::exp(lo) << ", " << std::exp(hi)
        << "], mode " << std::exp(mode_u) << ", log-peak " << peak << ", integral " << total.w << ", evaluations "
        << evals;
    throw NumericalError(msg.str());
  }

  DensityMoments out;
  out.mean = total.xw / total.w;
  out.log_normalizer = peak + std::log(total.w);
  out.mode = std::exp(mode_u);
  out.lower = std::exp(lo);
  out.upper = std::exp(hi);
  out.evaluations = evals;
  out.used_fallback = fallback;
  return out;
}

}  // namespace bayesens
