#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rkz {

// Principal branch W0 of the Lambert-W function, the inverse of w -> w*e^w
// on [-1/e, inf). Two entry points:
//
//   lambert_w0(x)      evaluates W0(x) by Halley iteration with
//                      regime-specific starting guesses;
//   lambert_w_exp(xi)  evaluates W0(e^xi) without forming e^xi, i.e. solves
//                      w + ln w = xi, so it stays finite for exponents far
//                      beyond floating-point range.

struct WEvalReport {
  double value = 0.0;    // W0(x), always >= -1
  int iterations = 0;    // Halley iterations used
  double residual = 0.0; // |value*e^value - x| / max(|x|, 1)
};

inline constexpr double kLambertBranchPoint = -0.36787944117144233;  // -1/e
inline constexpr int kLambertIterationCap = 100;

namespace detail {

// Expansion about the branch point in p = sqrt(2*(e*x + 1)):
// W0 = -1 + p - p^2/3 + (11/72)p^3 - (43/540)p^4 + ...
inline double branch_point_series(double p) {
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * (43.0 / 540.0))));
}

inline double initial_guess(double x) {
  if (x < -0.32) {
    double q = std::fma(std::exp(1.0), x, 1.0);  // e*x + 1, may round below 0
    if (q < 0.0) q = 0.0;
    const double w = branch_point_series(std::sqrt(2.0 * q));
    return (w <= -1.0) ? -1.0 + 1e-12 : w;
  }
  if (x < 0.5) {
    // Maclaurin series W = x - x^2 + (3/2)x^3, fine as a seed up to ~0.5.
    return x * (1.0 + x * (-1.0 + x * 1.5));
  }
  if (x < std::exp(1.0)) {
    return std::log(1.0 + x);
  }
  const double l1 = std::log(x);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace detail

inline WEvalReport lambert_w0(double x, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("lambert_w0: tol must be positive");
  if (std::isnan(x)) throw std::domain_error("lambert_w0: x is NaN");
  if (x < kLambertBranchPoint) {
    if (x < kLambertBranchPoint - tol)
      throw std::domain_error("lambert_w0: x below branch point -1/e");
    x = kLambertBranchPoint;  // round-off slack just below the branch point
  }
  if (x == kLambertBranchPoint) return {-1.0, 0, 0.0};
  if (x == 0.0) return {0.0, 0, 0.0};

  const double scale = std::max(std::abs(x), 1.0);
  double w = detail::initial_guess(x);

  for (int it = 0; it <= kLambertIterationCap; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol * scale) return {w, it, std::abs(f) / scale};
    // Halley step with the usual second-order correction.
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - f * (w + 2.0) / (2.0 * wp1);
    double next = w - f / denom;
    if (next < -1.0) next = 0.5 * (w - 1.0);  // keep within the branch range
    w = next;
  }
  throw std::runtime_error("lambert_w0: no convergence for x = " + std::to_string(x));
}

// Solves w + ln w = xi (so w = W0(e^xi)) for any finite xi. Works in
// v = ln w: the function h(v) = v + e^v - xi is convex and increasing, so a
// bracketed Newton iteration converges for every input. The returned w
// satisfies |w + ln w - xi| <= tol * max(1, |xi|).
inline double lambert_w_exp(double xi, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("lambert_w_exp: tol must be positive");
  if (!std::isfinite(xi)) throw std::invalid_argument("lambert_w_exp: xi must be finite");

  double lo, hi;  // h(lo) < 0 < h(hi)
  if (xi > 1.0) {
    hi = std::log(xi);
    lo = std::log(xi - std::log(xi));
  } else {
    hi = xi;
    lo = xi - std::exp(xi);
  }
  const double scale = std::max(1.0, std::abs(xi));

  double v = hi;
  for (int it = 0; it <= kLambertIterationCap; ++it) {
    const double ev = std::exp(v);
    const double h = v + ev - xi;
    if (std::abs(h) <= tol * scale) return std::exp(v);
    if (h > 0.0) hi = v; else lo = v;
    double next = v - h / (1.0 + ev);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == v) return std::exp(v);  // bracket exhausted at double resolution
    v = next;
  }
  throw std::runtime_error("lambert_w_exp: no convergence for xi = " + std::to_string(xi));
}

}  // namespace rkz
