#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "rkz/lambert_w.hpp"

namespace rkz {

// Learning-rate schedule for the relaxed randomized Kaczmarz iteration under
// independent mean-zero noise, together with its closed-form error bound
//
//   f(k) = sigma^2 / (eta * W(e^(eta*k + c))),
//   c    = sigma^2/(eta*|x - x0|^2) - ln(eta*|x - x0|^2/sigma^2).
//
// The schedule state advances the recursion
//
//   alpha_k  = eta*beta_k / (eta*beta_k + 1),
//   beta_k+1 = beta_k * (1 - eta*alpha_k),      beta_0 = |x - x0|^2/sigma^2,
//
// and sigma^2*beta_k is guaranteed to stay at or below f(k): beta is one
// forward-Euler trajectory of the convex ODE u' = -u^2/(u+1) whose exact
// solution is 1/W(e^(t+c)).

struct ScheduleParams {
  double eta = 0.0;     // condition-number parameter, in (0, 1]
  double sigma2 = 0.0;  // noise variance, >= 0
  double beta0 = 0.0;   // initial squared error over sigma2, >= 0

  void validate() const {
    if (!(eta > 0.0) || !(eta <= 1.0))
      throw std::invalid_argument("ScheduleParams: eta must be in (0, 1]");
    if (!(sigma2 >= 0.0))
      throw std::invalid_argument("ScheduleParams: sigma2 must be >= 0");
    if (!(beta0 >= 0.0))
      throw std::invalid_argument("ScheduleParams: beta0 must be >= 0");
  }
};

struct ScheduleState {
  std::size_t k = 0;
  double beta = 0.0;   // beta_k; identically 0 in the noise-free case
  double alpha = 1.0;  // rate applied at step k
};

namespace detail {
inline double rate_for(double eta, double beta) { return eta * beta / (eta * beta + 1.0); }
}  // namespace detail

inline ScheduleState initial_state(const ScheduleParams& p) {
  p.validate();
  if (p.sigma2 == 0.0) return {0, 0.0, 1.0};  // consistent system: full projection
  return {0, p.beta0, detail::rate_for(p.eta, p.beta0)};
}

inline ScheduleState schedule_step(const ScheduleState& s, const ScheduleParams& p) {
  if (p.sigma2 == 0.0) return {s.k + 1, 0.0, 1.0};
  const double beta_next = s.beta * (1.0 - p.eta * s.alpha);
  return {s.k + 1, beta_next, detail::rate_for(p.eta, beta_next)};
}

// Parameters of the closed-form bound f. Kept separate from ScheduleParams
// because f is also evaluated at real-valued arguments (the continuous-time
// rate below) and in units of |x - x0|^2 rather than beta.
struct BoundParams {
  double c = 0.0;
  double eta = 0.0;
  double sigma2 = 0.0;
  double x0_err2 = 0.0;

  static BoundParams from_initial_error(double eta, double sigma2, double x0_err2) {
    if (!(eta > 0.0) || !(eta <= 1.0))
      throw std::invalid_argument("BoundParams: eta must be in (0, 1]");
    if (!(sigma2 > 0.0))
      throw std::invalid_argument("BoundParams: sigma2 must be > 0");
    if (!(x0_err2 > 0.0))
      throw std::invalid_argument("BoundParams: x0_err2 must be > 0");
    const double u0 = eta * x0_err2 / sigma2;
    return {1.0 / u0 - std::log(u0), eta, sigma2, x0_err2};
  }

  static BoundParams from_beta0(double eta, double beta0, double sigma2 = 1.0) {
    return from_initial_error(eta, sigma2, beta0 * sigma2);
  }
};

inline double bound_f(double k, const BoundParams& bp) {
  if (bp.sigma2 == 0.0)
    throw std::domain_error("bound_f: degenerate at sigma2 = 0, use asymptote_small_sigma");
  if (!(k >= 0.0)) throw std::invalid_argument("bound_f: k must be >= 0");
  return bp.sigma2 / (bp.eta * lambert_w_exp(bp.eta * k + bp.c));
}

// Continuous-time version of the optimal rate, alpha(t) = eta*f(t)/(eta*f(t) + sigma^2).
inline double continuous_alpha(double t, const BoundParams& bp) {
  const double ft = bound_f(t, bp);
  return bp.eta * ft / (bp.eta * ft + bp.sigma2);
}

// Noise-free limit: f(k) ~ e^(-eta*k)*|x - x0|^2 as sigma -> 0.
inline double asymptote_small_sigma(double k, double eta, double x0_err2) {
  if (!(eta > 0.0) || !(eta <= 1.0))
    throw std::invalid_argument("asymptote_small_sigma: eta must be in (0, 1]");
  if (!(x0_err2 > 0.0))
    throw std::invalid_argument("asymptote_small_sigma: x0_err2 must be > 0");
  return std::exp(-eta * k) * x0_err2;
}

// Long-run limit: f(k) ~ sigma^2/(eta^2*k) as k -> infinity.
inline double asymptote_large_k(double k, double eta, double sigma2) {
  if (!(k >= 1.0)) throw std::invalid_argument("asymptote_large_k: k must be >= 1");
  return sigma2 / (eta * eta * k);
}

// Squared-error floor delta^2/eta of the unit-rate iteration under arbitrary
// noise bounded by delta*|a_i| per equation.
inline double needell_horizon(double delta, double eta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("needell_horizon: delta must be >= 0");
  if (!(eta > 0.0) || !(eta <= 1.0))
    throw std::invalid_argument("needell_horizon: eta must be in (0, 1]");
  return delta * delta / eta;
}

// Cross-check of the simplification used by the production recursion: the
// unsimplified optimality recursion
//   beta_k+1 = (1 - (2*alpha_k - alpha_k^2)*eta)*beta_k + alpha_k^2
// is algebraically identical to beta_k+1 = beta_k*(1 - eta*alpha_k). Runs
// both and returns the largest relative discrepancy over k <= k_max.
inline double optimality_recursion_check(const ScheduleParams& p, std::size_t k_max) {
  p.validate();
  if (!(p.sigma2 > 0.0))
    throw std::invalid_argument("optimality_recursion_check: requires sigma2 > 0");
  double simplified = p.beta0;
  double unsimplified = p.beta0;
  double worst = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const double a_s = detail::rate_for(p.eta, simplified);
    simplified *= 1.0 - p.eta * a_s;
    const double a_u = detail::rate_for(p.eta, unsimplified);
    unsimplified = (1.0 - (2.0 * a_u - a_u * a_u) * p.eta) * unsimplified + a_u * a_u;
    const double scale = std::max(std::abs(simplified), 1e-300);
    worst = std::max(worst, std::abs(simplified - unsimplified) / scale);
  }
  return worst;
}

}  // namespace rkz
