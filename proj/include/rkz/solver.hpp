#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rkz/linalg.hpp"
#include "rkz/sampler.hpp"
#include "rkz/schedule.hpp"

namespace rkz {

// A linear system prepared for the solver: matrix, corrupted right-hand side,
// and (when known) the ground truth and clean right-hand side for error
// tracking. In real-data mode x_true/b are absent and traces carry residuals
// only.
struct Problem {
  RowMatrix A;
  std::vector<double> b_tilde;
  double sigma = 0.0;
  std::optional<std::vector<double>> x_true;
  std::optional<std::vector<double>> b;

  void validate() const {
    if (b_tilde.size() != A.rows()) throw std::invalid_argument("Problem: b_tilde length != m");
    if (!(sigma >= 0.0)) throw std::invalid_argument("Problem: sigma must be >= 0");
    if (x_true && x_true->size() != A.cols())
      throw std::invalid_argument("Problem: x_true length != n");
    if (b && b->size() != A.rows()) throw std::invalid_argument("Problem: b length != m");
    if (x_true && b) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < A.rows(); ++i) {
        const double r = A.row_dot(i, *x_true) - (*b)[i];
        num += r * r;
        den += (*b)[i] * (*b)[i];
      }
      if (std::sqrt(num) > 1e-10 * std::sqrt(den) + 1e-14)
        throw std::invalid_argument("Problem: clean system A*x_true = b is inconsistent");
    }
  }
};

struct ConstantRate {
  double mu = 1.0;  // fixed relaxation in (0, 2)
};
struct ScheduledRate {
  ScheduleParams params;
};
struct ExplicitRate {
  std::vector<double> alphas;
};
using RatePolicy = std::variant<ConstantRate, ScheduledRate, ExplicitRate>;

inline void validate_policy(const RatePolicy& policy, std::size_t k_max) {
  if (const auto* c = std::get_if<ConstantRate>(&policy)) {
    if (!(c->mu > 0.0) || !(c->mu < 2.0))
      throw std::invalid_argument("ConstantRate: mu must be in (0, 2)");
  } else if (const auto* s = std::get_if<ScheduledRate>(&policy)) {
    s->params.validate();
  } else if (const auto* e = std::get_if<ExplicitRate>(&policy)) {
    if (e->alphas.size() < k_max)
      throw std::invalid_argument("ExplicitRate: fewer rates than iterations");
    for (double a : e->alphas)
      if (!std::isfinite(a)) throw std::invalid_argument("ExplicitRate: non-finite rate");
  }
}

enum class SamplerKind { weighted_without_replacement, in_order };

struct StepRecord {
  std::size_t row = 0;
  double alpha = 0.0;
  double residual = 0.0;  // b_tilde_i - <a_i, x_k>, before the update
  double sq_err = std::numeric_limits<double>::quiet_NaN();  // |x_{k+1} - x|^2
};

struct SolveTrace {
  double initial_sq_err = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepRecord> steps;
  std::vector<double> final_x;
  bool has_ground_truth = false;

  // |x_k - x|^2 for k = 0..steps.size(); NaNs without ground truth.
  std::vector<double> squared_errors() const {
    std::vector<double> errs;
    errs.reserve(steps.size() + 1);
    errs.push_back(initial_sq_err);
    for (const auto& s : steps) errs.push_back(s.sq_err);
    return errs;
  }
};

// One relaxed projection: x + alpha * (b_i - <a_i, x>) / |a_i|^2 * a_i.
inline void kaczmarz_step_inplace(std::span<double> x, const RowMatrix& a, std::size_t i,
                                  double b_tilde_i, double alpha) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("kaczmarz_step: alpha must be finite");
  const double residual = b_tilde_i - a.row_dot(i, x);
  a.axpy_row(i, alpha * residual / a.row_norm2(i), x);
}

inline std::vector<double> kaczmarz_step(std::span<const double> x, const RowMatrix& a,
                                         std::size_t i, double b_tilde_i, double alpha) {
  std::vector<double> out(x.begin(), x.end());
  kaczmarz_step_inplace(out, a, i, b_tilde_i, alpha);
  return out;
}

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

class RateSequence {
 public:
  RateSequence(const RatePolicy& policy) : policy_(&policy) {
    if (const auto* s = std::get_if<ScheduledRate>(policy_))
      state_ = initial_state(s->params);
  }

  double next() {
    if (const auto* c = std::get_if<ConstantRate>(policy_)) return c->mu;
    if (const auto* e = std::get_if<ExplicitRate>(policy_)) return e->alphas[pos_++];
    const double alpha = state_.alpha;
    state_ = schedule_step(state_, std::get<ScheduledRate>(*policy_).params);
    return alpha;
  }

 private:
  const RatePolicy* policy_;
  ScheduleState state_{};
  std::size_t pos_ = 0;
};

}  // namespace detail

// Runs k_max relaxed Kaczmarz steps from x0 (zeros by default). Row order
// comes from the weighted without-replacement sampler or the in-order pass,
// so k_max may not exceed the number of rows. Deterministic given the seed.
inline SolveTrace solve(const Problem& p, const RatePolicy& policy, SamplerKind sampler_kind,
                        std::uint64_t seed, std::size_t k_max,
                        std::span<const double> x0 = {}) {
  p.validate();
  validate_policy(policy, k_max);
  const std::size_t m = p.A.rows();
  const std::size_t n = p.A.cols();
  if (k_max > m)
    throw std::invalid_argument("solve: k_max exceeds the row count of the "
                                "without-replacement pass");
  if (!x0.empty() && x0.size() != n) throw std::invalid_argument("solve: x0 length != n");

  std::vector<double> x(n, 0.0);
  if (!x0.empty()) x.assign(x0.begin(), x0.end());

  SolveTrace trace;
  trace.has_ground_truth = p.x_true.has_value();
  if (trace.has_ground_truth) trace.initial_sq_err = detail::sq_dist(x, *p.x_true);
  trace.steps.reserve(k_max);

  std::optional<WeightedSampler> weighted;
  std::optional<InOrderSampler> in_order;
  if (sampler_kind == SamplerKind::weighted_without_replacement)
    weighted.emplace(p.A.row_norms2(), seed);
  else
    in_order.emplace(m);

  detail::RateSequence rates(policy);
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto drawn = weighted ? weighted->next() : in_order->next();
    const std::size_t i = *drawn;  // exhaustion impossible: k_max <= m
    const double alpha = rates.next();
    StepRecord rec;
    rec.row = i;
    rec.alpha = alpha;
    rec.residual = p.b_tilde[i] - p.A.row_dot(i, x);
    p.A.axpy_row(i, alpha * rec.residual / p.A.row_norm2(i), x);
    if (trace.has_ground_truth) rec.sq_err = detail::sq_dist(x, *p.x_true);
    trace.steps.push_back(rec);
  }
  trace.final_x = std::move(x);
  return trace;
}

// Residuals of the two per-step identities behind the convergence analysis,
// evaluated on one concrete step. With y the projection of x_k onto the
// clean hyperplane of row i:
//
//   |x - x_k+1|^2 = |x - x_k|^2 - |y - x_k|^2 + |y - x_k+1|^2          (split)
//   |x - x_k+1|^2 = |x - x_k|^2 - (2a - a^2)|y - x_k|^2 + Z           (noise)
//   Z = -2a(1-a)*(eps/|a_i|)*(r_clean/|a_i|) + a^2*eps^2/|a_i|^2
//
// Both are exact in real arithmetic for any rate and any noise draw, so the
// returned relative residuals are pure floating-point noise.
struct StepAudit {
  double pythagorean = 0.0;
  double decomposition = 0.0;
};

inline StepAudit step_identity_audit(const RowMatrix& a, std::size_t i,
                                     std::span<const double> x_true, double b_clean_i,
                                     double noise_i, std::span<const double> x_k, double alpha) {
  const std::size_t n = a.cols();
  if (x_true.size() != n || x_k.size() != n)
    throw std::invalid_argument("step_identity_audit: vector length mismatch");
  const double norm2 = a.row_norm2(i);
  const double r_clean = b_clean_i - a.row_dot(i, x_k);

  std::vector<double> y(x_k.begin(), x_k.end());
  a.axpy_row(i, r_clean / norm2, y);
  std::vector<double> x_next(x_k.begin(), x_k.end());
  a.axpy_row(i, alpha * (r_clean + noise_i) / norm2, x_next);

  const double d_k = detail::sq_dist(x_true, x_k);
  const double d_next = detail::sq_dist(x_true, x_next);
  const double proj = detail::sq_dist(y, x_k);
  const double back = detail::sq_dist(y, x_next);

  const double z = -2.0 * alpha * (1.0 - alpha) * (noise_i / std::sqrt(norm2)) *
                       (r_clean / std::sqrt(norm2)) +
                   alpha * alpha * noise_i * noise_i / norm2;

  const double scale1 = d_k + proj + back + 1e-300;
  const double scale2 = d_k + (2.0 * alpha - alpha * alpha) * proj + std::abs(z) + 1e-300;
  StepAudit out;
  out.pythagorean = std::abs(d_next - (d_k - proj + back)) / scale1;
  out.decomposition =
      std::abs(d_next - (d_k - (2.0 * alpha - alpha * alpha) * proj + z)) / std::abs(scale2);
  return out;
}

// Weighted row average of |<z, a_i/|a_i|>|^2; with the default weights
// (squared row norms) this is |Az|^2/|A|_F^2, the empirical counterpart of
// the eta condition. z is expected to be unit norm.
inline double empirical_eta(const RowMatrix& a, std::span<const double> z,
                            std::span<const double> weights = {}) {
  if (z.size() != a.cols()) throw std::invalid_argument("empirical_eta: z length != n");
  if (!weights.empty() && weights.size() != a.rows())
    throw std::invalid_argument("empirical_eta: weights length != m");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double w = weights.empty() ? a.row_norm2(i) : weights[i];
    const double d = a.row_dot(i, z);
    num += w * d * d / a.row_norm2(i);
    den += w;
  }
  return num / den;
}

}  // namespace rkz
