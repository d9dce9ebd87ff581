#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rkz/generators.hpp"
#include "rkz/io.hpp"
#include "rkz/schedule.hpp"
#include "rkz/solver.hpp"

namespace rkz {

// Config-driven multi-trial experiment runner. Each trial generates an
// independent problem from a seed derived from the master seed, solves it
// under every policy with a shared row order, and the per-k squared errors
// are aggregated into mean/median/central-80% curves aligned with the
// schedule curve sigma^2*beta_k, the closed-form bound f(k), the unit-rate
// noise horizon, and both asymptotes. Fully deterministic: reruns and any
// worker count produce byte-identical output.

struct ExperimentConfig {
  EnsembleSpec ensemble;
  double eta = 0.0;                  // defaults to 1/n when unset in JSON
  std::optional<double> beta0;       // empty = heuristic n/sigma^2
  std::vector<RatePolicy> policies;
  std::size_t trials = 20;
  std::size_t k_max = 0;
  std::uint64_t master_seed = 1;
  std::string out_dir = ".";
  bool emit_trace = false;  // additionally write the master-seed trial's trace

  void validate() const {
    ensemble.validate();
    if (!(eta > 0.0) || !(eta <= 1.0))
      throw std::invalid_argument("ExperimentConfig: eta must be in (0, 1]");
    if (beta0 && !(*beta0 >= 0.0))
      throw std::invalid_argument("ExperimentConfig: beta0 must be >= 0");
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    if (k_max > ensemble.m)
      throw std::invalid_argument("ExperimentConfig: k_max must not exceed ensemble.m");
    if (policies.empty())
      throw std::invalid_argument("ExperimentConfig: need at least one policy");
    for (const auto& p : policies) validate_policy(p, k_max);
  }

  double sigma2() const { return ensemble.sigma * ensemble.sigma; }

  double resolved_beta0() const {
    if (beta0) return *beta0;
    if (sigma2() == 0.0) return 0.0;  // unused: the schedule special-cases sigma = 0
    return static_cast<double>(ensemble.n) / sigma2();
  }

  ScheduleParams schedule_params() const { return {eta, sigma2(), resolved_beta0()}; }
};

inline std::string policy_name(const RatePolicy& policy) {
  if (const auto* c = std::get_if<ConstantRate>(&policy)) {
    std::string mu = format_double(c->mu);
    for (char& ch : mu)
      if (ch == '.') ch = 'p';
    return "constant_" + mu;
  }
  if (std::holds_alternative<ScheduledRate>(policy)) return "scheduled";
  return "explicit";
}

// --- JSON config -----------------------------------------------------------
//
// {
//   "ensemble": {"kind": "sparse-sphere", "m": 2000, "n": 100, "s": 10, "sigma": 0.05},
//   "eta": 0.01,                  // optional, default 1/n
//   "beta0": "heuristic-n",       // or a number
//   "policies": [{"type": "scheduled"}, {"type": "constant", "mu": 1.0}],
//   "trials": 20, "k_max": 2000, "master_seed": 1, "out": "out"
// }

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const auto& je = j.at("ensemble");
  const std::string kind = je.at("kind").get<std::string>();
  if (kind == "sparse-sphere")
    cfg.ensemble.kind = Ensemble::sparse_sphere;
  else if (kind == "dense-sphere")
    cfg.ensemble.kind = Ensemble::dense_sphere;
  else
    throw std::invalid_argument("config: unknown ensemble kind '" + kind + "'");
  cfg.ensemble.m = je.at("m").get<std::size_t>();
  cfg.ensemble.n = je.at("n").get<std::size_t>();
  cfg.ensemble.s = je.value("s", std::size_t{0});
  cfg.ensemble.sigma = je.at("sigma").get<double>();

  cfg.eta = j.value("eta", 1.0 / static_cast<double>(cfg.ensemble.n));
  if (j.contains("beta0")) {
    if (j["beta0"].is_string()) {
      if (j["beta0"].get<std::string>() != "heuristic-n")
        throw std::invalid_argument("config: beta0 must be a number or \"heuristic-n\"");
    } else {
      cfg.beta0 = j["beta0"].get<double>();
    }
  }
  if (!j.contains("policies")) throw std::invalid_argument("config: missing policies");
  for (const auto& jp : j.at("policies")) {
    const std::string type = jp.at("type").get<std::string>();
    if (type == "scheduled")
      cfg.policies.push_back(ScheduledRate{});  // params filled after eta/beta0 known
    else if (type == "constant")
      cfg.policies.push_back(ConstantRate{jp.at("mu").get<double>()});
    else if (type == "explicit")
      cfg.policies.push_back(ExplicitRate{jp.at("alphas").get<std::vector<double>>()});
    else
      throw std::invalid_argument("config: unknown policy type '" + type + "'");
  }
  cfg.trials = j.value("trials", std::size_t{20});
  cfg.k_max = j.at("k_max").get<std::size_t>();
  cfg.master_seed = j.value("master_seed", std::uint64_t{1});
  cfg.out_dir = j.value("out", std::string("."));
  cfg.emit_trace = j.value("emit_trace", false);

  for (auto& p : cfg.policies)
    if (auto* s = std::get_if<ScheduledRate>(&p)) s->params = cfg.schedule_params();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config field error in " + path + ": " + e.what());
  }
}

// --- Aggregation -----------------------------------------------------------

struct PolicyCurve {
  std::string name;
  std::vector<double> alpha;          // rate applied at step k
  std::vector<double> mse_mean;
  std::vector<double> mse_median;
  std::vector<double> mse_p10;
  std::vector<double> mse_p90;
  std::vector<double> relerr_median;  // median of |x_k - x| / |x|
};

struct AggregateCurve {
  std::size_t k_max = 0;
  std::vector<double> sigma2_beta;      // schedule curve
  std::vector<double> f_k;              // closed-form bound (asymptote when sigma = 0)
  std::vector<double> asym_small_sigma;
  std::vector<double> asym_large_k;     // NaN at k = 0
  double needell = 0.0;
  std::vector<PolicyCurve> policies;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct TrialData {
  // [policy][k] squared error, plus the trial's |x_true|^2
  std::vector<std::vector<double>> sq_errs;
  double x_norm2 = 0.0;
};

inline TrialData run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  const std::uint64_t trial_seed = derive_seed(cfg.master_seed, trial);
  EnsembleSpec spec = cfg.ensemble;
  spec.seed = derive_seed(trial_seed, 0);
  auto x = gen_signal(spec.n, derive_seed(trial_seed, 1));
  auto problem = make_problem(gen_matrix(spec), x, spec.sigma, derive_seed(trial_seed, 2));
  const std::uint64_t sampler_seed = derive_seed(trial_seed, 3);

  TrialData data;
  data.sq_errs.reserve(cfg.policies.size());
  for (double v : x) data.x_norm2 += v * v;
  for (const auto& policy : cfg.policies) {
    const auto trace = solve(problem, policy, SamplerKind::weighted_without_replacement,
                             sampler_seed, cfg.k_max);
    data.sq_errs.push_back(trace.squared_errors());
  }
  return data;
}

}  // namespace detail

inline AggregateCurve run_experiment(const ExperimentConfig& cfg, unsigned workers = 0) {
  cfg.validate();
  const std::size_t rows = cfg.k_max + 1;

  // fan the trials out; results land in trial order, so the reduce below is
  // independent of scheduling
  std::vector<detail::TrialData> trials(cfg.trials);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.trials));
  if (workers <= 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) trials[t] = detail::run_trial(cfg, t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t t = next.fetch_add(1);
          if (t >= cfg.trials) return;
          try {
            trials[t] = detail::run_trial(cfg, t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  AggregateCurve out;
  out.k_max = cfg.k_max;
  out.needell = needell_horizon(cfg.ensemble.sigma, cfg.eta);

  const ScheduleParams sp = cfg.schedule_params();
  const double x0_err2 =
      cfg.sigma2() > 0.0 ? cfg.resolved_beta0() * cfg.sigma2() : static_cast<double>(cfg.ensemble.n);
  std::optional<BoundParams> bp;
  if (cfg.sigma2() > 0.0 && cfg.resolved_beta0() > 0.0)
    bp = BoundParams::from_initial_error(cfg.eta, cfg.sigma2(), x0_err2);

  out.sigma2_beta.resize(rows);
  out.f_k.resize(rows);
  out.asym_small_sigma.resize(rows);
  out.asym_large_k.resize(rows);
  auto state = initial_state(sp);
  std::vector<double> schedule_alpha(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const double kd = static_cast<double>(k);
    schedule_alpha[k] = state.alpha;
    out.sigma2_beta[k] = cfg.sigma2() * state.beta;
    out.f_k[k] = bp ? bound_f(kd, *bp) : asymptote_small_sigma(kd, cfg.eta, x0_err2);
    out.asym_small_sigma[k] = asymptote_small_sigma(kd, cfg.eta, x0_err2);
    out.asym_large_k[k] =
        k == 0 ? std::numeric_limits<double>::quiet_NaN() : asymptote_large_k(kd, cfg.eta, cfg.sigma2());
    state = schedule_step(state, sp);
  }

  for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
    PolicyCurve curve;
    curve.name = policy_name(cfg.policies[pi]);
    curve.alpha.resize(rows);
    if (const auto* c = std::get_if<ConstantRate>(&cfg.policies[pi])) {
      std::fill(curve.alpha.begin(), curve.alpha.end(), c->mu);
    } else if (const auto* e = std::get_if<ExplicitRate>(&cfg.policies[pi])) {
      for (std::size_t k = 0; k < rows; ++k)
        curve.alpha[k] = e->alphas[std::min(k, e->alphas.size() - 1)];
    } else {
      curve.alpha = schedule_alpha;
    }
    curve.mse_mean.resize(rows);
    curve.mse_median.resize(rows);
    curve.mse_p10.resize(rows);
    curve.mse_p90.resize(rows);
    curve.relerr_median.resize(rows);
    std::vector<double> column(cfg.trials), rel(cfg.trials);
    for (std::size_t k = 0; k < rows; ++k) {
      double sum = 0.0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        column[t] = trials[t].sq_errs[pi][k];
        rel[t] = std::sqrt(column[t] / trials[t].x_norm2);
        sum += column[t];
      }
      curve.mse_mean[k] = sum / static_cast<double>(cfg.trials);
      std::sort(column.begin(), column.end());
      std::sort(rel.begin(), rel.end());
      curve.mse_median[k] = detail::quantile_sorted(column, 0.5);
      curve.mse_p10[k] = detail::quantile_sorted(column, 0.1);
      curve.mse_p90[k] = detail::quantile_sorted(column, 0.9);
      curve.relerr_median[k] = detail::quantile_sorted(rel, 0.5);
    }
    out.policies.push_back(std::move(curve));
  }
  return out;
}

// --- Output ----------------------------------------------------------------

inline constexpr const char* kExperimentCsvSchema =
    "k,alpha,beta_sigma2,f_k,needell,mse_mean,mse_median,mse_p10,mse_p90,relerr_median";

inline std::string render_policy_csv(const AggregateCurve& agg, std::size_t policy_index) {
  const auto& c = agg.policies.at(policy_index);
  std::ostringstream os;
  os << "# rkz experiment csv v1\n" << kExperimentCsvSchema << '\n';
  for (std::size_t k = 0; k <= agg.k_max; ++k) {
    os << k << ',' << format_double(c.alpha[k]) << ',' << format_double(agg.sigma2_beta[k])
       << ',' << format_double(agg.f_k[k]) << ',' << format_double(agg.needell) << ','
       << format_double(c.mse_mean[k]) << ',' << format_double(c.mse_median[k]) << ','
       << format_double(c.mse_p10[k]) << ',' << format_double(c.mse_p90[k]) << ','
       << format_double(c.relerr_median[k]) << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json policy_curve_json(const AggregateCurve& agg,
                                                std::size_t policy_index) {
  const auto& c = agg.policies.at(policy_index);
  nlohmann::ordered_json j;
  j["policy"] = c.name;
  j["needell"] = agg.needell;
  j["alpha"] = c.alpha;
  j["beta_sigma2"] = agg.sigma2_beta;
  j["f_k"] = agg.f_k;
  j["mse_mean"] = c.mse_mean;
  j["mse_median"] = c.mse_median;
  j["mse_p10"] = c.mse_p10;
  j["mse_p90"] = c.mse_p90;
  j["relerr_median"] = c.relerr_median;
  return j;
}

// Writes one file per policy into out_dir; returns the paths written.
inline std::vector<std::string> write_experiment_outputs(const AggregateCurve& agg,
                                                         const ExperimentConfig& cfg,
                                                         const std::string& format = "csv") {
  std::vector<std::string> paths;
  for (std::size_t pi = 0; pi < agg.policies.size(); ++pi) {
    const std::string path =
        cfg.out_dir + "/" + agg.policies[pi].name + (format == "json" ? ".json" : ".csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    if (format == "json")
      os << policy_curve_json(agg, pi).dump(2) << '\n';
    else
      os << render_policy_csv(agg, pi);
    paths.push_back(path);
  }
  return paths;
}

// Single-seed trace files for figure-faithful plots (one run, no averaging).
inline std::vector<std::string> write_single_trace(const ExperimentConfig& cfg) {
  std::vector<std::string> paths;
  const std::uint64_t trial_seed = derive_seed(cfg.master_seed, 0);
  EnsembleSpec spec = cfg.ensemble;
  spec.seed = derive_seed(trial_seed, 0);
  const auto x = gen_signal(spec.n, derive_seed(trial_seed, 1));
  const auto problem = make_problem(gen_matrix(spec), x, spec.sigma, derive_seed(trial_seed, 2));
  double x_norm2 = 0.0;
  for (double v : x) x_norm2 += v * v;
  for (const auto& policy : cfg.policies) {
    const auto trace = solve(problem, policy, SamplerKind::weighted_without_replacement,
                             derive_seed(trial_seed, 3), cfg.k_max);
    const std::string path = cfg.out_dir + "/trace_" + policy_name(policy) + ".csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "k,sq_err,rel_err\n";
    const auto errs = trace.squared_errors();
    for (std::size_t k = 0; k < errs.size(); ++k)
      os << k << ',' << format_double(errs[k]) << ','
         << format_double(std::sqrt(errs[k] / x_norm2)) << '\n';
    paths.push_back(path);
  }
  return paths;
}

// --- Schedule table ---------------------------------------------------------

inline constexpr const char* kScheduleCsvSchema =
    "k,alpha_k,beta_k,sigma2_beta_k,f_k,alpha_continuous_t";

// Emits the schedule recursion next to the bound and the continuous-time
// rate, one row per k with t = k unless a custom t grid (of length
// k_max + 1) is supplied.
inline void emit_schedule_table(const ScheduleParams& params, std::size_t k_max,
                                std::ostream& os, std::span<const double> t_grid = {}) {
  params.validate();
  if (!t_grid.empty() && t_grid.size() != k_max + 1)
    throw std::invalid_argument("emit_schedule_table: t grid must have k_max + 1 entries");
  std::optional<BoundParams> bp;
  if (params.sigma2 > 0.0 && params.beta0 > 0.0)
    bp = BoundParams::from_beta0(params.eta, params.beta0, params.sigma2);
  os << kScheduleCsvSchema << '\n';
  auto state = initial_state(params);
  for (std::size_t k = 0; k <= k_max; ++k) {
    const double t = t_grid.empty() ? static_cast<double>(k) : t_grid[k];
    os << k << ',' << format_double(state.alpha) << ',' << format_double(state.beta) << ','
       << format_double(params.sigma2 * state.beta) << ',';
    if (bp)
      os << format_double(bound_f(static_cast<double>(k), *bp)) << ','
         << format_double(continuous_alpha(t, *bp));
    else
      os << ',';  // bound undefined at sigma = 0 or beta0 = 0
    os << '\n';
    state = schedule_step(state, params);
  }
}

// --- Randomized identity audit ----------------------------------------------

struct AuditSuiteResult {
  std::size_t steps = 0;
  double max_pythagorean = 0.0;
  double max_decomposition = 0.0;
};

// Exercises the two per-step identities across random dimensions, sparse and
// dense rows, the rate grid {0, 0.3, 1, 1.7}, and zero/nonzero noise.
inline AuditSuiteResult run_step_identity_audit_suite(std::size_t n_steps, std::uint64_t seed) {
  constexpr double kAlphas[] = {0.0, 0.3, 1.0, 1.7};
  AuditSuiteResult out;
  out.steps = n_steps;
  CounterRng rng(derive_seed(seed, 0));
  for (std::size_t rep = 0; rep < n_steps; ++rep) {
    const std::size_t n = 2 + rng.next_below(24);
    const bool sparse = rng.next_unit() < 0.5;
    const std::size_t s = sparse ? 1 + rng.next_below(std::max<std::size_t>(1, n / 2)) : n;
    RowMatrix mat(n);
    {
      auto row_rng = CounterRng::keyed(derive_seed(seed, 1), rep);
      const auto support = detail::random_subset(n, s, row_rng);
      std::vector<SparseEntry> entries;
      double norm2 = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        entries.push_back({support[j], row_rng.next_normal()});
        norm2 += entries.back().value * entries.back().value;
      }
      if (norm2 == 0.0) entries[0].value = 1.0;
      mat.add_sparse_row(entries);
    }
    const double scale = std::pow(10.0, -3.0 + 6.0 * rng.next_unit());
    std::vector<double> x_true(n), x_k(n);
    for (std::size_t j = 0; j < n; ++j) {
      x_true[j] = scale * rng.next_normal();
      x_k[j] = scale * rng.next_normal();
    }
    const double b_clean = mat.row_dot(0, x_true);
    const double noise = (rep % 2 == 0) ? 0.0 : 0.05 * scale * rng.next_normal();
    const double alpha = kAlphas[rep % 4];
    const auto audit = step_identity_audit(mat, 0, x_true, b_clean, noise, x_k, alpha);
    out.max_pythagorean = std::max(out.max_pythagorean, audit.pythagorean);
    out.max_decomposition = std::max(out.max_decomposition, audit.decomposition);
  }
  return out;
}

}  // namespace rkz
