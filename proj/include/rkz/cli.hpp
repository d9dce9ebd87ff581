#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rkz/experiments.hpp"

namespace rkz {

// Command-line front end. Subcommands:
//
//   gen-problem   write a synthetic matrix + problem sidecar
//   solve         run the solver on a stored problem, write a trace
//   schedule      emit the rate/bound table as CSV
//   bound         print the closed-form error bound f(k)
//   experiment    run a config-driven multi-trial experiment
//   audit         run the randomized per-step identity audit
//
// Global flags: --seed, --config, --out, --format csv|json, --workers.
// When --out is absent the RKZ_OUT_DIR environment variable is used, then
// the current directory.

namespace detail {

inline std::string resolve_out_dir(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* env = std::getenv("RKZ_OUT_DIR"); env && *env) return env;
  return ".";
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"relaxed randomized Kaczmarz solver with a scheduled learning rate"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 1;
  std::string config_path, out_opt, format = "csv";
  unsigned workers = 0;
  app.add_option("--seed", seed, "master seed for all randomness")->capture_default_str();
  app.add_option("--config", config_path, "JSON experiment config file");
  app.add_option("--out", out_opt, "output directory (default: $RKZ_OUT_DIR or .)");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--workers", workers, "worker threads for trials (0 = auto)");

  // gen-problem ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-problem", "generate a synthetic problem");
  std::string gen_kind = "sparse-sphere", gen_noise = "normal";
  EnsembleSpec gen_spec;
  gen->add_option("--kind", gen_kind, "ensemble kind")
      ->check(CLI::IsMember({"sparse-sphere", "dense-sphere"}));
  gen->add_option("--m", gen_spec.m, "rows")->required();
  gen->add_option("--n", gen_spec.n, "columns")->required();
  gen->add_option("--s", gen_spec.s, "nonzeros per row (sparse-sphere)");
  gen->add_option("--sigma", gen_spec.sigma, "noise scale")->capture_default_str();
  gen->add_option("--noise", gen_noise, "noise distribution")
      ->check(CLI::IsMember({"normal", "rademacher"}));

  // solve ----------------------------------------------------------------------
  auto* solve_cmd = app.add_subcommand("solve", "solve a stored problem");
  std::string solve_in, solve_policy = "scheduled", solve_sampler = "weighted";
  double solve_mu = 1.0, solve_eta = 0.0;
  std::optional<double> solve_beta0;
  std::size_t solve_kmax = 0;
  solve_cmd->add_option("--in", solve_in, "directory with matrix.txt and problem.json")
      ->required();
  solve_cmd->add_option("--policy", solve_policy, "rate policy")
      ->check(CLI::IsMember({"scheduled", "constant"}));
  solve_cmd->add_option("--mu", solve_mu, "constant rate value")->capture_default_str();
  solve_cmd->add_option("--eta", solve_eta, "condition parameter (default 1/n)");
  solve_cmd->add_option("--beta0", solve_beta0,
                        "initial error over sigma^2 (default: heuristic n/sigma^2)");
  solve_cmd->add_option("--kmax", solve_kmax, "iterations (default m)");
  solve_cmd->add_option("--sampler", solve_sampler, "row selection")
      ->check(CLI::IsMember({"weighted", "in-order"}));

  // schedule --------------------------------------------------------------------
  auto* sched = app.add_subcommand("schedule", "emit the rate/bound table");
  double sched_eta = 0.0, sched_sigma = 1.0;
  std::optional<double> sched_beta0, sched_x0_err2;
  std::size_t sched_kmax = 0;
  sched->add_option("--eta", sched_eta, "condition parameter")->required();
  sched->add_option("--beta0", sched_beta0, "initial error over sigma^2");
  sched->add_option("--x0-err2", sched_x0_err2, "initial squared error (with --sigma)");
  sched->add_option("--sigma", sched_sigma, "noise scale")->capture_default_str();
  sched->add_option("--kmax", sched_kmax, "last iteration in the table")->required();

  // bound -------------------------------------------------------------------------
  auto* bound_cmd = app.add_subcommand("bound", "print the error bound f(k)");
  double bound_eta = 0.0, bound_sigma = 0.0, bound_x0_err2 = 0.0, bound_k = 0.0;
  bound_cmd->add_option("--eta", bound_eta, "condition parameter")->required();
  bound_cmd->add_option("--sigma", bound_sigma, "noise scale")->required();
  bound_cmd->add_option("--x0-err2", bound_x0_err2, "initial squared error")->required();
  bound_cmd->add_option("--k", bound_k, "iteration count (real-valued ok)")->required();

  // experiment -----------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "run a config-driven experiment");
  std::optional<std::size_t> exp_trials, exp_kmax;
  bool exp_trace = false;
  exp->add_option("--trials", exp_trials, "override: trials");
  exp->add_option("--kmax", exp_kmax, "override: iterations");
  exp->add_flag("--trace", exp_trace, "also write single-seed trace files");

  // audit -------------------------------------------------------------------------
  auto* audit = app.add_subcommand("audit", "randomized per-step identity audit");
  std::size_t audit_steps = 10000;
  audit->add_option("--steps", audit_steps, "randomized steps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      gen_spec.kind = gen_kind == "sparse-sphere" ? Ensemble::sparse_sphere : Ensemble::dense_sphere;
      if (gen_spec.kind == Ensemble::dense_sphere) gen_spec.s = 0;
      gen_spec.seed = derive_seed(seed, 0);
      gen_spec.validate();
      const auto x = gen_signal(gen_spec.n, derive_seed(seed, 1));
      const auto problem = make_problem(
          gen_matrix(gen_spec), x, gen_spec.sigma, derive_seed(seed, 2),
          gen_noise == "normal" ? NoiseKind::gaussian : NoiseKind::rademacher);
      const std::string out = detail::resolve_out_dir(out_opt);
      detail::ensure_dir(out);
      save_problem(out, problem, seed);
      std::cout << out << "/matrix.txt\n" << out << "/problem.json\n";
      return 0;
    }

    if (solve_cmd->parsed()) {
      const auto problem = load_problem(solve_in);
      const std::size_t m = problem.A.rows();
      const std::size_t n = problem.A.cols();
      if (solve_kmax == 0) solve_kmax = m;
      if (solve_eta == 0.0) solve_eta = 1.0 / static_cast<double>(n);
      RatePolicy policy;
      if (solve_policy == "constant") {
        policy = ConstantRate{solve_mu};
      } else {
        const double sigma2 = problem.sigma * problem.sigma;
        double beta0 = 0.0;
        if (solve_beta0)
          beta0 = *solve_beta0;
        else if (sigma2 > 0.0)
          beta0 = static_cast<double>(n) / sigma2;
        policy = ScheduledRate{{solve_eta, sigma2, beta0}};
      }
      const auto kind = solve_sampler == "weighted" ? SamplerKind::weighted_without_replacement
                                                    : SamplerKind::in_order;
      const auto trace = solve(problem, policy, kind, seed, solve_kmax);

      if (!trace.has_ground_truth)
        std::cerr << "note: problem has no ground truth; error columns are empty and "
                     "bound comparisons are unavailable\n";
      double x_norm2 = 0.0;
      if (trace.has_ground_truth)
        for (double v : *problem.x_true) x_norm2 += v * v;

      const std::string out = detail::resolve_out_dir(out_opt);
      detail::ensure_dir(out);
      const std::string path = out + "/trace." + format;
      std::ofstream os(path, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open for writing: " + path);
      if (format == "json") {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        const auto errs = trace.squared_errors();
        for (std::size_t k = 0; k < errs.size(); ++k) {
          nlohmann::ordered_json row;
          row["k"] = k;
          if (k > 0) {
            row["row"] = trace.steps[k - 1].row;
            row["alpha"] = trace.steps[k - 1].alpha;
            row["residual"] = trace.steps[k - 1].residual;
          }
          if (trace.has_ground_truth) {
            row["sq_err"] = errs[k];
            row["rel_err"] = std::sqrt(errs[k] / x_norm2);
          }
          rows.push_back(row);
        }
        os << rows.dump(2) << '\n';
      } else {
        os << "k,row,alpha,residual,sq_err,rel_err\n";
        const auto errs = trace.squared_errors();
        for (std::size_t k = 0; k < errs.size(); ++k) {
          os << k << ',';
          if (k > 0) {
            os << trace.steps[k - 1].row << ',' << format_double(trace.steps[k - 1].alpha)
               << ',' << format_double(trace.steps[k - 1].residual) << ',';
          } else {
            os << ",,,";
          }
          if (trace.has_ground_truth)
            os << format_double(errs[k]) << ',' << format_double(std::sqrt(errs[k] / x_norm2));
          else
            os << ',';
          os << '\n';
        }
      }
      std::cout << path << '\n';
      if (trace.has_ground_truth)
        std::cout << "final sq_err = " << format_double(trace.steps.empty()
                                                            ? trace.initial_sq_err
                                                            : trace.steps.back().sq_err)
                  << '\n';
      return 0;
    }

    if (sched->parsed()) {
      double beta0 = 0.0;
      const double sigma2 = sched_sigma * sched_sigma;
      if (sched_beta0 && sched_x0_err2)
        throw std::invalid_argument("schedule: give either --beta0 or --x0-err2, not both");
      if (sched_beta0)
        beta0 = *sched_beta0;
      else if (sched_x0_err2) {
        if (!(sigma2 > 0.0))
          throw std::invalid_argument("schedule: --x0-err2 requires --sigma > 0");
        beta0 = *sched_x0_err2 / sigma2;
      } else {
        throw std::invalid_argument("schedule: one of --beta0 or --x0-err2 is required");
      }
      const ScheduleParams params{sched_eta, sigma2, beta0};
      if (format == "json") {
        std::ostringstream csv;
        emit_schedule_table(params, sched_kmax, csv);
        // reshape the table into an array of row objects
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        std::istringstream is(csv.str());
        std::string line;
        std::getline(is, line);  // header
        auto state = initial_state(params);
        std::optional<BoundParams> bp;
        if (params.sigma2 > 0.0 && params.beta0 > 0.0)
          bp = BoundParams::from_beta0(params.eta, params.beta0, params.sigma2);
        for (std::size_t k = 0; k <= sched_kmax; ++k) {
          nlohmann::ordered_json row;
          row["k"] = k;
          row["alpha_k"] = state.alpha;
          row["beta_k"] = state.beta;
          row["sigma2_beta_k"] = params.sigma2 * state.beta;
          if (bp) {
            row["f_k"] = bound_f(static_cast<double>(k), *bp);
            row["alpha_continuous_t"] = continuous_alpha(static_cast<double>(k), *bp);
          }
          rows.push_back(row);
          state = schedule_step(state, params);
        }
        if (out_opt.empty()) {
          std::cout << rows.dump(2) << '\n';
        } else {
          detail::ensure_dir(out_opt);
          std::ofstream os(out_opt + "/schedule.json", std::ios::binary);
          os << rows.dump(2) << '\n';
          std::cout << out_opt << "/schedule.json\n";
        }
      } else if (out_opt.empty()) {
        emit_schedule_table(params, sched_kmax, std::cout);
      } else {
        detail::ensure_dir(out_opt);
        const std::string path = out_opt + "/schedule.csv";
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + path);
        emit_schedule_table(params, sched_kmax, os);
        std::cout << path << '\n';
      }
      return 0;
    }

    if (bound_cmd->parsed()) {
      const auto bp =
          BoundParams::from_initial_error(bound_eta, bound_sigma * bound_sigma, bound_x0_err2);
      const double f = bound_f(bound_k, bp);
      if (format == "json") {
        nlohmann::ordered_json j;
        j["k"] = bound_k;
        j["f_k"] = f;
        std::cout << j.dump() << '\n';
      } else {
        std::cout << format_double(f) << '\n';
      }
      return 0;
    }

    if (exp->parsed()) {
      if (config_path.empty())
        throw std::invalid_argument("experiment: --config <file> is required");
      ExperimentConfig cfg = load_config(config_path);
      if (exp_trials) cfg.trials = *exp_trials;
      if (exp_kmax) cfg.k_max = *exp_kmax;
      if (app.count("--seed")) cfg.master_seed = seed;
      if (!out_opt.empty())
        cfg.out_dir = out_opt;
      else if (const char* env = std::getenv("RKZ_OUT_DIR"); env && *env && cfg.out_dir == ".")
        cfg.out_dir = env;
      if (exp_trace) cfg.emit_trace = true;
      cfg.validate();
      detail::ensure_dir(cfg.out_dir);
      const auto agg = run_experiment(cfg, workers);
      for (const auto& path : write_experiment_outputs(agg, cfg, format))
        std::cout << path << '\n';
      if (cfg.emit_trace)
        for (const auto& path : write_single_trace(cfg)) std::cout << path << '\n';
      return 0;
    }

    if (audit->parsed()) {
      const auto result = run_step_identity_audit_suite(audit_steps, seed);
      const bool ok = result.max_pythagorean <= 1e-10 && result.max_decomposition <= 1e-10;
      std::cout << "steps=" << result.steps
                << " max_pythagorean=" << format_double(result.max_pythagorean)
                << " max_decomposition=" << format_double(result.max_decomposition) << ' '
                << (ok ? "PASS" : "FAIL") << '\n';
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rkz
