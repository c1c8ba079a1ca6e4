#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "hgms/config.hpp"
#include "hgms/oracle.hpp"
#include "hgms/outer.hpp"
#include "hgms/trace_io.hpp"

namespace {

using namespace hgms;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitValidation = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = -1;  // -1 = not given
  CLI::Option* seed_opt = nullptr;
  bool seed_given() const { return seed_opt != nullptr && seed_opt->count() > 0; }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config file");
  cmd->add_option("--out", flags.out_dir, "Output directory (overrides the config)");
  flags.seed_opt = cmd->add_option("--seed", flags.seed, "Seed override");
  cmd->add_option("--workers", flags.workers, "Worker threads (0 = auto)");
}

cli::ExperimentConfig load_config(const CommonFlags& flags, bool require_file) {
  cli::ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = cli::parse_config_file(flags.config_path);
  } else if (require_file) {
    fail(ErrorKind::InvalidConfig, "this subcommand needs --config", {});
  } else {
    cfg.seed_set = false;
  }
  if (flags.seed_given()) {
    cfg.seed = flags.seed;
    cfg.seed_set = true;
  }
  if (!cfg.seed_set)
    fail(ErrorKind::InvalidConfig, "no seed: set sampler.seed in the config or pass --seed", {});
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.workers >= 0) cfg.workers = flags.workers;
  if (const char* env = std::getenv("HGMS_WORKERS"); env != nullptr && flags.workers < 0) {
    try {
      cfg.workers = std::stoi(env);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidConfig, "bad HGMS_WORKERS value", {{"value", env}});
    }
  }
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  auto cfg = load_config(flags, true);
  auto exp = cli::build_experiment(cfg);
  cli::ensure_dir(cfg.out_dir);
  auto trace = outer::run_hgms(exp.problem.problem, &exp.problem, exp.theta0, exp.sampler_cfg,
                               exp.hypergrad_cfg, exp.outer_cfg);
  cli::write_trace_csv(cli::join_path(cfg.out_dir, "trace.csv"), trace, cfg);
  cli::write_summary_json(cli::join_path(cfg.out_dir, "summary.json"), trace, cfg);
  if (trace.aborted) {
    std::cerr << "run aborted: " << trace.abort_message << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << cli::join_path(cfg.out_dir, "trace.csv") << " ("
            << trace.records.size() << " rows)\n";
  return kExitOk;
}

int cmd_validate_hypergrad(const CommonFlags& flags, const std::string& problem,
                           std::vector<double> theta_grid, std::vector<double> gamma_grid,
                           double tol) {
  auto cfg = load_config(flags, false);
  cfg.problem_name = problem.empty() ? cfg.problem_name : problem;
  auto ap = cli::build_experiment(cfg).problem;
  cli::ensure_dir(cfg.out_dir);

  if (theta_grid.empty()) {
    Vec t0 = cli::default_theta0(cfg.problem_name, ap.problem.dims.m);
    theta_grid = {t0[0]};
  }
  if (gamma_grid.empty()) gamma_grid = {1e-2, 1e-3, 1e-4};

  auto out_path = cli::join_path(cfg.out_dir, "validate_hypergrad.csv");
  std::ofstream out(out_path);
  out << "# hgms seed=" << cfg.seed << " config_hash="
      << cli::config_hash(cli::canonical_config_text(cfg)) << "\n";
  out << "theta,gamma,err_vs_pinv,err_vs_fd\n";

  bool failed = false;
  for (double t : theta_grid) {
    Vec theta = Vec::Constant(ap.problem.dims.m, t);
    auto star = ap.x_star(theta);
    if (!star) continue;  // selection ties; not a smooth point
    Vec pinv = hypergrad::exact_pseudoinverse_hypergradient(ap, theta);
    Vec fd = oracle::fd_gradF(ap, theta);
    for (double gamma : gamma_grid) {
      hypergrad::HyperGradConfig hc;
      hc.gamma = gamma;
      hc.eta = 1e-10;
      auto est = hypergrad::hypergradient(ap.problem, theta, *star, hc);
      double err_pinv = (est.h_hat - pinv).norm();
      double err_fd = (est.h_hat - fd).norm();
      out << fmt_value(t) << "," << fmt_value(gamma) << "," << fmt_value(err_pinv) << ","
          << fmt_value(err_fd) << "\n";
      double rel = err_fd / std::max(1.0, fd.norm());
      if (gamma == *std::min_element(gamma_grid.begin(), gamma_grid.end()) && rel > tol)
        failed = true;
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return failed ? kExitValidation : kExitOk;
}

int cmd_sweep_selection(const CommonFlags& flags, const std::string& problem,
                        std::vector<double> lambda_grid, std::vector<int> n_grid,
                        int replicates) {
  auto cfg = load_config(flags, false);
  cfg.problem_name = problem.empty() ? cfg.problem_name : problem;
  auto exp = cli::build_experiment(cfg);
  cli::ensure_dir(cfg.out_dir);

  if (lambda_grid.empty()) lambda_grid = {1e-5};
  if (n_grid.empty()) n_grid = {4, 16, 64, 256, 1024};

  Vec theta = exp.theta0;
  auto table = selector::selection_error_sweep(exp.problem, theta, lambda_grid, n_grid,
                                               replicates, exp.sampler_cfg);
  cli::write_rate_csv(cli::join_path(cfg.out_dir, "selection_rate.csv"), table, cfg);
  cli::write_slopes_json(cli::join_path(cfg.out_dir, "selection_slopes.json"), table, cfg);
  std::cout << "wrote " << cli::join_path(cfg.out_dir, "selection_rate.csv") << "\n";
  return kExitOk;
}

int cmd_probe_kinks(const CommonFlags& flags, const std::string& problem, double lo, double hi,
                    int resolution) {
  auto cfg = load_config(flags, false);
  cfg.problem_name = problem.empty() ? cfg.problem_name : problem;
  auto ap = cli::build_experiment(cfg).problem;
  cli::ensure_dir(cfg.out_dir);

  auto report = oracle::kink_probe(ap, {lo, hi, resolution});
  bool branches = cfg.problem_name == "circle-kink";
  cli::write_kink_csv(cli::join_path(cfg.out_dir, "kinks.csv"), report, branches, cfg);
  std::cout << "flagged " << report.flagged_thetas.size() << " kinks; wrote "
            << cli::join_path(cfg.out_dir, "kinks.csv") << "\n";
  return kExitOk;
}

int cmd_sample_diag(const CommonFlags& flags, double lambda, double h, int k) {
  auto cfg = load_config(flags, false);
  cli::ensure_dir(cfg.out_dir);
  sampler::GaussianDiag diag;
  diag.lambda = lambda;
  diag.stepsize = h;
  diag.steps = k;
  diag.burnin = k / 2;
  diag.seed = cfg.seed;
  auto res = sampler::ula_gaussian_variance(diag);
  auto path = cli::join_path(cfg.out_dir, "sample_diag.csv");
  std::ofstream out(path);
  out << "# hgms seed=" << cfg.seed << " config_hash="
      << cli::config_hash(cli::canonical_config_text(cfg)) << "\n";
  out << "lambda,h,steps,samples,empirical_variance,predicted_variance,rel_error\n";
  double rel = std::abs(res.empirical_variance - res.predicted_variance) / res.predicted_variance;
  out << fmt_value(lambda) << "," << fmt_value(h) << "," << k << "," << res.samples << ","
      << fmt_value(res.empirical_variance) << "," << fmt_value(res.predicted_variance) << ","
      << fmt_value(rel) << "\n";
  std::cout << "empirical " << res.empirical_variance << " vs predicted "
            << res.predicted_variance << " (rel " << rel << "); wrote " << path << "\n";
  return kExitOk;
}

int cmd_list_problems() {
  for (const auto& name : testbed::catalog_names()) std::cout << name << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HG-MS: select-then-differentiate bilevel optimization"};
  app.require_subcommand(1);

  CommonFlags run_flags, vh_flags, sweep_flags, kink_flags, diag_flags;

  auto* run = app.add_subcommand("run", "Run the full HG-MS loop from a config file");
  add_common(run, run_flags);

  auto* vh = app.add_subcommand("validate-hypergrad",
                                "Compare hyper-gradients against brute-force oracles");
  add_common(vh, vh_flags);
  std::string vh_problem;
  std::vector<double> vh_thetas, vh_gammas;
  double vh_tol = 1e-3;
  vh->add_option("--problem", vh_problem, "Catalog problem name");
  vh->add_option("--theta", vh_thetas, "Theta grid");
  vh->add_option("--gamma", vh_gammas, "Gamma grid");
  vh->add_option("--tol", vh_tol, "Relative tolerance for exit status 4");

  auto* sweep = app.add_subcommand("sweep-selection", "Selection error rate sweep");
  add_common(sweep, sweep_flags);
  std::string sweep_problem;
  std::vector<double> sweep_lambdas;
  std::vector<int> sweep_ns;
  int sweep_reps = 100;
  sweep->add_option("--problem", sweep_problem, "Catalog problem name");
  sweep->add_option("--lambda", sweep_lambdas, "Lambda grid");
  sweep->add_option("--n", sweep_ns, "Candidate count grid");
  sweep->add_option("--replicates", sweep_reps, "Replicates per cell");

  auto* kinks = app.add_subcommand("probe-kinks", "Kink detection on a theta window");
  add_common(kinks, kink_flags);
  std::string kink_problem;
  double kink_lo = 0.08, kink_hi = 0.36;
  int kink_res = 4000;
  kinks->add_option("--problem", kink_problem, "Catalog problem name");
  kinks->add_option("--lo", kink_lo, "Window lower edge");
  kinks->add_option("--hi", kink_hi, "Window upper edge");
  kinks->add_option("--resolution", kink_res, "Grid points");

  auto* diag = app.add_subcommand("sample-diag", "ULA stationary-variance health check");
  add_common(diag, diag_flags);
  double diag_lambda = 0.1, diag_h = 0.01;
  int diag_k = 200000;
  diag->add_option("--lambda", diag_lambda, "Temperature");
  diag->add_option("--stepsize", diag_h, "ULA stepsize");
  diag->add_option("--k", diag_k, "Steps per chain");

  app.add_subcommand("list-problems", "List catalog problem names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (vh->parsed())
      return cmd_validate_hypergrad(vh_flags, vh_problem, vh_thetas, vh_gammas, vh_tol);
    if (sweep->parsed())
      return cmd_sweep_selection(sweep_flags, sweep_problem, sweep_lambdas, sweep_ns, sweep_reps);
    if (kinks->parsed())
      return cmd_probe_kinks(kink_flags, kink_problem, kink_lo, kink_hi, kink_res);
    if (diag->parsed()) return cmd_sample_diag(diag_flags, diag_lambda, diag_h, diag_k);
    return cmd_list_problems();
  } catch (const ToolException& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
