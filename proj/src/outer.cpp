#include "hgms/outer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hgms/rng.hpp"

namespace hgms::outer {

void validate(const OuterConfig& cfg) {
  if (!(cfg.alpha > 0.0))
    fail(ErrorKind::InvalidConfig, "stepsize alpha must be positive",
         {{"alpha", fmt_value(cfg.alpha)}});
  if (cfg.iterations < 1)
    fail(ErrorKind::InvalidConfig, "need at least one outer iteration",
         {{"T", fmt_value(cfg.iterations)}});
}

Vec project(const FeasibleSet& set, const Vec& u) {
  check_finite(u, "projection input");
  if (std::holds_alternative<FullSpaceSet>(set.set)) return u;
  if (const auto* b = std::get_if<BoxSet>(&set.set)) {
    check_size(u, b->lower.size(), "projection input");
    return u.cwiseMax(b->lower).cwiseMin(b->upper);
  }
  // Simplex: sort-and-threshold. Find tau with sum max(u_i - tau, 0) = 1.
  const auto& s = std::get<SimplexSet>(set.set);
  check_size(u, s.dim, "projection input");
  std::vector<double> sorted(u.data(), u.data() + u.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = (u.sum() - 1.0) / s.dim;
  for (int j = 0; j < s.dim; ++j) {
    cumsum += sorted[j];
    double t = (cumsum - 1.0) / (j + 1);
    if (sorted[j] - t > 0.0) tau = t;  // largest feasible support wins
  }
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = std::max(u[i] - tau, 0.0);
  return out;
}

StepResult step(const Vec& theta, const Vec& h_hat, double alpha, const FeasibleSet& set) {
  if (!(alpha > 0.0))
    fail(ErrorKind::InvalidConfig, "alpha must be positive", {{"alpha", fmt_value(alpha)}});
  check_finite(h_hat, "h_hat");
  StepResult res;
  res.theta_next = project(set, theta - alpha * h_hat);
  res.grad_map = (theta - res.theta_next) / alpha;
  return res;
}

namespace {

sampler::GibbsSamplerConfig per_iteration_cfg(const sampler::GibbsSamplerConfig& base,
                                              bool warm_start, int t, const Vec* prev_selected) {
  sampler::GibbsSamplerConfig cfg = base;
  if (warm_start && t > 0 && prev_selected != nullptr)
    cfg.init = sampler::InitFixedPoints{{*prev_selected}};
  return cfg;
}

}  // namespace

RunTrace run_hgms(const BilevelProblem& p, const testbed::AnalyticProblem* ap,
                  const Vec& theta0, const sampler::GibbsSamplerConfig& sampler_cfg,
                  const hypergrad::HyperGradConfig& hg_cfg, const OuterConfig& outer_cfg) {
  sampler::validate(sampler_cfg);
  hypergrad::validate(hg_cfg, p);
  validate(outer_cfg);
  check_size(theta0, p.dims.m, "theta0");
  check_finite(theta0, "theta0");

  auto t_start = std::chrono::steady_clock::now();
  RunTrace trace;
  trace.sampler_cfg = sampler_cfg;
  trace.hypergrad_cfg = hg_cfg;
  trace.outer_cfg = outer_cfg;
  trace.seed = sampler_cfg.seed;
  trace.problem_name = ap != nullptr ? ap->name : "custom";

  Vec theta = theta0;
  if (!p.feasible_set.contains(theta)) {
    theta = project(p.feasible_set, theta);
    trace.theta0_projected = true;
  }

  Vec prev_selected;
  Vec prev_v;
  double prev_f = std::numeric_limits<double>::infinity();
  int increase_streak = 0;

  for (int t = 0; t < outer_cfg.iterations; ++t) {
    IterationRecord rec;
    rec.t = t;
    rec.theta = theta;
    Vec h_hat = Vec::Zero(p.dims.m);
    try {
      auto cfg_t = per_iteration_cfg(sampler_cfg, outer_cfg.warm_start_chains, t,
                                     prev_selected.size() ? &prev_selected : nullptr);
      auto chains = sampler::sample_parallel(p, theta, cfg_t, ap,
                                             static_cast<std::uint64_t>(t));
      auto sel = selector::best_of_n(p, theta, chains, ap);
      rec.f_selected = sel.value;
      rec.candidate_value_min = sel.value;
      rec.candidate_value_mean =
          std::accumulate(sel.all_values.begin(), sel.all_values.end(), 0.0) /
          double(sel.all_values.size());
      rec.dist_to_manifold = sel.dist_to_manifold;

      auto est = hypergrad::hypergradient(p, theta, sel.point, hg_cfg,
                                          prev_v.size() ? &prev_v : nullptr);
      rec.cg_iterations = est.cg_iterations;
      rec.cg_residual = est.cg_residual;
      rec.cg_budget_exhausted = est.cg_budget_exhausted;
      rec.clipped = est.clipped;
      rec.tube_radius = est.tube_radius;
      h_hat = est.h_hat;
      prev_selected = sel.point;
      prev_v = est.v;

      if (sel.value > prev_f) {
        if (++increase_streak >= 5) {
          ++trace.alpha_warning_count;  // warn only; alpha stays fixed
          increase_streak = 0;
        }
      } else {
        increase_streak = 0;
      }
      prev_f = sel.value;
    } catch (const ToolException& e) {
      rec.error_step = true;
      rec.error_message = e.what();
      if (outer_cfg.stop_on_error) {
        trace.records.push_back(std::move(rec));
        trace.aborted = true;
        trace.abort_message = e.what();
        break;
      }
      h_hat = Vec::Zero(p.dims.m);  // flagged step, direction suppressed
    }

    if (ap != nullptr && outer_cfg.record_oracle_error && !rec.error_step) {
      if (auto gf = ap->gradF_exact(theta)) rec.oracle_error = (h_hat - *gf).norm();
    }

    auto st = step(theta, h_hat, outer_cfg.alpha, p.feasible_set);
    rec.grad_map_norm = st.grad_map.norm();
    theta = st.theta_next;
    trace.records.push_back(std::move(rec));
  }

  trace.final_theta = theta;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return trace;
}

RunTrace run_exact_control(const testbed::AnalyticProblem& ap, const Vec& theta0,
                           const OuterConfig& outer_cfg) {
  validate(outer_cfg);
  const BilevelProblem& p = ap.problem;
  check_size(theta0, p.dims.m, "theta0");

  auto t_start = std::chrono::steady_clock::now();
  RunTrace trace;
  trace.outer_cfg = outer_cfg;
  trace.problem_name = ap.name + " (exact-gradient control)";

  Vec theta = theta0;
  if (!p.feasible_set.contains(theta)) {
    theta = project(p.feasible_set, theta);
    trace.theta0_projected = true;
  }

  for (int t = 0; t < outer_cfg.iterations; ++t) {
    IterationRecord rec;
    rec.t = t;
    rec.theta = theta;
    auto gf = ap.gradF_exact(theta);
    if (!gf) {
      rec.error_step = true;
      rec.error_message = "gradF_exact undefined (kink)";
      trace.records.push_back(std::move(rec));
      trace.aborted = true;
      trace.abort_message = rec.error_message;
      break;
    }
    if (auto xs = ap.x_star(theta)) rec.f_selected = p.f(theta, *xs);
    rec.oracle_error = 0.0;
    auto st = step(theta, *gf, outer_cfg.alpha, p.feasible_set);
    rec.grad_map_norm = st.grad_map.norm();
    theta = st.theta_next;
    trace.records.push_back(std::move(rec));
  }
  trace.final_theta = theta;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return trace;
}

ParameterSchedule parameter_schedule(double epsilon, int k, long long n_cap) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    fail(ErrorKind::InvalidConfig, "epsilon must lie in (0, 1)",
         {{"epsilon", fmt_value(epsilon)}});
  if (k < 1)
    fail(ErrorKind::InvalidConfig, "intrinsic dimension must be at least 1",
         {{"k", fmt_value(k)}});

  double n_real = std::pow(epsilon, -4.0 * k);
  if (!std::isfinite(n_real) || n_real > double(n_cap))
    fail(ErrorKind::InvalidConfig, "schedule exceeds the chain cap; refuse rather than hang",
         {{"epsilon", fmt_value(epsilon)},
          {"k", fmt_value(k)},
          {"required_n", fmt_value(n_real)},
          {"cap", fmt_value(std::uint64_t(n_cap))}});

  ParameterSchedule s;
  s.n = static_cast<long long>(std::ceil(n_real));
  s.lambda = std::pow(epsilon, 8.0) / std::log1p(double(s.n));
  s.gamma = epsilon;
  s.eta = epsilon * epsilon;
  s.r_v_factor = 2.0 / s.gamma;
  return s;
}

}  // namespace hgms::outer
