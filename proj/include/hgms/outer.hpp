#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hgms/hypergrad.hpp"
#include "hgms/sampler.hpp"
#include "hgms/selector.hpp"
#include "hgms/types.hpp"

namespace hgms::outer {

struct OuterConfig {
  double alpha = 0.1;     // constant stepsize
  int iterations = 100;   // T
  bool stop_on_error = true;
  bool record_oracle_error = false;  // ||h_hat - grad F|| on analytic problems
  bool warm_start_chains = false;    // chains restart from the previous selection
};

void validate(const OuterConfig& cfg);

struct IterationRecord {
  int t = 0;
  Vec theta;
  double f_selected = 0;
  double grad_map_norm = 0;
  int cg_iterations = 0;
  double cg_residual = 0;
  bool cg_budget_exhausted = false;
  bool clipped = false;
  std::optional<double> tube_radius;
  double candidate_value_min = 0;
  double candidate_value_mean = 0;
  std::optional<double> dist_to_manifold;
  std::optional<double> oracle_error;
  bool error_step = false;  // h_hat was replaced by 0 after a recorded error
  std::string error_message;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  Vec final_theta;
  sampler::GibbsSamplerConfig sampler_cfg;
  hypergrad::HyperGradConfig hypergrad_cfg;
  OuterConfig outer_cfg;
  std::uint64_t seed = 0;
  std::string problem_name;
  double wall_seconds = 0;
  int alpha_warning_count = 0;  // F increased 5 steps in a row (warn only)
  bool theta0_projected = false;
  bool aborted = false;
  std::string abort_message;
};

// Euclidean projection: Box by clamp, Simplex by sort-and-threshold,
// FullSpace identity.
Vec project(const FeasibleSet& set, const Vec& u);

struct StepResult {
  Vec theta_next;
  Vec grad_map;  // (theta - theta_next) / alpha
};

StepResult step(const Vec& theta, const Vec& h_hat, double alpha, const FeasibleSet& set);

// Full select-then-differentiate loop: sample -> select -> ridge-CG ->
// clip -> assemble -> projected step, T times. ap may be null for plain
// BilevelProblems (then manifold diagnostics and oracle errors are absent).
RunTrace run_hgms(const BilevelProblem& p, const testbed::AnalyticProblem* ap,
                  const Vec& theta0, const sampler::GibbsSamplerConfig& sampler_cfg,
                  const hypergrad::HyperGradConfig& hg_cfg, const OuterConfig& outer_cfg);

// Control run using gradF_exact as the step direction; used to benchmark
// the inexactness of HG-MS against plain projected gradient descent.
RunTrace run_exact_control(const testbed::AnalyticProblem& ap, const Vec& theta0,
                           const OuterConfig& outer_cfg);

struct ParameterSchedule {
  long long n = 0;      // ULA chains
  double lambda = 0;
  double gamma = 0;
  double eta = 0;
  double r_v_factor = 0;  // R_v >= r_v_factor * (L_f1 + eta), factor = 2/gamma
};

// The analyzed schedule N = ceil(eps^{-4k}), lambda = eps^8 / log(1+N),
// gamma = eps, eta = eps^2. Refuses schedules whose N exceeds the cap.
ParameterSchedule parameter_schedule(double epsilon, int k, long long n_cap = 1000000);

}  // namespace hgms::outer
