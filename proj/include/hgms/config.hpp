#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hgms/hypergrad.hpp"
#include "hgms/outer.hpp"
#include "hgms/sampler.hpp"
#include "hgms/testbed.hpp"

namespace hgms::cli {

// Parsed experiment file. Sections: problem, feasible_set, sampler,
// hypergrad, outer, output. Unknown keys are errors; the seed key is
// mandatory (no wall-clock seeding).
struct ExperimentConfig {
  std::string problem_name = "sphere-d3";
  double degenerate_b = 1.0;
  std::vector<double> theta0;  // empty = problem default

  std::string feasible_kind;  // "", "box", "simplex", "full"
  std::vector<double> feasible_lower, feasible_upper;

  double lambda = 1e-4;
  int chains = 64;
  int steps = 2000;
  double stepsize = 1e-3;
  std::string init_kind = "gaussian-on-manifold";  // or gaussian-at-center, fixed
  std::vector<double> init_center;
  double tau = 1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;

  hypergrad::HyperGradConfig hypergrad;
  outer::OuterConfig outer;

  std::string out_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Fixed-order serialization used for the provenance hash and config echo.
std::string canonical_config_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const std::string& canonical_text);  // FNV-1a 64

// Materialize the problem and the per-module configs from a parsed file.
struct Experiment {
  testbed::AnalyticProblem problem;
  Vec theta0;
  sampler::GibbsSamplerConfig sampler_cfg;
  hypergrad::HyperGradConfig hypergrad_cfg;
  outer::OuterConfig outer_cfg;
};
Experiment build_experiment(const ExperimentConfig& cfg);

Vec default_theta0(const std::string& problem_name, int m);

}  // namespace hgms::cli
