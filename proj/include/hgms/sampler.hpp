#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "hgms/problem.hpp"
#include "hgms/testbed.hpp"
#include "hgms/types.hpp"

namespace hgms::sampler {

// lambda-scaled Gaussian around a fixed center: variance tau*lambda per
// coordinate.
struct InitGaussianAtCenter {
  Vec center;
  double tau = 1.0;
};
// lambda-scaled Gaussian around a uniform draw on S(theta); needs an
// AnalyticProblem chart. tau = 0 degenerates to the manifold point itself
// (exact lower solve on k = 0 problems).
struct InitGaussianOnManifold {
  double tau = 1.0;
};
struct InitFixedPoints {
  std::vector<Vec> points;  // chain i starts at points[i % size]
};
using InitSpec = std::variant<InitGaussianAtCenter, InitGaussianOnManifold, InitFixedPoints>;

struct GibbsSamplerConfig {
  double lambda = 1e-3;   // temperature
  int chains = 1;         // N
  int steps = 1000;       // K
  double stepsize = 1e-3; // h
  InitSpec init = InitGaussianOnManifold{};
  std::uint64_t seed = 0;
  int workers = 0;        // 0 = auto
};

void validate(const GibbsSamplerConfig& cfg);

struct ChainOutput {
  std::vector<Vec> points;                 // final states, chain-index order
  std::vector<std::uint64_t> chain_seeds;  // substream seeds actually used
  std::optional<double> mean_dist_to_manifold;
  std::optional<double> max_dist_to_manifold;
};

using StepObserver = std::function<void(int step, const Vec& x)>;

// One ULA chain: x <- x - h grad_g(theta, x) + sqrt(2 lambda h) xi, K steps
// from the initialized state. Deterministic function of
// (seed, chain_index, outer_iteration, theta, cfg); the substream is
// substream_seed(cfg.seed, chain_index, outer_iteration).
Vec ula_chain(const BilevelProblem& p, const Vec& theta, const GibbsSamplerConfig& cfg,
              int chain_index, const testbed::AnalyticProblem* ap = nullptr,
              std::uint64_t outer_iteration = 0, const StepObserver& observer = {});

// N independent chains, assembled in chain-index order regardless of worker
// schedule. Distance diagnostics are filled when an AnalyticProblem is given.
ChainOutput sample_parallel(const BilevelProblem& p, const Vec& theta,
                            const GibbsSamplerConfig& cfg,
                            const testbed::AnalyticProblem* ap = nullptr,
                            std::uint64_t outer_iteration = 0);

// Health check on the Gaussian target g = 0.5|x|^2 (d = 1): pooled
// post-burn-in variance, to compare against lambda / (1 - h/2).
struct GaussianDiag {
  double lambda = 0.1;
  double stepsize = 0.01;
  int steps = 200000;       // total ULA steps per chain
  int burnin = 100000;
  int chains = 8;
  std::uint64_t seed = 0;
};
struct GaussianDiagResult {
  double empirical_variance = 0;
  double predicted_variance = 0;  // lambda / (1 - h/2)
  long long samples = 0;
};
GaussianDiagResult ula_gaussian_variance(const GaussianDiag& cfg);

}  // namespace hgms::sampler
