#pragma once

#include <optional>
#include <vector>

#include "hgms/oracle.hpp"
#include "hgms/sampler.hpp"
#include "hgms/types.hpp"

namespace hgms::selector {

struct SelectionResult {
  int index = 0;   // smallest index attaining the minimum
  Vec point;
  double value = 0;
  std::vector<double> all_values;
  std::optional<double> dist_to_manifold;
};

// Best-of-N optimistic selection: the candidate with the smallest
// upper-level value, ties broken by smallest index (exact float equality).
SelectionResult best_of_n(const BilevelProblem& p, const Vec& theta,
                          const sampler::ChainOutput& candidates,
                          const testbed::AnalyticProblem* ap = nullptr);

struct RateRow {
  double lambda = 0;
  int n = 0;
  double mean_sq_err = 0;
  std::optional<double> std_error;  // absent with a single replicate
  int replicates = 0;
};

struct RateTable {
  std::vector<RateRow> rows;
  std::optional<oracle::SlopeFit> slope_vs_n;       // at the smallest lambda
  std::optional<oracle::SlopeFit> slope_vs_lambda;  // at the largest N
};

// Monte-Carlo sweep of E |x_hat - x*(theta)|^2 over a (lambda, N) grid.
// Replicate streams derive from (cfg.seed, cell, replicate_index).
RateTable selection_error_sweep(const testbed::AnalyticProblem& ap, const Vec& theta,
                                const std::vector<double>& lambda_grid,
                                const std::vector<int>& n_grid, int replicates,
                                const sampler::GibbsSamplerConfig& cfg_template);

}  // namespace hgms::selector
