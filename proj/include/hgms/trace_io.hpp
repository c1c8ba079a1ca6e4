#pragma once

#include <string>

#include "hgms/config.hpp"
#include "hgms/oracle.hpp"
#include "hgms/outer.hpp"
#include "hgms/selector.hpp"

namespace hgms::cli {

// Every CSV starts with a provenance comment line
// "# hgms seed=<seed> config_hash=<hash>" so outputs are self-describing.

// trace.csv, one row per outer iteration. Column order is fixed:
// t, theta_0..theta_{m-1}, f_selected, grad_map_norm, cg_iters, cg_residual,
// clipped, dist_to_manifold, oracle_err. Absent optionals are empty cells.
void write_trace_csv(const std::string& path, const outer::RunTrace& trace,
                     const ExperimentConfig& cfg);

void write_summary_json(const std::string& path, const outer::RunTrace& trace,
                        const ExperimentConfig& cfg);

// lambda, n, mean_sq_err, stderr, replicates; empty stderr when replicates = 1.
void write_rate_csv(const std::string& path, const selector::RateTable& table,
                    const ExperimentConfig& cfg);
void write_slopes_json(const std::string& path, const selector::RateTable& table,
                       const ExperimentConfig& cfg);

// theta, F, d_minus, d_plus, flagged (+ ra / minus_ra branch columns on the
// circle-kink problem).
void write_kink_csv(const std::string& path, const oracle::KinkReport& report,
                    bool with_branches, const ExperimentConfig& cfg);

std::string join_path(const std::string& dir, const std::string& name);
void ensure_dir(const std::string& dir);

}  // namespace hgms::cli
