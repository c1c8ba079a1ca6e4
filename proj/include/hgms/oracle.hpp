#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hgms/testbed.hpp"
#include "hgms/types.hpp"

namespace hgms::oracle {

using testbed::AnalyticProblem;

struct GridSpec {
  double lo = 0;
  double hi = 0;
  int points = 0;
};

// Brute-force hyper-objective: dense tensor grid over the chart domain
// followed by coordinate-wise golden-section refinement. Deliberately slow
// and independent of every closed-form F.
// points_per_axis = 0 picks the default (1e5 for k=1, 1e3^2 for k=2,
// 1e2^3 for k=3); k >= 4 is refused.
struct DenseMinResult {
  double value = 0;
  Vec chart_coords;
};
DenseMinResult dense_F(const AnalyticProblem& ap, const Vec& theta, int points_per_axis = 0);

// Central differences of dense_F per theta coordinate with one Richardson
// halving; raises OracleDisagreement when the halved step disagrees (kink or
// insufficient grid).
Vec fd_gradF(const AnalyticProblem& ap, const Vec& theta, double step = 1e-5,
             double tol = 1e-4);

// Dense d x d Hessian of g by central differences of grad_g_x, symmetrized.
Mat dense_hessian(const BilevelProblem& p, const Vec& theta, const Vec& x,
                  double step = 1e-4);

// Cross-checks the problem's hvp action against finite differences of
// grad_g_x on random probes; OracleDisagreement above tol.
void check_hvp_against_fd(const BilevelProblem& p, const Vec& theta, const Vec& x,
                          int probes, std::uint64_t seed, double tol = 1e-5);

// Mixed action oracle built from g alone (second-order cross differences).
Vec fd_mixed(const BilevelProblem& p, const Vec& theta, const Vec& x, const Vec& v,
             double step = 1e-4);

struct KinkReport {
  std::vector<double> grid;     // theta values
  std::vector<double> F;        // F values on the grid
  std::vector<double> d_minus;  // left difference quotients (interior points)
  std::vector<double> d_plus;   // right difference quotients
  std::vector<int> flagged_cells;        // grid indices, deduplicated
  std::vector<double> flagged_thetas;    // refined kink locations
  double threshold = 0;
  double floor_rel = 0;
};

// Flags theta where the one-sided quotients mismatch by more than
// threshold * max(|D+|, |D-|, floor). The floor is relative to the local
// slope scale, and every candidate is confirmed by re-measuring the
// one-sided slopes at step sizes shrinking from cell/10 to cell/1e8: a true
// kink keeps its slope, a smooth stationary point loses it linearly.
KinkReport kink_probe(const AnalyticProblem& ap, const GridSpec& grid,
                      double threshold = 0.5, double floor_rel = 1e-12);

struct HolderReport {
  double theta_k = 0;
  double grad_at_center = 0;  // F'(theta_k), exactly 0 at a recorded failure point
  std::vector<double> radii;
  std::vector<double> grad_values;          // |F'(theta_k + rho)|
  std::vector<double> log_law_ratios;       // |F'| * sqrt(log(1/rho))
  std::vector<double> holder01_quotients;   // |F'| / rho^0.1
};

// Probes the log-law |F'(theta_k + rho)| ~ 1/sqrt(log(1/rho)) at a recorded
// Holder-failure point. Empty radii list uses {1e-2, ..., 1e-13}.
HolderReport holder_probe(const AnalyticProblem& ap, double theta_k,
                          std::vector<double> radii = {});

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  int points = 0;
};

// Ordinary least squares on (log x, log y). InvalidConfig on nonpositive
// inputs or fewer than 3 points.
SlopeFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace hgms::oracle
