#pragma once

#include <optional>

#include "hgms/problem.hpp"
#include "hgms/testbed.hpp"
#include "hgms/types.hpp"

namespace hgms::hypergrad {

struct HyperGradConfig {
  double gamma = 1e-2;                 // ridge; > 0 unless the Hessian is PD
  double eta = 1e-8;                   // CG residual tolerance
  int max_cg_iters = 0;                // 0 = budget from the CG condition bound
  std::optional<double> clip_radius;   // R_v; absent = no clipping
  bool warm_start = false;             // reuse previous v as the CG start
};

void validate(const HyperGradConfig& cfg, const BilevelProblem& p);

struct CgResult {
  Vec v;
  int iterations = 0;
  double residual = 0;        // explicit |b - (H + gamma I) v|
  bool budget_exhausted = false;
};

// Solves (Hessian_xx g(theta, x_hat) + gamma I) v = grad_x f(theta, x_hat)
// by conjugate gradients using only hvp calls, from v0 = 0 (or *start).
// On budget exhaustion the result is returned with the flag set; a
// non-positive curvature direction raises NonFinite (the point is far
// off-tube).
CgResult ridge_cg_solve(const BilevelProblem& p, const Vec& theta, const Vec& x_hat,
                        const HyperGradConfig& cfg, const Vec* start = nullptr);

// Euclidean-ball projection v * min(1, R_v / |v|); identity when absent.
Vec clip(const Vec& v, const std::optional<double>& radius);

struct HyperGradEstimate {
  Vec h_hat;                  // grad_theta f - mixed(v)
  Vec v;                      // CG solution after optional clipping
  int cg_iterations = 0;
  double cg_residual = 0;
  bool cg_budget_exhausted = false;
  bool clipped = false;
  std::optional<double> tube_radius;  // r(gamma) diagnostic, when metadata allows
};

HyperGradEstimate hypergradient(const BilevelProblem& p, const Vec& theta,
                                const Vec& x_hat, const HyperGradConfig& cfg,
                                const Vec* warm_v = nullptr);

// Oracle-side exact formula at x*(theta): dense Hessian from hvp columns,
// eigendecomposition, pseudoinverse with eigenvalues below
// 1e-8 * spectral radius zeroed. OracleDisagreement if the near-zero count
// differs from the declared intrinsic dimension.
Vec exact_pseudoinverse_hypergradient(const testbed::AnalyticProblem& ap, const Vec& theta);

// r(gamma) = min(rho, gamma / (2 max(L_g3, 1))) when metadata is present.
std::optional<double> tube_radius(const BilevelProblem& p, double gamma);

}  // namespace hgms::hypergrad
