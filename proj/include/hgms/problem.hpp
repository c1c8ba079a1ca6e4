#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "hgms/types.hpp"

namespace hgms {

// Evaluator bundle for one bilevel problem: upper objective f, lower
// objective g, their first derivatives, and the two second-order actions of
// g. Hessians are exposed only as actions; dense assembly lives in the
// oracle module. All evaluators must be pure and callable from concurrent
// workers.
struct BilevelProblem {
  ProblemDims dims;

  std::function<double(const Vec& theta, const Vec& x)> f;
  std::function<Vec(const Vec& theta, const Vec& x)> grad_f_theta;  // length m
  std::function<Vec(const Vec& theta, const Vec& x)> grad_f_x;      // length d
  std::function<double(const Vec& theta, const Vec& x)> g;
  std::function<Vec(const Vec& theta, const Vec& x)> grad_g_x;      // length d
  // v -> Hessian_xx g(theta, x) * v, length d.
  std::function<Vec(const Vec& theta, const Vec& x, const Vec& v)> hvp;
  // v -> Hessian_theta_x g(theta, x) * v, length m.
  std::function<Vec(const Vec& theta, const Vec& x, const Vec& v)> mixed;

  FeasibleSet feasible_set;

  // Declares Hessian_xx g positive definite everywhere; permits gamma = 0.
  bool hessian_positive_definite = false;

  // Optional smoothness metadata; used for diagnostics (tube radius, CG
  // budget) when present, never required.
  std::optional<double> lip_f1;    // L_{f,1}
  std::optional<double> lip_g2;    // L_{g,2}
  std::optional<double> lip_g3;    // L_{g,3} within the tube
  std::optional<double> tube_rho;  // tube radius with controlled third derivative
};

struct ValidationReport {
  int probes = 0;
  double max_symmetry_residual = 0.0;       // |<u,Hv> - <v,Hu>|
  double max_hvp_linearity_residual = 0.0;  // |hvp(au+bv) - a hvp(u) - b hvp(v)|
  double max_mixed_linearity_residual = 0.0;
};

// Sanity gate run before any experiment: random (theta, x, u, v) inside the
// unit box, checking sizes, finiteness, hvp symmetry and linearity of both
// second-order actions. The caller compares residuals against its tolerance.
ValidationReport validate_problem(const BilevelProblem& p, int probes, std::uint64_t seed);

}  // namespace hgms
