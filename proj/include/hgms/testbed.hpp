#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hgms/problem.hpp"
#include "hgms/rng.hpp"
#include "hgms/types.hpp"

namespace hgms::testbed {

// Analytic problem with a closed-form minimizer manifold, so every
// algorithmic output has a ground-truth comparator.
struct AnalyticProblem {
  std::string name;
  BilevelProblem problem;

  int intrinsic_dim = 0;   // k = dim S(theta)
  double normal_gap = 0;   // lower bound c on normal Hessian eigenvalues over Theta

  // chart(u, theta) -> point on S(theta); u has length intrinsic_dim and
  // lives in chart_domain (per-coordinate intervals).
  std::function<Vec(const Vec& u, const Vec& theta)> chart;
  std::vector<std::pair<double, double>> chart_domain;

  // Uniform draw w.r.t. the surface measure of S(theta).
  std::function<Vec(const Vec& theta, Rng& rng)> random_on_manifold;

  // Unique optimistic minimizer; nullopt where the selection ties.
  std::function<std::optional<Vec>(const Vec& theta)> x_star;
  std::function<double(const Vec& theta)> F_exact;
  // Hyper-gradient of F; nullopt at known non-differentiability points.
  std::function<std::optional<Vec>(const Vec& theta)> gradF_exact;

  std::function<double(const Vec& theta, const Vec& x)> dist_to_manifold;

  // Known non-differentiability points of F inside [lo, hi] (ascending).
  std::function<std::vector<double>(double lo, double hi)> kinks_in;
  // Points where grad F loses every positive Holder modulus.
  std::function<std::vector<double>(double lo, double hi)> holder_failure_in;
};

struct ProblemCatalogEntry {
  std::string name;
  std::string description;
  std::function<AnalyticProblem()> make;
};

// m=1, d=2, k=1. f = a(theta) x1 + x2^2, g = (|x|^2 - r^2)^2 with
// r = sqrt(1+theta^2) and a(theta) = exp(-1/theta^2) sin(10/theta).
// F = -r|a| has kinks at theta_k = 10/(k pi).
AnalyticProblem make_circle_kink();

// m=1, d=2, k=1. Same lower level; the upper level has a unique optimistic
// minimizer for every theta but grad F loses all Holder regularity at the
// zeros of a. b > 0 is a free parameter that vanishes on the manifold.
AnalyticProblem make_degenerate_circle(double b = 1.0);

// m=1, d>=3, k=d-1. g as above in R^d, f = <e1, x>. Smooth F = -r(theta).
AnalyticProblem make_sphere(int d);

// k=0 control problem: g = 0.5 |x - A^T theta|^2, f = 0.5 |x|^2,
// x*(theta) = A^T theta, grad F = A A^T theta.
AnalyticProblem make_singleton(const Mat& A);
AnalyticProblem make_singleton();  // default A = [[2,0],[0,1]]

// Catalog lookup by CLI name: circle-kink, degenerate-circle, sphere-d{d},
// singleton.
AnalyticProblem make_by_name(const std::string& name);
std::vector<std::string> catalog_names();

struct ManifoldEigenReport {
  Vec eigenvalues;  // ascending
  Mat eigenvectors;
  int near_zero_count = 0;
  double gap_threshold = 0;
};

// Eigendecomposition of Hessian_xx g at chart(u, theta); on the manifold,
// exactly k eigenvalues vanish and the rest sit above the normal gap.
ManifoldEigenReport hessian_on_manifold(const AnalyticProblem& ap, const Vec& theta,
                                        const Vec& u);

// Closed-form pieces shared with tests and oracles.
double kink_a(double theta);        // exp(-1/theta^2) sin(10/theta), guarded near 0
double kink_a_prime(double theta);
double smooth_eta(double t);        // sign(t) exp(-1/t^2), guarded near 0
// Unique root of eta(t) + a = 0: -sign(a) (log(1/|a|))^{-1/2}, 0 at a = 0.
double degenerate_t_star(double a);

}  // namespace hgms::testbed
