#include "hgms/hypergrad.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace hgms::hypergrad {

void validate(const HyperGradConfig& cfg, const BilevelProblem& p) {
  if (!(cfg.eta > 0.0))
    fail(ErrorKind::InvalidConfig, "CG tolerance eta must be positive",
         {{"eta", fmt_value(cfg.eta)}});
  if (!(cfg.gamma >= 0.0))
    fail(ErrorKind::InvalidConfig, "ridge gamma must be nonnegative",
         {{"gamma", fmt_value(cfg.gamma)}});
  if (cfg.gamma == 0.0 && !p.hessian_positive_definite)
    fail(ErrorKind::InvalidConfig,
         "gamma = 0 requires a problem with a declared positive-definite Hessian",
         {{"gamma", fmt_value(0.0)}});
  if (cfg.clip_radius && !(*cfg.clip_radius > 0.0))
    fail(ErrorKind::InvalidConfig, "clip radius must be positive",
         {{"clip_radius", fmt_value(*cfg.clip_radius)}});
  if (cfg.max_cg_iters < 0)
    fail(ErrorKind::InvalidConfig, "max_cg_iters must be nonnegative",
         {{"max_cg_iters", fmt_value(cfg.max_cg_iters)}});
}

std::optional<double> tube_radius(const BilevelProblem& p, double gamma) {
  if (!p.tube_rho || !p.lip_g3) return std::nullopt;
  return std::min(*p.tube_rho, gamma / (2.0 * std::max(*p.lip_g3, 1.0)));
}

namespace {

// Default CG budget from the standard condition-number estimate
// ceil(4 sqrt((L + gamma)/gamma) log(1/eta)), capped at 10 d. L falls back
// to the largest diagonal Hessian probe when metadata is absent.
int default_budget(const BilevelProblem& p, const Vec& theta, const Vec& x_hat,
                   const HyperGradConfig& cfg) {
  const int d = p.dims.d;
  double upper;
  if (p.lip_g2) {
    upper = *p.lip_g2;
  } else {
    upper = 0.0;
    for (int i = 0; i < d; ++i) {
      Vec e = Vec::Zero(d);
      e[i] = 1.0;
      upper = std::max(upper, std::abs(p.hvp(theta, x_hat, e)[i]));
    }
  }
  double gamma = std::max(cfg.gamma, 1e-12);
  double est = 4.0 * std::sqrt((upper + gamma) / gamma) * std::log(1.0 / std::min(cfg.eta, 0.5));
  int budget = static_cast<int>(std::ceil(est));
  return std::clamp(budget, d + 2, 10 * d);
}

}  // namespace

CgResult ridge_cg_solve(const BilevelProblem& p, const Vec& theta, const Vec& x_hat,
                        const HyperGradConfig& cfg, const Vec* start) {
  validate(cfg, p);
  check_finite(x_hat, "x_hat");
  const int d = p.dims.d;
  const double gamma = cfg.gamma;
  auto apply = [&](const Vec& v) { return (p.hvp(theta, x_hat, v) + gamma * v).eval(); };

  Vec b = p.grad_f_x(theta, x_hat);
  check_size(b, d, "grad_f_x");
  check_finite(b, "grad_f_x");

  CgResult res;
  if (b.norm() == 0.0) {
    res.v = Vec::Zero(d);
    return res;
  }

  int budget = cfg.max_cg_iters > 0 ? cfg.max_cg_iters : default_budget(p, theta, x_hat, cfg);

  Vec v = (start != nullptr && start->size() == d) ? *start : Vec::Zero(d);
  Vec r = b - apply(v);
  Vec dir = r;
  double rs = r.squaredNorm();
  int it = 0;
  while (std::sqrt(rs) > cfg.eta && it < budget) {
    Vec ad = apply(dir);
    double dad = dir.dot(ad);
    if (!(dad > 0.0)) {
      if (gamma > 0.0)
        fail(ErrorKind::NonFinite,
             "CG met non-positive curvature despite the ridge; the point is far off-tube",
             {{"curvature", fmt_value(dad)}, {"gamma", fmt_value(gamma)}});
      break;  // gamma = 0 on a declared-PD problem: numerical exhaustion
    }
    double alpha = rs / dad;
    v += alpha * dir;
    r -= alpha * ad;
    double rs_new = r.squaredNorm();
    dir = r + (rs_new / rs) * dir;
    rs = rs_new;
    ++it;
  }
  res.v = v;
  res.iterations = it;
  res.residual = (b - apply(v)).norm();  // explicit, not the recursive one
  res.budget_exhausted = res.residual > cfg.eta;
  return res;
}

Vec clip(const Vec& v, const std::optional<double>& radius) {
  if (!radius) return v;
  double n = v.norm();
  if (n <= *radius || n == 0.0) return v;
  return (*radius / n) * v;
}

HyperGradEstimate hypergradient(const BilevelProblem& p, const Vec& theta, const Vec& x_hat,
                                const HyperGradConfig& cfg, const Vec* warm_v) {
  CgResult cg = ridge_cg_solve(p, theta, x_hat, cfg, cfg.warm_start ? warm_v : nullptr);

  HyperGradEstimate est;
  est.cg_iterations = cg.iterations;
  est.cg_residual = cg.residual;
  est.cg_budget_exhausted = cg.budget_exhausted;
  est.v = clip(cg.v, cfg.clip_radius);
  est.clipped = cfg.clip_radius.has_value() && cg.v.norm() > *cfg.clip_radius;
  est.h_hat = p.grad_f_theta(theta, x_hat) - p.mixed(theta, x_hat, est.v);
  check_finite(est.h_hat, "h_hat");
  est.tube_radius = tube_radius(p, cfg.gamma);
  return est;
}

Vec exact_pseudoinverse_hypergradient(const testbed::AnalyticProblem& ap, const Vec& theta) {
  auto star = ap.x_star(theta);
  if (!star)
    fail(ErrorKind::InvalidConfig,
         "exact pseudoinverse hyper-gradient needs a unique optimistic minimizer",
         {{"theta_0", fmt_value(theta[0])}});
  const Vec& x = *star;
  const BilevelProblem& p = ap.problem;
  const int d = p.dims.d;

  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    H.col(j) = p.hvp(theta, x, e);
  }
  H = 0.5 * (H + H.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> solver(H);
  const Vec& evals = solver.eigenvalues();
  const Mat& evecs = solver.eigenvectors();
  double spectral = evals.cwiseAbs().maxCoeff();
  double cutoff = 1e-8 * spectral;

  int near_zero = 0;
  for (int i = 0; i < d; ++i)
    if (std::abs(evals[i]) < cutoff) ++near_zero;
  if (near_zero != ap.intrinsic_dim)
    fail(ErrorKind::OracleDisagreement,
         "near-zero eigenvalue count does not match the declared intrinsic dimension",
         {{"near_zero", fmt_value(near_zero)},
          {"intrinsic_dim", fmt_value(ap.intrinsic_dim)},
          {"cutoff", fmt_value(cutoff)}});

  Vec b = p.grad_f_x(theta, x);
  Vec v = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (std::abs(evals[i]) < cutoff) continue;
    Vec u = evecs.col(i);
    v += u.dot(b) / evals[i] * u;
  }
  return p.grad_f_theta(theta, x) - p.mixed(theta, x, v);
}

}  // namespace hgms::hypergrad
