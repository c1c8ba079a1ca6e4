#include "hgms/problem.hpp"

#include <algorithm>
#include <cmath>

#include "hgms/rng.hpp"

namespace hgms {

namespace {

Vec random_box(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

Vec checked(const Vec& v, Eigen::Index n, const char* name) {
  check_size(v, n, name);
  check_finite(v, name);
  return v;
}

}  // namespace

ValidationReport validate_problem(const BilevelProblem& p, int probes, std::uint64_t seed) {
  if (probes < 1)
    fail(ErrorKind::InvalidConfig, "probes must be positive", {{"probes", fmt_value(probes)}});
  const int m = p.dims.m;
  const int d = p.dims.d;
  Rng rng(mix64(seed));

  ValidationReport report;
  report.probes = probes;
  for (int it = 0; it < probes; ++it) {
    Vec theta = random_box(m, rng);
    Vec x = random_box(d, rng);
    Vec u = random_box(d, rng);
    Vec v = random_box(d, rng);

    check_finite(p.f(theta, x), "f");
    check_finite(p.g(theta, x), "g");
    checked(p.grad_f_theta(theta, x), m, "grad_f_theta");
    checked(p.grad_f_x(theta, x), d, "grad_f_x");
    checked(p.grad_g_x(theta, x), d, "grad_g_x");

    Vec hu = checked(p.hvp(theta, x, u), d, "hvp");
    Vec hv = checked(p.hvp(theta, x, v), d, "hvp");
    double sym = std::abs(u.dot(hv) - v.dot(hu));
    report.max_symmetry_residual = std::max(report.max_symmetry_residual, sym);

    const double a = 0.7, b = -1.3;
    Vec hw = checked(p.hvp(theta, x, (a * u + b * v).eval()), d, "hvp");
    double lin_h = (hw - a * hu - b * hv).norm();
    report.max_hvp_linearity_residual = std::max(report.max_hvp_linearity_residual, lin_h);

    Vec mu = checked(p.mixed(theta, x, u), m, "mixed");
    Vec mv = checked(p.mixed(theta, x, v), m, "mixed");
    Vec mw = checked(p.mixed(theta, x, (a * u + b * v).eval()), m, "mixed");
    double lin_m = (mw - a * mu - b * mv).norm();
    report.max_mixed_linearity_residual = std::max(report.max_mixed_linearity_residual, lin_m);
  }
  return report;
}

}  // namespace hgms
