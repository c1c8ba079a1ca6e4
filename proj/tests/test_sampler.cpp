#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hgms/oracle.hpp"
#include "hgms/sampler.hpp"
#include "hgms/testbed.hpp"

using namespace hgms;
using namespace hgms::sampler;

namespace {

Vec theta1(double t) {
  Vec v(1);
  v[0] = t;
  return v;
}

// Scalar Gaussian target g = x^2 / 2 wrapped as a BilevelProblem.
BilevelProblem gaussian_target_1d() {
  BilevelProblem p;
  p.dims = {1, 1};
  p.f = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.grad_f_theta = [](const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  p.grad_f_x = [](const Vec&, const Vec& x) { return x; };
  p.g = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.grad_g_x = [](const Vec&, const Vec& x) { return x; };
  p.hvp = [](const Vec&, const Vec&, const Vec& v) { return v; };
  p.mixed = [](const Vec&, const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  p.feasible_set = FeasibleSet::full_space();
  p.hessian_positive_definite = true;
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  GibbsSamplerConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(validate(cfg), ToolException);
  try {
    validate(cfg);
  } catch (const ToolException& e) {
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);  // names the knob
  }
  cfg.lambda = 0.1;
  cfg.stepsize = -1;
  CHECK_THROWS_AS(validate(cfg), ToolException);
  cfg.stepsize = 0.01;
  cfg.chains = 0;
  CHECK_THROWS_AS(validate(cfg), ToolException);
  cfg.chains = 1;
  cfg.steps = -1;
  CHECK_THROWS_AS(validate(cfg), ToolException);
  cfg.steps = 0;
  cfg.init = InitFixedPoints{{}};
  CHECK_THROWS_AS(validate(cfg), ToolException);
}

TEST_CASE("K = 0 with fixed init returns the init point unchanged") {
  auto p = gaussian_target_1d();
  GibbsSamplerConfig cfg;
  cfg.lambda = 0.1;
  cfg.steps = 0;
  cfg.chains = 3;
  cfg.seed = 1;
  Vec pt(1);
  pt << 0.731;
  cfg.init = InitFixedPoints{{pt}};
  auto out = sample_parallel(p, theta1(0.0), cfg);
  REQUIRE(out.points.size() == 3);
  for (const auto& x : out.points) CHECK(x[0] == 0.731);
}

TEST_CASE("stationary variance of ULA on the Gaussian target") {
  // x_{k+1} = (1 - h) x_k + sqrt(2 lambda h) xi has stationary variance
  // lambda / (1 - h/2); one chain, 1e5 steps, last half scored.
  GaussianDiag diag;
  diag.lambda = 0.1;
  diag.stepsize = 0.01;
  diag.steps = 100000;
  diag.burnin = 50000;
  diag.chains = 1;
  diag.seed = 20240809;
  auto res = ula_gaussian_variance(diag);
  CHECK(res.predicted_variance == doctest::Approx(0.1 / 0.995).epsilon(1e-12));
  CHECK(std::abs(res.empirical_variance - res.predicted_variance) <
        0.05 * res.predicted_variance);
}

TEST_CASE("pooled multi-chain variance estimate is tighter") {
  GaussianDiag diag;
  diag.seed = 7;
  auto res = ula_gaussian_variance(diag);  // 8 chains x 1e5 post-burn-in
  CHECK(res.samples == 800000);
  CHECK(std::abs(res.empirical_variance - res.predicted_variance) <
        0.02 * res.predicted_variance);
}

TEST_CASE("determinism: same seed, same output, bit for bit") {
  auto ap = testbed::make_circle_kink();
  GibbsSamplerConfig cfg;
  cfg.lambda = 1e-3;
  cfg.chains = 8;
  cfg.steps = 500;
  cfg.stepsize = 1e-3;
  cfg.seed = 99;
  cfg.init = InitGaussianOnManifold{1.0};
  auto a = sample_parallel(ap.problem, theta1(0.2), cfg, &ap);
  auto b = sample_parallel(ap.problem, theta1(0.2), cfg, &ap);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i)
    CHECK(std::memcmp(a.points[i].data(), b.points[i].data(),
                      sizeof(double) * a.points[i].size()) == 0);
  CHECK(a.chain_seeds == b.chain_seeds);

  // different outer iteration index -> different substreams
  auto c = sample_parallel(ap.problem, theta1(0.2), cfg, &ap, 1);
  CHECK(std::memcmp(a.points[0].data(), c.points[0].data(), sizeof(double) * 2) != 0);
}

TEST_CASE("single chain equals sample_parallel with N = 1") {
  auto ap = testbed::make_circle_kink();
  GibbsSamplerConfig cfg;
  cfg.lambda = 1e-3;
  cfg.chains = 1;
  cfg.steps = 200;
  cfg.stepsize = 1e-3;
  cfg.seed = 5;
  Vec center(2);
  center << 1.0, 0.0;
  cfg.init = InitGaussianAtCenter{center, 1.0};
  Vec direct = ula_chain(ap.problem, theta1(0.2), cfg, 0, &ap);
  auto out = sample_parallel(ap.problem, theta1(0.2), cfg, &ap);
  CHECK((direct - out.points[0]).norm() == 0.0);
}

TEST_CASE("chains concentrate near the manifold") {
  // Monte-Carlo check of the tube tail: dist < 0.15 with probability
  // >= 0.95 over 200 chains.
  auto ap = testbed::make_circle_kink();
  GibbsSamplerConfig cfg;
  cfg.lambda = 1e-3;
  cfg.chains = 200;
  cfg.steps = 20000;
  cfg.stepsize = 1e-4;
  cfg.seed = 31337;
  Vec center(2);
  center << 1.0, 0.0;
  cfg.init = InitGaussianAtCenter{center, 1.0};
  auto out = sample_parallel(ap.problem, theta1(0.2), cfg, &ap);
  int near = 0;
  for (const auto& x : out.points)
    if (ap.dist_to_manifold(theta1(0.2), x) < 0.15) ++near;
  CHECK(near >= 190);
  REQUIRE(out.mean_dist_to_manifold.has_value());
  CHECK(*out.mean_dist_to_manifold < 0.05);
}

TEST_CASE("tube width scales with lambda: mean square linearly, quantile as sqrt") {
  auto ap = testbed::make_circle_kink();
  std::vector<double> lambdas = {1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> msd, q99;
  for (double lam : lambdas) {
    GibbsSamplerConfig cfg;
    cfg.lambda = lam;
    cfg.chains = 256;
    cfg.steps = 1500;
    cfg.stepsize = 1e-3;
    cfg.seed = 1234;
    cfg.init = InitGaussianOnManifold{1.0};
    auto out = sample_parallel(ap.problem, theta1(0.2), cfg, &ap);
    std::vector<double> dists;
    double acc = 0;
    for (const auto& x : out.points) {
      double d = ap.dist_to_manifold(theta1(0.2), x);
      dists.push_back(d);
      acc += d * d;
    }
    msd.push_back(acc / cfg.chains);
    std::sort(dists.begin(), dists.end());
    q99.push_back(dists[int(0.99 * (dists.size() - 1))]);
  }
  auto fit = oracle::fit_loglog(lambdas, msd);
  CHECK(fit.slope > 0.7);
  CHECK(fit.slope < 1.3);
  auto qfit = oracle::fit_loglog(lambdas, q99);
  CHECK(qfit.slope > 0.35);
  CHECK(qfit.slope < 0.65);
}

TEST_CASE("NonFinite when the stepsize explodes the chain") {
  auto ap = testbed::make_circle_kink();
  GibbsSamplerConfig cfg;
  cfg.lambda = 1e-3;
  cfg.chains = 1;
  cfg.steps = 2000;
  cfg.stepsize = 10.0;  // unstable for the quartic lower level
  cfg.seed = 2;
  Vec center(2);
  center << 3.0, 0.0;
  cfg.init = InitFixedPoints{{center}};
  CHECK_THROWS_AS(sample_parallel(ap.problem, theta1(0.2), cfg, &ap), ToolException);
}

TEST_CASE("GaussianOnManifold requires an analytic problem") {
  auto p = gaussian_target_1d();
  GibbsSamplerConfig cfg;
  cfg.lambda = 0.1;
  cfg.chains = 1;
  cfg.steps = 1;
  cfg.seed = 3;
  cfg.init = InitGaussianOnManifold{1.0};
  CHECK_THROWS_AS(sample_parallel(p, theta1(0.0), cfg, nullptr), ToolException);
}
