#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hgms/rng.hpp"
#include "hgms/selector.hpp"
#include "hgms/testbed.hpp"

using namespace hgms;
using namespace hgms::selector;

namespace {

Vec theta1(double t) {
  Vec v(1);
  v[0] = t;
  return v;
}

// Upper level reads x[0]; candidates are placed directly.
BilevelProblem value_probe_problem() {
  BilevelProblem p;
  p.dims = {1, 1};
  p.f = [](const Vec&, const Vec& x) { return x[0]; };
  p.grad_f_theta = [](const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  p.grad_f_x = [](const Vec&, const Vec&) { return Vec::Ones(1).eval(); };
  p.g = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.grad_g_x = [](const Vec&, const Vec& x) { return x; };
  p.hvp = [](const Vec&, const Vec&, const Vec& v) { return v; };
  p.mixed = [](const Vec&, const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  p.hessian_positive_definite = true;
  return p;
}

sampler::ChainOutput candidates_from(const std::vector<double>& values) {
  sampler::ChainOutput out;
  for (double v : values) {
    Vec x(1);
    x << v;
    out.points.push_back(x);
    out.chain_seeds.push_back(0);
  }
  return out;
}

}  // namespace

TEST_CASE("best_of_n basics and tie-breaking") {
  auto p = value_probe_problem();

  auto single = best_of_n(p, theta1(0), candidates_from({2.5}));
  CHECK(single.index == 0);
  CHECK(single.value == 2.5);

  auto tied = best_of_n(p, theta1(0), candidates_from({3.0, 1.0, 1.0}));
  CHECK(tied.index == 1);  // smallest index attaining the minimum
  CHECK(tied.value == 1.0);
  CHECK(tied.all_values == std::vector<double>{3.0, 1.0, 1.0});

  CHECK_THROWS_AS(best_of_n(p, theta1(0), candidates_from({})), ToolException);

  auto bad = candidates_from({1.0, std::nan("")});
  CHECK_THROWS_AS(best_of_n(p, theta1(0), bad), ToolException);
}

TEST_CASE("selected value is a lower bound and monotone under set growth") {
  auto p = value_probe_problem();
  Rng rng(17);
  std::vector<double> values;
  for (int i = 0; i < 40; ++i) values.push_back(rng.uniform(-2, 2));

  auto small = candidates_from({values.begin(), values.begin() + 15});
  auto big = candidates_from(values);
  auto sel_small = best_of_n(p, theta1(0), small);
  auto sel_big = best_of_n(p, theta1(0), big);
  CHECK(sel_big.value <= sel_small.value);  // nested sets
  for (double v : values) CHECK(sel_big.value <= v);
}

TEST_CASE("permutation moves the index, never the value") {
  auto p = value_probe_problem();
  std::vector<double> values = {0.7, -0.3, 1.9, -0.3, 0.2};
  auto base = best_of_n(p, theta1(0), candidates_from(values));

  std::vector<double> perm = values;
  std::rotate(perm.begin(), perm.begin() + 2, perm.end());
  auto rotated = best_of_n(p, theta1(0), candidates_from(perm));
  CHECK(rotated.value == base.value);
  CHECK(rotated.point[0] == base.point[0]);
  // with the documented tie-break, the winner is the value-minimal candidate
  // of smallest index in the permuted order
  CHECK(rotated.index == 1);
  CHECK(base.index == 1);
}

TEST_CASE("selection error sweep on the singleton: lambda drives the error") {
  auto ap = testbed::make_singleton();
  Vec theta = Vec::Constant(2, 0.9);

  sampler::GibbsSamplerConfig tmpl;
  tmpl.steps = 400;
  tmpl.stepsize = 0.05;
  tmpl.seed = 11;
  tmpl.init = sampler::InitGaussianOnManifold{1.0};

  auto table = selection_error_sweep(ap, theta, {1e-2, 1e-3, 1e-4}, {8}, 40, tmpl);
  REQUIRE(table.rows.size() == 3);
  // k = 0: the error is all lambda; 100x smaller lambda must give >= 10x less
  CHECK(table.rows[0].mean_sq_err / table.rows[2].mean_sq_err >= 10.0);
  REQUIRE(table.slope_vs_lambda.has_value());
  CHECK(table.slope_vs_lambda->slope > 0.5);
  REQUIRE(table.rows[0].std_error.has_value());
}

TEST_CASE("sweep validation") {
  auto ap = testbed::make_singleton();
  Vec theta = Vec::Constant(2, 0.5);
  sampler::GibbsSamplerConfig tmpl;
  tmpl.seed = 1;
  CHECK_THROWS_AS(selection_error_sweep(ap, theta, {}, {4}, 2, tmpl), ToolException);
  CHECK_THROWS_AS(selection_error_sweep(ap, theta, {1e-3}, {}, 2, tmpl), ToolException);
  CHECK_THROWS_AS(selection_error_sweep(ap, theta, {1e-3}, {4}, 0, tmpl), ToolException);

  // x_star undefined at a tie: circle-kink at theta in the guard region
  auto circle = testbed::make_circle_kink();
  CHECK_THROWS_AS(selection_error_sweep(circle, theta1(0.01), {1e-3}, {4}, 2, tmpl),
                  ToolException);
}

TEST_CASE("single replicate leaves the standard error empty") {
  auto ap = testbed::make_singleton();
  Vec theta = Vec::Constant(2, 0.5);
  sampler::GibbsSamplerConfig tmpl;
  tmpl.steps = 50;
  tmpl.stepsize = 0.05;
  tmpl.seed = 21;
  tmpl.init = sampler::InitGaussianOnManifold{1.0};
  auto table = selection_error_sweep(ap, theta, {1e-3, 1e-4, 1e-5}, {4}, 1, tmpl);
  for (const auto& row : table.rows) CHECK(!row.std_error.has_value());
}

TEST_CASE("dist_to_manifold diagnostic is attached when the oracle is present") {
  auto ap = testbed::make_circle_kink();
  sampler::GibbsSamplerConfig cfg;
  cfg.lambda = 1e-4;
  cfg.chains = 16;
  cfg.steps = 300;
  cfg.stepsize = 1e-3;
  cfg.seed = 3;
  cfg.init = sampler::InitGaussianOnManifold{1.0};
  auto chains = sampler::sample_parallel(ap.problem, theta1(0.3), cfg, &ap);
  auto sel = best_of_n(ap.problem, theta1(0.3), chains, &ap);
  REQUIRE(sel.dist_to_manifold.has_value());
  CHECK(*sel.dist_to_manifold < 0.1);
  CHECK(sel.value == *std::min_element(sel.all_values.begin(), sel.all_values.end()));
}
