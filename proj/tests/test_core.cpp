#include <doctest.h>

#include "hgms/oracle.hpp"
#include "hgms/problem.hpp"
#include "hgms/rng.hpp"
#include "hgms/testbed.hpp"

using namespace hgms;

TEST_CASE("feasible set construction and membership") {
  auto box = FeasibleSet::box(-1.0, 1.0, 2);
  Vec in(2), out(2);
  in << 0.5, -0.5;
  out << 2.0, 0.0;
  CHECK(box.contains(in));
  CHECK(!box.contains(out));

  auto simplex = FeasibleSet::simplex(3);
  Vec s(3);
  s << 0.2, 0.3, 0.5;
  CHECK(simplex.contains(s));
  s << 0.5, 0.5, 0.5;
  CHECK(!simplex.contains(s));

  CHECK_THROWS_AS(FeasibleSet::box(Vec::Ones(2), Vec::Zero(2)), ToolException);
  CHECK_THROWS_AS(FeasibleSet::simplex(0), ToolException);
}

TEST_CASE("tool errors carry context") {
  try {
    fail(ErrorKind::NonFinite, "x blew up", {{"x", fmt_value(1.5)}});
    CHECK(false);
  } catch (const ToolException& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
    REQUIRE(e.error().context.size() == 1);
    CHECK(e.error().context[0].first == "x");
    CHECK(std::string(e.what()).find("NonFinite") != std::string::npos);
  }
}

TEST_CASE("validate_problem on the singleton: exact quadratic Hessian is symmetric") {
  auto ap = testbed::make_singleton();
  auto report = validate_problem(ap.problem, 10, 42);
  CHECK(report.max_symmetry_residual < 1e-12);
  CHECK(report.max_hvp_linearity_residual < 1e-12);
  CHECK(report.max_mixed_linearity_residual < 1e-12);
}

TEST_CASE("validate_problem on the circle problem") {
  auto ap = testbed::make_circle_kink();
  auto report = validate_problem(ap.problem, 10, 7);
  CHECK(report.max_symmetry_residual < 1e-10);
}

TEST_CASE("hvp symmetry within 1e-8 over 100 probes on every shipped problem") {
  for (const auto& name : testbed::catalog_names()) {
    auto ap = testbed::make_by_name(name);
    auto report = validate_problem(ap.problem, 100, 123);
    INFO("problem ", name);
    CHECK(report.max_symmetry_residual < 1e-8);
  }
}

TEST_CASE("a broken hvp is caught by the finite-difference cross-check") {
  auto ap = testbed::make_circle_kink();
  BilevelProblem broken = ap.problem;
  // Drop the rank-one term's factor 8: symmetric, but not the Hessian of g.
  broken.hvp = [](const Vec& th, const Vec& x, const Vec& v) {
    double q = x.squaredNorm() - (1.0 + th[0] * th[0]);
    return (4.0 * q * v + x * x.dot(v)).eval();
  };
  Vec theta(1), x(2);
  theta << 0.3;
  x << 1.0, 0.4;
  CHECK_NOTHROW(oracle::check_hvp_against_fd(ap.problem, theta, x, 5, 99));
  CHECK_THROWS_AS(oracle::check_hvp_against_fd(broken, theta, x, 5, 99), ToolException);
  try {
    oracle::check_hvp_against_fd(broken, theta, x, 5, 99);
  } catch (const ToolException& e) {
    CHECK(e.kind() == ErrorKind::OracleDisagreement);
  }
}

TEST_CASE("mixed action matches the g-only cross difference oracle") {
  for (const auto& name : {"circle-kink", "sphere-d3", "singleton"}) {
    auto ap = testbed::make_by_name(name);
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
      Vec theta(ap.problem.dims.m), x(ap.problem.dims.d), v(ap.problem.dims.d);
      for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(0.1, 0.4);
      for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
      Vec exact = ap.problem.mixed(theta, x, v);
      Vec fd = oracle::fd_mixed(ap.problem, theta, x, v);
      INFO("problem ", name);
      CHECK((exact - fd).norm() <= 1e-5 * std::max(1.0, exact.norm()));
    }
  }
}

TEST_CASE("pure evaluators are deterministic") {
  auto ap = testbed::make_degenerate_circle();
  Vec theta(1), x(2);
  theta << 0.22;
  x << 0.7, -0.61;
  double f1 = ap.problem.f(theta, x);
  double f2 = ap.problem.f(theta, x);
  CHECK(f1 == f2);
  Vec g1 = ap.problem.grad_f_x(theta, x);
  Vec g2 = ap.problem.grad_f_x(theta, x);
  CHECK((g1 - g2).norm() == 0.0);
}

TEST_CASE("validate_problem rejects non-positive probe counts") {
  auto ap = testbed::make_singleton();
  CHECK_THROWS_AS(validate_problem(ap.problem, 0, 1), ToolException);
}

TEST_CASE("substream derivation is stable and avalanching") {
  CHECK(substream_seed(1, 2, 3) == substream_seed(1, 2, 3));
  CHECK(substream_seed(1, 2, 3) != substream_seed(1, 3, 2));
  CHECK(substream_seed(1, 2, 3) != substream_seed(2, 2, 3));
  // Box-Muller stream reproducibility
  Rng a(substream_seed(9, 0));
  Rng b(substream_seed(9, 0));
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}
