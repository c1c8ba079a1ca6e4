#include <doctest.h>

#include <cmath>

#include "hgms/rng.hpp"
#include "hgms/testbed.hpp"

using namespace hgms;
using namespace hgms::testbed;

namespace {

Vec theta1(double t) {
  Vec v(1);
  v[0] = t;
  return v;
}

}  // namespace

TEST_CASE("circle-kink basics") {
  auto ap = make_circle_kink();
  CHECK(ap.intrinsic_dim == 1);
  CHECK(ap.problem.dims.m == 1);
  CHECK(ap.problem.dims.d == 2);

  // theta = 0: r = 1, a = 0 (underflow guard), F = 0, selection ties.
  CHECK(ap.F_exact(theta1(0.0)) == 0.0);
  CHECK(!ap.x_star(theta1(0.0)).has_value());
  CHECK(!ap.gradF_exact(theta1(0.0)).has_value());

  // kink location for k = 3
  auto kinks = ap.kinks_in(1.0, 1.1);
  REQUIRE(kinks.size() == 1);
  CHECK(kinks[0] == doctest::Approx(10.0 / (3.0 * M_PI)).epsilon(1e-15));
  CHECK(kinks[0] == doctest::Approx(1.06103).epsilon(1e-5));

  // theta = 0.3: a > 0, optimistic minimizer at the negative pole.
  double a = kink_a(0.3);
  CHECK(a > 0.0);
  auto xs = ap.x_star(theta1(0.3));
  REQUIRE(xs.has_value());
  CHECK((*xs)[0] == doctest::Approx(-std::sqrt(1.09)).epsilon(1e-14));
  CHECK((*xs)[1] == 0.0);
}

TEST_CASE("circle-kink F agrees with a dense angular scan") {
  auto ap = make_circle_kink();
  Vec theta = theta1(0.3);
  double r = std::sqrt(1.09);
  double best = std::numeric_limits<double>::infinity();
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double u = -M_PI + 2.0 * M_PI * i / double(n);
    Vec x(2);
    x << r * std::cos(u), r * std::sin(u);
    best = std::min(best, ap.problem.f(theta, x));
  }
  CHECK(std::abs(best - ap.F_exact(theta)) < 1e-8);
  CHECK(ap.F_exact(theta) == doctest::Approx(-r * std::abs(kink_a(0.3))).epsilon(1e-14));
}

TEST_CASE("underflow guard zeroes a and eta near the origin") {
  CHECK(kink_a(0.04) == 0.0);
  CHECK(kink_a(-0.04) == 0.0);
  CHECK(kink_a_prime(0.03) == 0.0);
  CHECK(smooth_eta(0.049) == 0.0);
  CHECK(smooth_eta(-0.02) == 0.0);
  CHECK(kink_a(0.06) != 0.0);
}

TEST_CASE("degenerate-circle scalar critical point") {
  auto ap = make_degenerate_circle();

  // At an exact root of a the formulas collapse to zero.
  CHECK(degenerate_t_star(0.0) == 0.0);
  double a5 = 0.25 * kink_a(0.5);
  double t5 = degenerate_t_star(a5);

  // Bisection oracle on eta(t) + a = 0 (eta strictly increasing).
  double lo = -0.9, hi = 0.0;  // a(0.5) > 0, so the root is negative
  REQUIRE(smooth_eta(lo) + a5 < 0.0);
  REQUIRE(smooth_eta(hi) + a5 > 0.0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (smooth_eta(mid) + a5 < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  CHECK(std::abs(t5 - 0.5 * (lo + hi)) < 1e-10);

  // Feasibility of the critical point: |t*| <= (log 4)^{-1/2} < 1 <= r.
  const double bound = 1.0 / std::sqrt(std::log(4.0));
  for (double th = 0.08; th <= 0.36; th += 0.001) {
    double t = degenerate_t_star(0.25 * kink_a(th));
    CHECK(std::abs(t) <= bound + 1e-15);
  }

  // Unique minimizer and C^1 hyper-objective everywhere in the window.
  for (double th : {0.1, 0.2, 0.3, 0.35}) {
    CHECK(ap.x_star(theta1(th)).has_value());
    CHECK(ap.gradF_exact(theta1(th)).has_value());
  }

  // F' = a' t*: check the value at theta = 0.5 against the envelope pieces.
  double expect = 0.25 * kink_a_prime(0.5) * t5;
  CHECK((*ap.gradF_exact(theta1(0.5)))[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("degenerate-circle phi integral is consistent") {
  auto ap = make_degenerate_circle();
  Vec theta = theta1(0.3);
  double a = 0.25 * kink_a(0.3);
  double b = 1.0;
  double c = 1.09;

  // Recover phi(t) from f and compare against a test-local Simpson rule.
  auto phi_from_f = [&](double t) {
    Vec x(2);
    x << 1.0, t;  // x1 > 0 keeps the barrier off
    return ap.problem.f(theta, x) - a * t - b * (x.squaredNorm() - c);
  };
  auto integrand = [](double s) { return s < 0.05 ? 0.0 : std::exp(-1.0 / (s * s)); };
  for (double t : {0.3, 0.6, 1.1}) {
    const int n = 200000;
    double acc = 0.0;  // composite Simpson
    double h = t / n;
    for (int i = 0; i < n; i += 2)
      acc += h / 3.0 * (integrand(i * h) + 4.0 * integrand((i + 1) * h) +
                        integrand((i + 2) * h));
    CHECK(std::abs(phi_from_f(t) - acc) < 1e-9);
    CHECK(std::abs(phi_from_f(-t) - acc) < 1e-9);  // phi is even
  }
  CHECK(phi_from_f(0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("sphere problem") {
  CHECK_THROWS_AS(make_sphere(2), ToolException);

  auto s3 = make_sphere(3);
  auto xs = s3.x_star(theta1(0.0));
  REQUIRE(xs.has_value());
  CHECK((*xs - (Vec(3) << -1, 0, 0).finished()).norm() == 0.0);
  CHECK(s3.F_exact(theta1(0.0)) == -1.0);
  CHECK((*s3.gradF_exact(theta1(1.0)))[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));

  auto s4 = make_sphere(4);
  CHECK(s4.intrinsic_dim == 3);
  CHECK(s4.F_exact(theta1(0.5)) == doctest::Approx(-std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("singleton problem") {
  Mat id = Mat::Identity(2, 2);
  auto ap = make_singleton(id);
  Vec t(2);
  t << 1, 0;
  CHECK(((*ap.gradF_exact(t)) - t).norm() == 0.0);
  t << 0, 0;
  CHECK((*ap.gradF_exact(t)).norm() == 0.0);

  auto def = make_singleton();  // A = [[2,0],[0,1]]
  t << 1, 1;
  Vec expect(2);
  expect << 4, 1;
  CHECK(((*def.gradF_exact(t)) - expect).norm() == 0.0);
  CHECK(def.intrinsic_dim == 0);
}

TEST_CASE("catalog round trip") {
  for (const auto& name : catalog_names()) CHECK(make_by_name(name).name == name);
  CHECK_THROWS_AS(make_by_name("nope"), ToolException);
  CHECK_THROWS_AS(make_by_name("sphere-dx"), ToolException);
}

TEST_CASE("manifold membership and stationarity") {
  for (const auto& name : catalog_names()) {
    auto ap = make_by_name(name);
    Rng rng(2024);
    const int m = ap.problem.dims.m;
    for (int rep = 0; rep < 1000; ++rep) {
      Vec theta(m);
      for (int i = 0; i < m; ++i) theta[i] = rng.uniform(0.1, 0.35);
      Vec u(ap.intrinsic_dim);
      for (int i = 0; i < ap.intrinsic_dim; ++i)
        u[i] = rng.uniform(ap.chart_domain[i].first, ap.chart_domain[i].second);
      Vec x = ap.chart(u, theta);
      INFO("problem ", name);
      CHECK(ap.problem.g(theta, x) < 1e-10);
      CHECK(ap.problem.grad_g_x(theta, x).norm() < 1e-8);
      CHECK(ap.dist_to_manifold(theta, x) < 1e-9);
    }
  }
}

TEST_CASE("optimistic optimality against on-manifold competitors") {
  for (const auto& name : catalog_names()) {
    auto ap = make_by_name(name);
    Rng rng(77);
    Vec theta = Vec::Constant(ap.problem.dims.m, 0.3);
    auto xs = ap.x_star(theta);
    if (!xs) continue;
    double fstar = ap.problem.f(theta, *xs);
    for (int rep = 0; rep < 1000; ++rep) {
      Vec y = ap.random_on_manifold(theta, rng);
      INFO("problem ", name);
      CHECK(fstar <= ap.problem.f(theta, y) + 1e-12);
    }
  }
}

TEST_CASE("hessian on the manifold: kernel dimension and normal gap") {
  auto circle = make_circle_kink();
  Vec u0(1);
  u0 << 0.0;  // chart angle 0 -> (r, 0) = (sqrt(2), 0) at theta = 1
  auto rep = hessian_on_manifold(circle, theta1(1.0), u0);
  REQUIRE(rep.eigenvalues.size() == 2);
  CHECK(std::abs(rep.eigenvalues[0]) < 1e-9);
  CHECK(rep.eigenvalues[1] == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(rep.near_zero_count == 1);

  auto sphere = make_sphere(3);
  Vec u2(2);
  u2 << 0.0, 0.0;  // -> (1, 0, 0) at theta = 0
  auto rep3 = hessian_on_manifold(sphere, theta1(0.0), u2);
  CHECK(std::abs(rep3.eigenvalues[0]) < 1e-9);
  CHECK(std::abs(rep3.eigenvalues[1]) < 1e-9);
  CHECK(rep3.eigenvalues[2] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(rep3.near_zero_count == 2);

  auto single = make_singleton();
  Vec u_empty(0);
  Vec t2 = Vec::Constant(2, 0.7);
  auto rep0 = hessian_on_manifold(single, t2, u_empty);
  CHECK(rep0.near_zero_count == 0);
  CHECK(rep0.eigenvalues.minCoeff() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normal gap holds on sampled manifold points") {
  for (const auto& name : {"circle-kink", "sphere-d3", "singleton"}) {
    auto ap = make_by_name(name);
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      Vec theta = Vec::Constant(ap.problem.dims.m, rng.uniform(0.1, 0.35));
      Vec u(ap.intrinsic_dim);
      for (int i = 0; i < ap.intrinsic_dim; ++i)
        u[i] = rng.uniform(ap.chart_domain[i].first, ap.chart_domain[i].second);
      auto er = hessian_on_manifold(ap, theta, u);
      INFO("problem ", name);
      CHECK(er.near_zero_count == ap.intrinsic_dim);
      // smallest nonzero eigenvalue sits above the declared gap
      CHECK(er.eigenvalues[er.near_zero_count] >= ap.normal_gap - 1e-9);
    }
  }
}

TEST_CASE("kink certification at theta_k for |k| in 3..8") {
  auto ap = make_circle_kink();
  const double h = 1e-5;
  for (int k = 3; k <= 8; ++k) {
    for (int sign : {1, -1}) {
      double tk = sign * 10.0 / (k * M_PI);
      double f0 = ap.F_exact(theta1(tk));
      double dplus = (ap.F_exact(theta1(tk + h)) - f0) / h;
      double dminus = (f0 - ap.F_exact(theta1(tk - h))) / h;
      INFO("k = ", sign * k);
      CHECK(dplus * dminus < 0.0);
      CHECK(std::abs(dplus + dminus) / std::max(std::abs(dplus), std::abs(dminus)) < 0.05);
    }
  }
}
