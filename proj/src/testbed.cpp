#include "hgms/testbed.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>

namespace hgms::testbed {

namespace {

constexpr double kUnderflowGuard = 0.05;  // exp(-1/t^2) < 1e-170 below this

// Shared lower level g(theta, x) = (|x|^2 - (1 + theta^2))^2 for the
// circle / sphere family. theta is scalar (m = 1).
double family_g(double theta, const Vec& x) {
  double q = x.squaredNorm() - (1.0 + theta * theta);
  return q * q;
}

Vec family_grad_g(double theta, const Vec& x) {
  double q = x.squaredNorm() - (1.0 + theta * theta);
  return 4.0 * q * x;
}

Vec family_hvp(double theta, const Vec& x, const Vec& v) {
  double q = x.squaredNorm() - (1.0 + theta * theta);
  return 4.0 * q * v + 8.0 * x * x.dot(v);
}

Vec family_mixed(double theta, const Vec& x, const Vec& v) {
  Vec out(1);
  out[0] = -8.0 * theta * x.dot(v);
  return out;
}

double radius(double theta) { return std::sqrt(1.0 + theta * theta); }

// Integrand of phi; identical to smooth_eta on t >= 0.
double eta_pos(double s) {
  if (s < kUnderflowGuard) return 0.0;
  return std::exp(-1.0 / (s * s));
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// 7-point Gauss-Legendre on [a, b]; used for the sub-cell part of phi where
// the integrand is smooth and the interval is below the memo cell width.
double gauss7(const std::function<double(double)>& f, double a, double b) {
  static const std::array<double, 4> nodes = {0.0, 0.4058451513773972,
                                              0.7415311855993945, 0.9491079123427585};
  static const std::array<double, 4> weights = {0.4179591836734694, 0.3818300505051189,
                                                0.2797053914892766, 0.1294849661688697};
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = weights[0] * f(c);
  for (int i = 1; i < 4; ++i)
    acc += weights[i] * (f(c - h * nodes[i]) + f(c + h * nodes[i]));
  return acc * h;
}

// phi(t) = int_0^t eta(s) ds, even in t. Memoized prefix integrals on a
// fixed grid over [0, 4]; absolute quadrature tolerance 1e-13 per cell.
class PhiTable {
 public:
  PhiTable() : prefix_(kCells + 1, 0.0) {
    for (int i = 0; i < kCells; ++i) {
      double a = i * kCellW, b = (i + 1) * kCellW;
      prefix_[i + 1] = prefix_[i] + adaptive_simpson(eta_pos, a, b, 1e-13);
    }
  }

  double operator()(double t) const {
    double s = std::abs(t);
    if (s >= kHi) {
      return prefix_.back() + adaptive_simpson(eta_pos, kHi, s, 1e-13);
    }
    int i = static_cast<int>(s / kCellW);
    if (i >= kCells) i = kCells - 1;
    return prefix_[i] + gauss7(eta_pos, i * kCellW, s);
  }

 private:
  static constexpr int kCells = 4096;
  static constexpr double kHi = 4.0;
  static constexpr double kCellW = kHi / kCells;
  std::vector<double> prefix_;
};

const PhiTable& phi_table() {
  static const PhiTable table;
  return table;
}

double rho_barrier(double s) {  // exp(-1/s) for s > 0, else 0
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s);
}

double rho_barrier_prime(double s) {
  if (s <= 0.0) return 0.0;
  double inv = 1.0 / s;
  return std::exp(-inv) * inv * inv;
}

std::vector<double> reciprocal_grid_points(double lo, double hi) {
  // theta_k = 10 / (k pi) inside [lo, hi]; requires lo > 0 because the set
  // accumulates at 0.
  if (lo <= 0.0)
    fail(ErrorKind::InvalidConfig, "kink enumeration needs a positive window",
         {{"lo", fmt_value(lo)}});
  std::vector<double> out;
  int k_min = static_cast<int>(std::ceil(10.0 / (M_PI * hi) - 1e-12));
  int k_max = static_cast<int>(std::floor(10.0 / (M_PI * lo) + 1e-12));
  for (int k = k_max; k >= std::max(k_min, 1); --k) out.push_back(10.0 / (k * M_PI));
  return out;  // ascending in theta
}

}  // namespace

double kink_a(double theta) {
  if (std::abs(theta) < kUnderflowGuard) return 0.0;
  return std::exp(-1.0 / (theta * theta)) * std::sin(10.0 / theta);
}

double kink_a_prime(double theta) {
  if (std::abs(theta) < kUnderflowGuard) return 0.0;
  double t2 = theta * theta;
  double e = std::exp(-1.0 / t2);
  return e * ((2.0 / (t2 * theta)) * std::sin(10.0 / theta) -
              (10.0 / t2) * std::cos(10.0 / theta));
}

double smooth_eta(double t) {
  if (std::abs(t) < kUnderflowGuard) return 0.0;
  double e = std::exp(-1.0 / (t * t));
  return t > 0 ? e : -e;
}

double degenerate_t_star(double a) {
  if (a == 0.0) return 0.0;
  double mag = 1.0 / std::sqrt(std::log(1.0 / std::abs(a)));
  return a > 0 ? -mag : mag;
}

AnalyticProblem make_circle_kink() {
  AnalyticProblem ap;
  ap.name = "circle-kink";
  ap.intrinsic_dim = 1;

  const double theta_lo = 0.08, theta_hi = 0.36;
  ap.normal_gap = 8.0 * (1.0 + theta_lo * theta_lo);

  BilevelProblem p;
  p.dims = {1, 2};
  p.f = [](const Vec& th, const Vec& x) { return kink_a(th[0]) * x[0] + x[1] * x[1]; };
  p.grad_f_theta = [](const Vec& th, const Vec& x) {
    Vec out(1);
    out[0] = kink_a_prime(th[0]) * x[0];
    return out;
  };
  p.grad_f_x = [](const Vec& th, const Vec& x) {
    Vec out(2);
    out[0] = kink_a(th[0]);
    out[1] = 2.0 * x[1];
    return out;
  };
  p.g = [](const Vec& th, const Vec& x) { return family_g(th[0], x); };
  p.grad_g_x = [](const Vec& th, const Vec& x) { return family_grad_g(th[0], x); };
  p.hvp = [](const Vec& th, const Vec& x, const Vec& v) { return family_hvp(th[0], x, v); };
  p.mixed = [](const Vec& th, const Vec& x, const Vec& v) { return family_mixed(th[0], x, v); };
  p.feasible_set = FeasibleSet::box(theta_lo, theta_hi, 1);
  p.lip_f1 = 3.0;
  p.lip_g2 = 40.0;
  p.lip_g3 = 38.0;
  p.tube_rho = 0.5;
  ap.problem = std::move(p);

  ap.chart = [](const Vec& u, const Vec& th) {
    double r = radius(th[0]);
    Vec x(2);
    x[0] = r * std::cos(u[0]);
    x[1] = r * std::sin(u[0]);
    return x;
  };
  ap.chart_domain = {{-M_PI, M_PI}};
  ap.random_on_manifold = [ap_chart = ap.chart](const Vec& th, Rng& rng) {
    Vec u(1);
    u[0] = rng.uniform(-M_PI, M_PI);
    return ap_chart(u, th);
  };
  ap.x_star = [](const Vec& th) -> std::optional<Vec> {
    double a = kink_a(th[0]);
    if (a == 0.0) return std::nullopt;  // selection ties at both poles
    Vec x(2);
    x[0] = (a > 0 ? -1.0 : 1.0) * radius(th[0]);
    x[1] = 0.0;
    return x;
  };
  ap.F_exact = [](const Vec& th) { return -radius(th[0]) * std::abs(kink_a(th[0])); };
  ap.gradF_exact = [](const Vec& th) -> std::optional<Vec> {
    double a = kink_a(th[0]);
    if (a == 0.0) return std::nullopt;
    double t = th[0], r = radius(t);
    double sign_a = a > 0 ? 1.0 : -1.0;
    Vec out(1);
    out[0] = -(t / r) * std::abs(a) - r * sign_a * kink_a_prime(t);
    return out;
  };
  ap.dist_to_manifold = [](const Vec& th, const Vec& x) {
    return std::abs(x.norm() - radius(th[0]));
  };
  ap.kinks_in = reciprocal_grid_points;
  ap.holder_failure_in = [](double, double) { return std::vector<double>{}; };
  return ap;
}

AnalyticProblem make_degenerate_circle(double b) {
  if (!(b > 0.0))
    fail(ErrorKind::InvalidConfig, "degenerate-circle requires b > 0", {{"b", fmt_value(b)}});
  AnalyticProblem ap;
  ap.name = "degenerate-circle";
  ap.intrinsic_dim = 1;

  const double theta_lo = 0.08, theta_hi = 0.36;
  ap.normal_gap = 8.0 * (1.0 + theta_lo * theta_lo);

  auto a_of = [](double th) { return 0.25 * kink_a(th); };
  auto a_prime_of = [](double th) { return 0.25 * kink_a_prime(th); };

  BilevelProblem p;
  p.dims = {1, 2};
  p.f = [a_of, b](const Vec& th, const Vec& x) {
    double c = 1.0 + th[0] * th[0];
    return phi_table()(x[1]) + a_of(th[0]) * x[1] + rho_barrier(-x[0]) +
           b * (x.squaredNorm() - c);
  };
  p.grad_f_theta = [a_prime_of, b](const Vec& th, const Vec& x) {
    Vec out(1);
    out[0] = a_prime_of(th[0]) * x[1] - 2.0 * b * th[0];
    return out;
  };
  p.grad_f_x = [a_of, b](const Vec& th, const Vec& x) {
    Vec out(2);
    out[0] = -rho_barrier_prime(-x[0]) + 2.0 * b * x[0];
    out[1] = smooth_eta(x[1]) + a_of(th[0]) + 2.0 * b * x[1];
    return out;
  };
  p.g = [](const Vec& th, const Vec& x) { return family_g(th[0], x); };
  p.grad_g_x = [](const Vec& th, const Vec& x) { return family_grad_g(th[0], x); };
  p.hvp = [](const Vec& th, const Vec& x, const Vec& v) { return family_hvp(th[0], x, v); };
  p.mixed = [](const Vec& th, const Vec& x, const Vec& v) { return family_mixed(th[0], x, v); };
  p.feasible_set = FeasibleSet::box(theta_lo, theta_hi, 1);
  p.lip_f1 = 6.0;
  p.lip_g2 = 40.0;
  p.lip_g3 = 38.0;
  p.tube_rho = 0.5;
  ap.problem = std::move(p);

  ap.chart = [](const Vec& u, const Vec& th) {
    double r = radius(th[0]);
    Vec x(2);
    x[0] = r * std::cos(u[0]);
    x[1] = r * std::sin(u[0]);
    return x;
  };
  ap.chart_domain = {{-M_PI, M_PI}};
  ap.random_on_manifold = [chart = ap.chart](const Vec& th, Rng& rng) {
    Vec u(1);
    u[0] = rng.uniform(-M_PI, M_PI);
    return chart(u, th);
  };
  ap.x_star = [a_of](const Vec& th) -> std::optional<Vec> {
    double r = radius(th[0]);
    double t = degenerate_t_star(a_of(th[0]));
    Vec x(2);
    x[0] = std::sqrt(r * r - t * t);
    x[1] = t;
    return x;
  };
  ap.F_exact = [a_of](const Vec& th) {
    double a = a_of(th[0]);
    double t = degenerate_t_star(a);
    return phi_table()(t) + a * t;
  };
  ap.gradF_exact = [a_of, a_prime_of](const Vec& th) -> std::optional<Vec> {
    Vec out(1);
    out[0] = a_prime_of(th[0]) * degenerate_t_star(a_of(th[0]));
    return out;
  };
  ap.dist_to_manifold = [](const Vec& th, const Vec& x) {
    return std::abs(x.norm() - radius(th[0]));
  };
  ap.kinks_in = [](double, double) { return std::vector<double>{}; };  // F is C^1
  ap.holder_failure_in = reciprocal_grid_points;
  return ap;
}

AnalyticProblem make_sphere(int d) {
  if (d < 3)
    fail(ErrorKind::InvalidConfig, "sphere testbed requires d >= 3", {{"d", fmt_value(d)}});
  AnalyticProblem ap;
  ap.name = "sphere-d" + std::to_string(d);
  ap.intrinsic_dim = d - 1;
  ap.normal_gap = 8.0;  // min_theta 8 r(theta)^2 over Box[-2, 2]

  BilevelProblem p;
  p.dims = {1, d};
  p.f = [](const Vec&, const Vec& x) { return x[0]; };
  p.grad_f_theta = [](const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  p.grad_f_x = [d](const Vec&, const Vec&) {
    Vec e = Vec::Zero(d);
    e[0] = 1.0;
    return e;
  };
  p.g = [](const Vec& th, const Vec& x) { return family_g(th[0], x); };
  p.grad_g_x = [](const Vec& th, const Vec& x) { return family_grad_g(th[0], x); };
  p.hvp = [](const Vec& th, const Vec& x, const Vec& v) { return family_hvp(th[0], x, v); };
  p.mixed = [](const Vec& th, const Vec& x, const Vec& v) { return family_mixed(th[0], x, v); };
  p.feasible_set = FeasibleSet::box(-2.0, 2.0, 1);
  p.lip_f1 = 1.0;
  p.lip_g2 = 80.0;
  p.lip_g3 = 66.0;
  p.tube_rho = 0.5;
  ap.problem = std::move(p);

  // Generalized spherical coordinates: u_1..u_{d-2} in [0, pi],
  // u_{d-1} in [-pi, pi].
  ap.chart = [d](const Vec& u, const Vec& th) {
    double r = radius(th[0]);
    Vec x(d);
    double sin_prod = 1.0;
    for (int j = 0; j < d - 1; ++j) {
      x[j] = r * sin_prod * std::cos(u[j]);
      sin_prod *= std::sin(u[j]);
    }
    x[d - 1] = r * sin_prod;
    return x;
  };
  ap.chart_domain.assign(d - 2, {0.0, M_PI});
  ap.chart_domain.push_back({-M_PI, M_PI});
  ap.random_on_manifold = [d](const Vec& th, Rng& rng) {
    Vec g(d);
    double n2 = 0.0;
    do {
      for (int i = 0; i < d; ++i) g[i] = rng.normal();
      n2 = g.norm();
    } while (n2 < 1e-12);
    return (radius(th[0]) / n2 * g).eval();
  };
  ap.x_star = [d](const Vec& th) -> std::optional<Vec> {
    Vec x = Vec::Zero(d);
    x[0] = -radius(th[0]);
    return x;
  };
  ap.F_exact = [](const Vec& th) { return -radius(th[0]); };
  ap.gradF_exact = [](const Vec& th) -> std::optional<Vec> {
    Vec out(1);
    out[0] = -th[0] / radius(th[0]);
    return out;
  };
  ap.dist_to_manifold = [](const Vec& th, const Vec& x) {
    return std::abs(x.norm() - radius(th[0]));
  };
  ap.kinks_in = [](double, double) { return std::vector<double>{}; };
  ap.holder_failure_in = [](double, double) { return std::vector<double>{}; };
  return ap;
}

AnalyticProblem make_singleton(const Mat& A) {
  if (!A.allFinite())
    fail(ErrorKind::NonFinite, "singleton matrix A has non-finite entries", {});
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());

  AnalyticProblem ap;
  ap.name = "singleton";
  ap.intrinsic_dim = 0;
  ap.normal_gap = 1.0;

  BilevelProblem p;
  p.dims = {m, d};
  p.f = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  p.grad_f_theta = [m](const Vec&, const Vec&) { return Vec::Zero(m).eval(); };
  p.grad_f_x = [](const Vec&, const Vec& x) { return x; };
  p.g = [A](const Vec& th, const Vec& x) { return 0.5 * (x - A.transpose() * th).squaredNorm(); };
  p.grad_g_x = [A](const Vec& th, const Vec& x) { return (x - A.transpose() * th).eval(); };
  p.hvp = [](const Vec&, const Vec&, const Vec& v) { return v; };
  p.mixed = [A](const Vec&, const Vec&, const Vec& v) { return (-A * v).eval(); };
  p.feasible_set = FeasibleSet::box(-2.0, 2.0, m);
  p.hessian_positive_definite = true;
  p.lip_g2 = 1.0;
  p.lip_g3 = 0.0;
  p.tube_rho = 1e9;
  ap.problem = std::move(p);

  ap.chart = [A](const Vec&, const Vec& th) { return (A.transpose() * th).eval(); };
  ap.chart_domain = {};
  ap.random_on_manifold = [A](const Vec& th, Rng&) { return (A.transpose() * th).eval(); };
  ap.x_star = [A](const Vec& th) -> std::optional<Vec> { return (A.transpose() * th).eval(); };
  ap.F_exact = [A](const Vec& th) { return 0.5 * (A.transpose() * th).squaredNorm(); };
  ap.gradF_exact = [A](const Vec& th) -> std::optional<Vec> {
    return (A * (A.transpose() * th)).eval();
  };
  ap.dist_to_manifold = [A](const Vec& th, const Vec& x) {
    return (x - A.transpose() * th).norm();
  };
  ap.kinks_in = [](double, double) { return std::vector<double>{}; };
  ap.holder_failure_in = [](double, double) { return std::vector<double>{}; };
  return ap;
}

AnalyticProblem make_singleton() {
  Mat A(2, 2);
  A << 2, 0, 0, 1;
  return make_singleton(A);
}

AnalyticProblem make_by_name(const std::string& name) {
  if (name == "circle-kink") return make_circle_kink();
  if (name == "degenerate-circle") return make_degenerate_circle();
  if (name == "singleton") return make_singleton();
  if (name.rfind("sphere-d", 0) == 0) {
    int d = 0;
    try {
      d = std::stoi(name.substr(8));
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidConfig, "bad sphere dimension suffix", {{"name", name}});
    }
    return make_sphere(d);
  }
  fail(ErrorKind::InvalidConfig, "unknown problem name", {{"name", name}});
}

std::vector<std::string> catalog_names() {
  return {"circle-kink", "degenerate-circle", "sphere-d3", "sphere-d4", "singleton"};
}

ManifoldEigenReport hessian_on_manifold(const AnalyticProblem& ap, const Vec& theta,
                                        const Vec& u) {
  const int d = ap.problem.dims.d;
  Vec x = ap.chart(u, theta);
  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    H.col(j) = ap.problem.hvp(theta, x, e);
  }
  H = 0.5 * (H + H.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> solver(H);

  ManifoldEigenReport report;
  report.eigenvalues = solver.eigenvalues();
  report.eigenvectors = solver.eigenvectors();
  report.gap_threshold = 0.5 * ap.normal_gap;
  for (int i = 0; i < d; ++i)
    if (report.eigenvalues[i] < report.gap_threshold) ++report.near_zero_count;
  return report;
}

}  // namespace hgms::testbed
