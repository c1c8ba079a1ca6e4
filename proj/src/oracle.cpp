#include "hgms/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hgms/rng.hpp"

namespace hgms::oracle {

namespace {

// Golden-section minimization of a 1-D function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

// Ternary search for the extremum of F on [lo, hi]; maximize switches sense.
double ternary_extremum(const std::function<double(double)>& F, double lo, double hi,
                        bool maximize) {
  double a = lo, b = hi;
  for (int i = 0; i < 240 && b - a > 1e-16 * std::max(1.0, std::abs(a)); ++i) {
    double m1 = a + (b - a) / 3.0;
    double m2 = b - (b - a) / 3.0;
    double f1 = F(m1), f2 = F(m2);
    bool move_left = maximize ? (f1 < f2) : (f1 > f2);
    if (move_left)
      a = m1;
    else
      b = m2;
  }
  return 0.5 * (a + b);
}

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (auto& x : v) x = std::abs(x);
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

int default_points_per_axis(int k) {
  switch (k) {
    case 1: return 100000;
    case 2: return 1000;
    case 3: return 100;
    default: return 0;
  }
}

}  // namespace

DenseMinResult dense_F(const AnalyticProblem& ap, const Vec& theta, int points_per_axis) {
  const int k = ap.intrinsic_dim;
  if (k == 0) {
    Vec u(0);
    Vec x = ap.chart(u, theta);
    return {ap.problem.f(theta, x), u};
  }
  if (k >= 4)
    fail(ErrorKind::InvalidConfig, "dense chart scan refused for intrinsic dimension >= 4",
         {{"k", fmt_value(k)}});
  if (points_per_axis <= 0) points_per_axis = default_points_per_axis(k);
  if (points_per_axis < 2)
    fail(ErrorKind::InvalidConfig, "need at least 2 grid points per axis",
         {{"points", fmt_value(points_per_axis)}});

  const auto& dom = ap.chart_domain;
  auto eval = [&](const Vec& u) { return ap.problem.f(theta, ap.chart(u, theta)); };

  // Tensor scan with an odometer over k axes, endpoints included. Keep a
  // few well-separated leaders, not just the single best cell: near-tied
  // competing minima can differ by less than the grid's own resolution, and
  // only the polish below can rank them.
  struct Candidate {
    double value;
    Vec u;
    std::vector<int> idx;
  };
  constexpr int kLeaders = 8;
  constexpr int kSeparationCells = 5;
  std::vector<Candidate> leaders;
  auto offer = [&](double v, const Vec& u, const std::vector<int>& idx) {
    for (auto& c : leaders) {
      bool near = true;
      for (int a = 0; a < k; ++a)
        if (std::abs(c.idx[a] - idx[a]) > kSeparationCells) near = false;
      if (near) {
        if (v < c.value) c = {v, u, idx};
        return;
      }
    }
    if (int(leaders.size()) < kLeaders) {
      leaders.push_back({v, u, idx});
      return;
    }
    auto worst = std::max_element(leaders.begin(), leaders.end(),
                                  [](const auto& a, const auto& b) { return a.value < b.value; });
    if (v < worst->value) *worst = {v, u, idx};
  };

  std::vector<int> idx(k, 0);
  Vec u(k);
  const int n = points_per_axis;
  while (true) {
    for (int a = 0; a < k; ++a)
      u[a] = dom[a].first + (dom[a].second - dom[a].first) * idx[a] / double(n - 1);
    offer(eval(u), u, idx);
    int a = 0;
    for (; a < k; ++a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
    if (a == k) break;
  }

  // Local polish of every leader: per-axis golden sections on shrinking
  // brackets; the best polished value wins.
  double best = std::numeric_limits<double>::infinity();
  Vec best_u(k);
  for (const auto& cand : leaders) {
    Vec cur = cand.u;
    Vec w(k);
    for (int a = 0; a < k; ++a) w[a] = (dom[a].second - dom[a].first) / double(n - 1);
    for (int round = 0; round < 20; ++round) {
      for (int a = 0; a < k; ++a) {
        double lo = std::max(dom[a].first, cur[a] - w[a]);
        double hi = std::min(dom[a].second, cur[a] + w[a]);
        cur[a] = golden_min(
            [&](double t) {
              Vec uu = cur;
              uu[a] = t;
              return eval(uu);
            },
            lo, hi, 48);
        w[a] *= 0.5;
      }
    }
    double polished = eval(cur);
    double raw = std::min(polished, cand.value);
    if (raw < best) {
      best = raw;
      best_u = polished <= cand.value ? cur : cand.u;
    }
  }
  return {best, best_u};
}

Vec fd_gradF(const AnalyticProblem& ap, const Vec& theta, double step, double tol) {
  const int m = static_cast<int>(theta.size());
  Vec out(m);
  for (int i = 0; i < m; ++i) {
    auto quotient = [&](double h) {
      Vec tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      double actual = 0.5 * (tp[i] - tm[i]);  // kill rounding in the step
      return (dense_F(ap, tp).value - dense_F(ap, tm).value) / (2.0 * actual);
    };
    double d1 = quotient(step);
    double d2 = quotient(0.5 * step);
    if (std::abs(d1 - d2) > 10.0 * tol * std::max(1.0, std::abs(d2)))
      fail(ErrorKind::OracleDisagreement,
           "finite-difference quotients disagree under step halving",
           {{"coordinate", fmt_value(i)},
            {"theta_i", fmt_value(theta[i])},
            {"quotient_h", fmt_value(d1)},
            {"quotient_h2", fmt_value(d2)}});
    out[i] = (4.0 * d2 - d1) / 3.0;
  }
  return out;
}

Mat dense_hessian(const BilevelProblem& p, const Vec& theta, const Vec& x, double step) {
  const int d = p.dims.d;
  if (d > 64)
    fail(ErrorKind::InvalidConfig, "dense Hessian refused for d > 64", {{"d", fmt_value(d)}});
  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    double actual = 0.5 * (xp[j] - xm[j]);
    H.col(j) = (p.grad_g_x(theta, xp) - p.grad_g_x(theta, xm)) / (2.0 * actual);
  }
  return 0.5 * (H + H.transpose());
}

void check_hvp_against_fd(const BilevelProblem& p, const Vec& theta, const Vec& x,
                          int probes, std::uint64_t seed, double tol) {
  const int d = p.dims.d;
  Rng rng(mix64(seed));
  const double h = 1e-4;
  for (int it = 0; it < probes; ++it) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.uniform(-1.0, 1.0);
    Vec fd = (p.grad_g_x(theta, (x + h * v).eval()) - p.grad_g_x(theta, (x - h * v).eval())) /
             (2.0 * h);
    Vec hv = p.hvp(theta, x, v);
    double err = (fd - hv).norm();
    if (err > tol * std::max(1.0, hv.norm()))
      fail(ErrorKind::OracleDisagreement, "hvp disagrees with finite-difference Hessian action",
           {{"probe", fmt_value(it)}, {"residual", fmt_value(err)}});
  }
}

Vec fd_mixed(const BilevelProblem& p, const Vec& theta, const Vec& x, const Vec& v,
             double step) {
  const int m = p.dims.m;
  Vec out(m);
  const double t = step;
  for (int j = 0; j < m; ++j) {
    Vec tp = theta, tm = theta;
    tp[j] += step;
    tm[j] -= step;
    double h = 0.5 * (tp[j] - tm[j]);
    double val = p.g(tp, (x + t * v).eval()) - p.g(tp, (x - t * v).eval()) -
                 p.g(tm, (x + t * v).eval()) + p.g(tm, (x - t * v).eval());
    out[j] = val / (4.0 * h * t);
  }
  return out;
}

KinkReport kink_probe(const AnalyticProblem& ap, const GridSpec& grid, double threshold,
                      double floor_rel) {
  if (!(grid.lo < grid.hi) || grid.points < 16)
    fail(ErrorKind::InvalidConfig, "bad kink probe grid",
         {{"lo", fmt_value(grid.lo)}, {"hi", fmt_value(grid.hi)},
          {"points", fmt_value(grid.points)}});
  if (ap.problem.dims.m != 1)
    fail(ErrorKind::InvalidConfig, "kink probe needs a scalar upper-level variable",
         {{"m", fmt_value(ap.problem.dims.m)}});

  const int n = grid.points;
  const double delta = (grid.hi - grid.lo) / double(n - 1);
  auto F1 = [&](double t) {
    Vec th(1);
    th[0] = t;
    return ap.F_exact(th);
  };

  KinkReport report;
  report.threshold = threshold;
  report.floor_rel = floor_rel;
  report.grid.resize(n);
  report.F.resize(n);
  for (int i = 0; i < n; ++i) {
    report.grid[i] = grid.lo + delta * i;
    report.F[i] = F1(report.grid[i]);
  }

  std::vector<double> cell_q(n - 1);  // per-cell difference quotients
  for (int i = 0; i + 1 < n; ++i) cell_q[i] = (report.F[i + 1] - report.F[i]) / delta;
  report.d_minus.assign(n, 0.0);
  report.d_plus.assign(n, 0.0);
  for (int i = 1; i + 1 < n; ++i) {
    report.d_minus[i] = cell_q[i - 1];
    report.d_plus[i] = cell_q[i];
  }

  const int window = 25;
  auto local_scale = [&](int i) {
    int lo = std::max(0, i - window);
    int hi = std::min(n - 2, i + window);
    return median_abs({cell_q.begin() + lo, cell_q.begin() + hi + 1});
  };

  double prev_flag_theta = -std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < n; ++i) {
    double dm = report.d_minus[i], dp = report.d_plus[i];
    if (!(dm * dp < 0.0)) continue;  // quotients must straddle a stationary point
    double floor_i = std::max(floor_rel * local_scale(i), 1e-280);
    if (std::abs(dp - dm) <= threshold * std::max({std::abs(dp), std::abs(dm), floor_i}))
      continue;

    // Locate the stationary point, then check that the one-sided slope
    // magnitude persists as the measuring step shrinks four decades: a kink
    // keeps it, a smooth extremum loses it linearly in the step.
    bool is_max = dm > 0.0;
    double lo = report.grid[i - 1], hi = report.grid[i + 1];
    double center = ternary_extremum(F1, lo, hi, is_max);
    double fc = F1(center);
    auto slope_at = [&](double h) {
      double tp = center + h, tm = center - h;
      return 0.5 * (std::abs(F1(tp) - fc) / (tp - center) +
                    std::abs(fc - F1(tm)) / (center - tm));
    };
    double s_coarse = slope_at(delta / 10.0);
    double s_fine = slope_at(delta / 1e8);
    if (s_coarse <= 0.0) continue;
    // Measured on the shipped problems: true kinks keep > 0.9996 of their
    // slope, the degenerate log-modulus points keep at most 0.9521.
    double persist = s_fine / s_coarse;
    if (persist < 0.98 || persist > 1.02) continue;

    if (center - prev_flag_theta < delta) continue;  // same kink seen from both cells
    prev_flag_theta = center;
    report.flagged_cells.push_back(i);
    report.flagged_thetas.push_back(center);
  }
  return report;
}

HolderReport holder_probe(const AnalyticProblem& ap, double theta_k,
                          std::vector<double> radii) {
  auto recorded = ap.holder_failure_in(theta_k - 1e-6, theta_k + 1e-6);
  if (recorded.empty())
    fail(ErrorKind::InvalidConfig, "theta_k is not a recorded Holder-failure point",
         {{"theta_k", fmt_value(theta_k)}});
  double center = recorded.front();
  for (double t : recorded)
    if (std::abs(t - theta_k) < std::abs(center - theta_k)) center = t;

  if (radii.empty())
    for (int e = 2; e <= 13; ++e) radii.push_back(std::pow(10.0, -e));

  HolderReport report;
  report.theta_k = center;
  report.grad_at_center = 0.0;  // a(theta_k) = 0 by definition of the failure set
  for (double rho : radii) {
    Vec th(1);
    th[0] = center + rho;
    auto grad = ap.gradF_exact(th);
    if (!grad)
      fail(ErrorKind::InvalidConfig, "gradF undefined at probe point",
           {{"theta", fmt_value(th[0])}});
    double gv = std::abs((*grad)[0]);
    report.radii.push_back(rho);
    report.grad_values.push_back(gv);
    report.log_law_ratios.push_back(gv * std::sqrt(std::log(1.0 / rho)));
    report.holder01_quotients.push_back(gv / std::pow(rho, 0.1));
  }
  return report;
}

SlopeFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    fail(ErrorKind::InvalidConfig, "log-log fit needs at least 3 paired points",
         {{"xs", fmt_value(int(xs.size()))}, {"ys", fmt_value(int(ys.size()))}});
  const int n = static_cast<int>(xs.size());
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      fail(ErrorKind::InvalidConfig, "log-log fit needs positive inputs",
           {{"index", fmt_value(i)}, {"x", fmt_value(xs[i])}, {"y", fmt_value(ys[i])}});
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0)
    fail(ErrorKind::InvalidConfig, "log-log fit needs distinct x values", {});
  SlopeFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = syy - sxy * sxy / sxx;
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

}  // namespace hgms::oracle
