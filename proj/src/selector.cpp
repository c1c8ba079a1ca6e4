#include "hgms/selector.hpp"

#include <cmath>

#include "hgms/rng.hpp"

namespace hgms::selector {

SelectionResult best_of_n(const BilevelProblem& p, const Vec& theta,
                          const sampler::ChainOutput& candidates,
                          const testbed::AnalyticProblem* ap) {
  if (candidates.points.empty())
    fail(ErrorKind::InvalidConfig, "selection needs at least one candidate", {});

  SelectionResult res;
  res.all_values.reserve(candidates.points.size());
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < candidates.points.size(); ++i) {
    double v = p.f(theta, candidates.points[i]);
    if (std::isnan(v))
      fail(ErrorKind::NonFinite, "upper-level value is NaN at a candidate",
           {{"candidate", fmt_value(int(i))}});
    res.all_values.push_back(v);
    if (v < best_value) {  // strict: ties keep the smallest index
      best_value = v;
      best = static_cast<int>(i);
    }
  }
  res.index = best;
  res.point = candidates.points[best];
  res.value = best_value;
  if (ap != nullptr) res.dist_to_manifold = ap->dist_to_manifold(theta, res.point);
  return res;
}

RateTable selection_error_sweep(const testbed::AnalyticProblem& ap, const Vec& theta,
                                const std::vector<double>& lambda_grid,
                                const std::vector<int>& n_grid, int replicates,
                                const sampler::GibbsSamplerConfig& cfg_template) {
  if (lambda_grid.empty() || n_grid.empty())
    fail(ErrorKind::InvalidConfig, "sweep grids must be nonempty",
         {{"lambda_grid", fmt_value(int(lambda_grid.size()))},
          {"n_grid", fmt_value(int(n_grid.size()))}});
  if (replicates < 1)
    fail(ErrorKind::InvalidConfig, "need at least one replicate",
         {{"replicates", fmt_value(replicates)}});
  auto star = ap.x_star(theta);
  if (!star)
    fail(ErrorKind::InvalidConfig, "x_star is not defined (selection ties) at this theta",
         {{"theta_0", fmt_value(theta[0])}});

  RateTable table;
  for (size_t li = 0; li < lambda_grid.size(); ++li) {
    for (size_t ni = 0; ni < n_grid.size(); ++ni) {
      sampler::GibbsSamplerConfig cfg = cfg_template;
      cfg.lambda = lambda_grid[li];
      cfg.chains = n_grid[ni];
      std::uint64_t cell_seed =
          substream_seed(cfg_template.seed, static_cast<std::uint64_t>(li) * 1000 + ni, 0x5eedu);

      double sum = 0.0, sum2 = 0.0;
      for (int rep = 0; rep < replicates; ++rep) {
        cfg.seed = substream_seed(cell_seed, static_cast<std::uint64_t>(rep));
        auto chains = sampler::sample_parallel(ap.problem, theta, cfg, &ap);
        auto sel = best_of_n(ap.problem, theta, chains, &ap);
        double err2 = (sel.point - *star).squaredNorm();
        sum += err2;
        sum2 += err2 * err2;
      }
      RateRow row;
      row.lambda = cfg.lambda;
      row.n = cfg.chains;
      row.replicates = replicates;
      row.mean_sq_err = sum / replicates;
      if (replicates > 1) {
        double var = (sum2 - sum * sum / replicates) / (replicates - 1);
        row.std_error = std::sqrt(std::max(0.0, var) / replicates);
      }
      table.rows.push_back(row);
    }
  }

  // Slope vs N at the smallest lambda; slope vs lambda at the largest N.
  double lam_min = *std::min_element(lambda_grid.begin(), lambda_grid.end());
  int n_max = *std::max_element(n_grid.begin(), n_grid.end());
  std::vector<double> xs, ys;
  for (const auto& r : table.rows)
    if (r.lambda == lam_min && r.mean_sq_err > 0) {
      xs.push_back(double(r.n));
      ys.push_back(r.mean_sq_err);
    }
  if (xs.size() >= 3) table.slope_vs_n = oracle::fit_loglog(xs, ys);
  xs.clear();
  ys.clear();
  for (const auto& r : table.rows)
    if (r.n == n_max && r.mean_sq_err > 0) {
      xs.push_back(r.lambda);
      ys.push_back(r.mean_sq_err);
    }
  if (xs.size() >= 3) table.slope_vs_lambda = oracle::fit_loglog(xs, ys);
  return table;
}

}  // namespace hgms::selector
