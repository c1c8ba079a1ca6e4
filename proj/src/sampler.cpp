#include "hgms/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "hgms/parallel.hpp"
#include "hgms/rng.hpp"

namespace hgms::sampler {

void validate(const GibbsSamplerConfig& cfg) {
  if (!(cfg.lambda > 0.0))
    fail(ErrorKind::InvalidConfig, "lambda must be positive",
         {{"lambda", fmt_value(cfg.lambda)}});
  if (!(cfg.stepsize > 0.0))
    fail(ErrorKind::InvalidConfig, "stepsize must be positive",
         {{"h", fmt_value(cfg.stepsize)}});
  if (cfg.chains < 1)
    fail(ErrorKind::InvalidConfig, "need at least one chain",
         {{"chains", fmt_value(cfg.chains)}});
  if (cfg.steps < 0)
    fail(ErrorKind::InvalidConfig, "steps must be nonnegative",
         {{"steps", fmt_value(cfg.steps)}});
  if (const auto* g = std::get_if<InitGaussianAtCenter>(&cfg.init)) {
    if (!(g->tau >= 0.0))
      fail(ErrorKind::InvalidConfig, "tau must be nonnegative", {{"tau", fmt_value(g->tau)}});
  } else if (const auto* gm = std::get_if<InitGaussianOnManifold>(&cfg.init)) {
    if (!(gm->tau >= 0.0))
      fail(ErrorKind::InvalidConfig, "tau must be nonnegative", {{"tau", fmt_value(gm->tau)}});
  } else if (const auto* fp = std::get_if<InitFixedPoints>(&cfg.init)) {
    if (fp->points.empty())
      fail(ErrorKind::InvalidConfig, "FixedPoints init needs at least one point", {});
  }
}

namespace {

Vec draw_init(const BilevelProblem& p, const Vec& theta, const GibbsSamplerConfig& cfg,
              int chain_index, const testbed::AnalyticProblem* ap, Rng& rng) {
  const int d = p.dims.d;
  if (const auto* g = std::get_if<InitGaussianAtCenter>(&cfg.init)) {
    check_size(g->center, d, "init.center");
    double sd = std::sqrt(g->tau * cfg.lambda);
    Vec x = g->center;
    for (int i = 0; i < d; ++i) x[i] += sd * rng.normal();
    return x;
  }
  if (const auto* gm = std::get_if<InitGaussianOnManifold>(&cfg.init)) {
    if (ap == nullptr)
      fail(ErrorKind::InvalidConfig,
           "GaussianOnManifold init needs an analytic problem chart", {});
    Vec x = ap->random_on_manifold(theta, rng);
    double sd = std::sqrt(gm->tau * cfg.lambda);
    for (int i = 0; i < d; ++i) x[i] += sd * rng.normal();
    return x;
  }
  const auto& fp = std::get<InitFixedPoints>(cfg.init);
  Vec x = fp.points[chain_index % fp.points.size()];
  check_size(x, d, "init.points");
  return x;
}

}  // namespace

Vec ula_chain(const BilevelProblem& p, const Vec& theta, const GibbsSamplerConfig& cfg,
              int chain_index, const testbed::AnalyticProblem* ap,
              std::uint64_t outer_iteration, const StepObserver& observer) {
  validate(cfg);
  if (chain_index < 0 || chain_index >= cfg.chains)
    fail(ErrorKind::InvalidConfig, "chain index out of range",
         {{"chain_index", fmt_value(chain_index)}, {"chains", fmt_value(cfg.chains)}});

  Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(chain_index), outer_iteration));
  Vec x = draw_init(p, theta, cfg, chain_index, ap, rng);
  const double h = cfg.stepsize;
  const double noise = std::sqrt(2.0 * cfg.lambda * h);
  const int d = p.dims.d;
  for (int s = 0; s < cfg.steps; ++s) {
    Vec grad = p.grad_g_x(theta, x);
    for (int i = 0; i < d; ++i) x[i] += -h * grad[i] + noise * rng.normal();
    if (!x.allFinite())
      fail(ErrorKind::NonFinite, "ULA iterate left the finite range (stepsize too large?)",
           {{"chain_index", fmt_value(chain_index)},
            {"step", fmt_value(s)},
            {"h", fmt_value(h)}});
    if (observer) observer(s, x);
  }
  return x;
}

ChainOutput sample_parallel(const BilevelProblem& p, const Vec& theta,
                            const GibbsSamplerConfig& cfg,
                            const testbed::AnalyticProblem* ap,
                            std::uint64_t outer_iteration) {
  validate(cfg);
  ChainOutput out;
  out.points.resize(cfg.chains);
  out.chain_seeds.resize(cfg.chains);
  for (int i = 0; i < cfg.chains; ++i)
    out.chain_seeds[i] = substream_seed(cfg.seed, static_cast<std::uint64_t>(i), outer_iteration);

  parallel_for(cfg.chains, cfg.workers, [&](int i) {
    try {
      out.points[i] = ula_chain(p, theta, cfg, i, ap, outer_iteration);
    } catch (const ToolException& e) {
      auto ctx = e.error().context;
      ctx.emplace_back("chain_index", fmt_value(i));
      throw ToolException(e.kind(), e.error().message, std::move(ctx));
    }
  });

  if (ap != nullptr) {
    double sum = 0.0, mx = 0.0;
    for (int i = 0; i < cfg.chains; ++i) {
      double d = ap->dist_to_manifold(theta, out.points[i]);
      sum += d;
      mx = std::max(mx, d);
    }
    out.mean_dist_to_manifold = sum / cfg.chains;
    out.max_dist_to_manifold = mx;
  }
  return out;
}

GaussianDiagResult ula_gaussian_variance(const GaussianDiag& cfg) {
  if (cfg.burnin >= cfg.steps)
    fail(ErrorKind::InvalidConfig, "burn-in must be below the total step count",
         {{"burnin", fmt_value(cfg.burnin)}, {"steps", fmt_value(cfg.steps)}});

  // Drive the real chain on g = x^2/2 (d = 1), where ULA reduces to the
  // AR(1) recursion x <- (1-h) x + sqrt(2 lambda h) xi with stationary
  // variance lambda / (1 - h/2).
  BilevelProblem target;
  target.dims = {1, 1};
  target.f = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  target.grad_f_theta = [](const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  target.grad_f_x = [](const Vec&, const Vec& x) { return x; };
  target.g = [](const Vec&, const Vec& x) { return 0.5 * x.squaredNorm(); };
  target.grad_g_x = [](const Vec&, const Vec& x) { return x; };
  target.hvp = [](const Vec&, const Vec&, const Vec& v) { return v; };
  target.mixed = [](const Vec&, const Vec&, const Vec&) { return Vec::Zero(1).eval(); };
  target.hessian_positive_definite = true;

  GibbsSamplerConfig chain_cfg;
  chain_cfg.lambda = cfg.lambda;
  chain_cfg.chains = cfg.chains;
  chain_cfg.steps = cfg.steps;
  chain_cfg.stepsize = cfg.stepsize;
  chain_cfg.seed = cfg.seed;
  chain_cfg.init = InitGaussianAtCenter{Vec::Zero(1), 1.0};

  Vec theta = Vec::Zero(1);
  double sum = 0.0, sum2 = 0.0;
  long long count = 0;
  for (int c = 0; c < cfg.chains; ++c) {
    ula_chain(target, theta, chain_cfg, c, nullptr, 0, [&](int step, const Vec& x) {
      if (step >= cfg.burnin) {
        sum += x[0];
        sum2 += x[0] * x[0];
        ++count;
      }
    });
  }
  double mean = sum / double(count);
  GaussianDiagResult res;
  res.samples = count;
  res.empirical_variance = sum2 / double(count) - mean * mean;
  res.predicted_variance = cfg.lambda / (1.0 - 0.5 * cfg.stepsize);
  return res;
}

}  // namespace hgms::sampler
