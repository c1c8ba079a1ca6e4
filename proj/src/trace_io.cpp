#include "hgms/trace_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hgms/rng.hpp"
#include "hgms/testbed.hpp"

namespace hgms::cli {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    fail(ErrorKind::InvalidConfig, "cannot open output file for writing", {{"path", path}});
  return out;
}

std::string cell(double v) { return fmt_value(v); }

void provenance_line(std::ofstream& out, const ExperimentConfig& cfg) {
  out << "# hgms seed=" << cfg.seed << " config_hash=" << config_hash(canonical_config_text(cfg))
      << "\n";
}

}  // namespace

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(ErrorKind::InvalidConfig, "cannot create output directory",
         {{"dir", dir}, {"error", ec.message()}});
}

void write_trace_csv(const std::string& path, const outer::RunTrace& trace,
                     const ExperimentConfig& cfg) {
  auto out = open_out(path);
  provenance_line(out, cfg);
  int m = trace.records.empty() ? int(trace.final_theta.size())
                                : int(trace.records.front().theta.size());
  out << "t";
  for (int i = 0; i < m; ++i) out << ",theta_" << i;
  out << ",f_selected,grad_map_norm,cg_iters,cg_residual,clipped,dist_to_manifold,oracle_err\n";
  for (const auto& r : trace.records) {
    out << r.t;
    for (int i = 0; i < m; ++i) out << "," << cell(r.theta[i]);
    out << "," << cell(r.f_selected);
    out << "," << cell(r.grad_map_norm);
    out << "," << r.cg_iterations;
    out << "," << cell(r.cg_residual);
    out << "," << (r.clipped ? 1 : 0);
    out << ",";
    if (r.dist_to_manifold) out << cell(*r.dist_to_manifold);
    out << ",";
    if (r.oracle_error) out << cell(*r.oracle_error);
    out << "\n";
  }
}

void write_summary_json(const std::string& path, const outer::RunTrace& trace,
                        const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["tool"] = "hgms";
  j["version"] = "0.1.0";
  j["problem"] = trace.problem_name;
  j["seed"] = trace.seed;
  std::string canonical = canonical_config_text(cfg);
  j["config_hash"] = config_hash(canonical);
  j["config"] = canonical;
  j["substream_mix"] = kSubstreamMixName;
  j["iterations"] = trace.records.size();
  j["aborted"] = trace.aborted;
  if (trace.aborted) j["abort_message"] = trace.abort_message;
  j["theta0_projected"] = trace.theta0_projected;
  j["alpha_warnings"] = trace.alpha_warning_count;
  j["wall_seconds"] = trace.wall_seconds;

  std::vector<double> final_theta(trace.final_theta.data(),
                                  trace.final_theta.data() + trace.final_theta.size());
  j["final_theta"] = final_theta;

  double mean_gm2 = 0, mean_f = 0, mean_oracle = 0;
  int n = 0, n_oracle = 0;
  for (const auto& r : trace.records) {
    if (r.error_step) continue;
    mean_gm2 += r.grad_map_norm * r.grad_map_norm;
    mean_f += r.f_selected;
    ++n;
    if (r.oracle_error) {
      mean_oracle += *r.oracle_error * *r.oracle_error;
      ++n_oracle;
    }
  }
  if (n > 0) {
    j["mean_grad_map_sq"] = mean_gm2 / n;
    j["mean_f_selected"] = mean_f / n;
  }
  if (n_oracle > 0) j["mean_oracle_err_sq"] = mean_oracle / n_oracle;

  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_rate_csv(const std::string& path, const selector::RateTable& table,
                    const ExperimentConfig& cfg) {
  auto out = open_out(path);
  provenance_line(out, cfg);
  out << "lambda,n,mean_sq_err,stderr,replicates\n";
  for (const auto& r : table.rows) {
    out << cell(r.lambda) << "," << r.n << "," << cell(r.mean_sq_err) << ",";
    if (r.std_error) out << cell(*r.std_error);
    out << "," << r.replicates << "\n";
  }
}

void write_slopes_json(const std::string& path, const selector::RateTable& table,
                       const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["tool"] = "hgms";
  j["version"] = "0.1.0";
  j["problem"] = cfg.problem_name;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(canonical_config_text(cfg));
  auto fill = [](const std::optional<oracle::SlopeFit>& fit) -> nlohmann::json {
    if (!fit) return nullptr;
    return {{"slope", fit->slope},
            {"intercept", fit->intercept},
            {"r_squared", fit->r_squared},
            {"points", fit->points}};
  };
  j["slope_vs_n"] = fill(table.slope_vs_n);
  j["slope_vs_lambda"] = fill(table.slope_vs_lambda);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_kink_csv(const std::string& path, const oracle::KinkReport& report,
                    bool with_branches, const ExperimentConfig& cfg) {
  auto out = open_out(path);
  provenance_line(out, cfg);
  out << "theta,F,d_minus,d_plus,flagged";
  if (with_branches) out << ",ra,minus_ra";
  out << "\n";
  std::vector<char> is_flagged(report.grid.size(), 0);
  for (int idx : report.flagged_cells)
    if (idx >= 0 && idx < int(report.grid.size())) is_flagged[idx] = 1;
  for (size_t i = 0; i < report.grid.size(); ++i) {
    out << cell(report.grid[i]) << "," << cell(report.F[i]) << "," << cell(report.d_minus[i])
        << "," << cell(report.d_plus[i]) << "," << int(is_flagged[i]);
    if (with_branches) {
      double theta = report.grid[i];
      double ra = std::sqrt(1.0 + theta * theta) * testbed::kink_a(theta);
      out << "," << cell(ra) << "," << cell(-ra);
    }
    out << "\n";
  }
}

}  // namespace hgms::cli
