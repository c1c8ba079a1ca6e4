#include "hgms/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace hgms::cli {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "bad numeric value", {{"key", key}, {"value", v}});
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long long n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "bad integer value", {{"key", key}, {"value", v}});
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "bad unsigned value", {{"key", key}, {"value", v}});
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::InvalidConfig, "bad boolean value", {{"key", key}, {"value", v}});
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty())
    fail(ErrorKind::InvalidConfig, "empty list value", {{"key", key}, {"value", v}});
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      static const std::vector<std::string> known = {"problem",   "feasible_set", "sampler",
                                                     "hypergrad", "outer",        "output"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        fail(ErrorKind::InvalidConfig, "unknown config section",
             {{"section", section}, {"line", fmt_value(line_no)}});
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::InvalidConfig, "expected key = value",
           {{"line", fmt_value(line_no)}, {"text", t}});
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    std::string qual = section + "." + key;

    if (section == "problem") {
      if (key == "name") cfg.problem_name = value;
      else if (key == "theta0") cfg.theta0 = parse_list(qual, value);
      else if (key == "b") cfg.degenerate_b = parse_double(qual, value);
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else if (section == "feasible_set") {
      if (key == "kind") cfg.feasible_kind = value;
      else if (key == "lower") cfg.feasible_lower = parse_list(qual, value);
      else if (key == "upper") cfg.feasible_upper = parse_list(qual, value);
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else if (section == "sampler") {
      if (key == "lambda") cfg.lambda = parse_double(qual, value);
      else if (key == "chains") cfg.chains = int(parse_int(qual, value));
      else if (key == "steps") cfg.steps = int(parse_int(qual, value));
      else if (key == "stepsize") cfg.stepsize = parse_double(qual, value);
      else if (key == "init") cfg.init_kind = value;
      else if (key == "init_center") cfg.init_center = parse_list(qual, value);
      else if (key == "tau") cfg.tau = parse_double(qual, value);
      else if (key == "seed") { cfg.seed = parse_u64(qual, value); cfg.seed_set = true; }
      else if (key == "workers") cfg.workers = int(parse_int(qual, value));
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else if (section == "hypergrad") {
      if (key == "gamma") cfg.hypergrad.gamma = parse_double(qual, value);
      else if (key == "eta") cfg.hypergrad.eta = parse_double(qual, value);
      else if (key == "max_cg_iters") cfg.hypergrad.max_cg_iters = int(parse_int(qual, value));
      else if (key == "clip_radius") cfg.hypergrad.clip_radius = parse_double(qual, value);
      else if (key == "warm_start") cfg.hypergrad.warm_start = parse_bool(qual, value);
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else if (section == "outer") {
      if (key == "alpha") cfg.outer.alpha = parse_double(qual, value);
      else if (key == "iterations") cfg.outer.iterations = int(parse_int(qual, value));
      else if (key == "stop_on_error") cfg.outer.stop_on_error = parse_bool(qual, value);
      else if (key == "record_oracle_error")
        cfg.outer.record_oracle_error = parse_bool(qual, value);
      else if (key == "warm_start_chains")
        cfg.outer.warm_start_chains = parse_bool(qual, value);
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else if (section == "output") {
      if (key == "dir") cfg.out_dir = value;
      else fail(ErrorKind::InvalidConfig, "unknown key", {{"key", qual}});
    } else {
      fail(ErrorKind::InvalidConfig, "key outside any section",
           {{"key", key}, {"line", fmt_value(line_no)}});
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::InvalidConfig, "cannot open config file", {{"path", path}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += fmt_value(v[i]);
    }
    return s;
  };
  os << "[problem]\n";
  os << "name = " << cfg.problem_name << "\n";
  if (!cfg.theta0.empty()) os << "theta0 = " << list(cfg.theta0) << "\n";
  if (cfg.problem_name == "degenerate-circle") os << "b = " << fmt_value(cfg.degenerate_b) << "\n";
  if (!cfg.feasible_kind.empty()) {
    os << "[feasible_set]\n";
    os << "kind = " << cfg.feasible_kind << "\n";
    if (!cfg.feasible_lower.empty()) os << "lower = " << list(cfg.feasible_lower) << "\n";
    if (!cfg.feasible_upper.empty()) os << "upper = " << list(cfg.feasible_upper) << "\n";
  }
  os << "[sampler]\n";
  os << "lambda = " << fmt_value(cfg.lambda) << "\n";
  os << "chains = " << cfg.chains << "\n";
  os << "steps = " << cfg.steps << "\n";
  os << "stepsize = " << fmt_value(cfg.stepsize) << "\n";
  os << "init = " << cfg.init_kind << "\n";
  if (!cfg.init_center.empty()) os << "init_center = " << list(cfg.init_center) << "\n";
  os << "tau = " << fmt_value(cfg.tau) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "workers = " << cfg.workers << "\n";
  os << "[hypergrad]\n";
  os << "gamma = " << fmt_value(cfg.hypergrad.gamma) << "\n";
  os << "eta = " << fmt_value(cfg.hypergrad.eta) << "\n";
  os << "max_cg_iters = " << cfg.hypergrad.max_cg_iters << "\n";
  if (cfg.hypergrad.clip_radius)
    os << "clip_radius = " << fmt_value(*cfg.hypergrad.clip_radius) << "\n";
  os << "warm_start = " << (cfg.hypergrad.warm_start ? "true" : "false") << "\n";
  os << "[outer]\n";
  os << "alpha = " << fmt_value(cfg.outer.alpha) << "\n";
  os << "iterations = " << cfg.outer.iterations << "\n";
  os << "stop_on_error = " << (cfg.outer.stop_on_error ? "true" : "false") << "\n";
  os << "record_oracle_error = " << (cfg.outer.record_oracle_error ? "true" : "false") << "\n";
  os << "warm_start_chains = " << (cfg.outer.warm_start_chains ? "true" : "false") << "\n";
  // the output directory is deliberately excluded: the hash identifies the
  // experiment, not where its artifacts land
  return os.str();
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Vec default_theta0(const std::string& problem_name, int m) {
  Vec t(m);
  if (problem_name == "circle-kink" || problem_name == "degenerate-circle")
    t.setConstant(0.3);
  else if (problem_name.rfind("sphere", 0) == 0)
    t.setConstant(1.5);
  else
    t.setConstant(1.0);
  return t;
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  if (!cfg.seed_set)
    fail(ErrorKind::InvalidConfig,
         "no seed given: set sampler.seed or pass --seed (no wall-clock seeding)", {});
  Experiment exp;
  if (cfg.problem_name == "degenerate-circle")
    exp.problem = testbed::make_degenerate_circle(cfg.degenerate_b);
  else
    exp.problem = testbed::make_by_name(cfg.problem_name);

  const int m = exp.problem.problem.dims.m;
  if (!cfg.feasible_kind.empty()) {
    if (cfg.feasible_kind == "full") {
      exp.problem.problem.feasible_set = FeasibleSet::full_space();
    } else if (cfg.feasible_kind == "simplex") {
      exp.problem.problem.feasible_set = FeasibleSet::simplex(m);
    } else if (cfg.feasible_kind == "box") {
      if (int(cfg.feasible_lower.size()) != m || int(cfg.feasible_upper.size()) != m)
        fail(ErrorKind::InvalidConfig, "box bounds must match the problem dimension",
             {{"m", fmt_value(m)}});
      Vec lo = Eigen::Map<const Vec>(cfg.feasible_lower.data(), m);
      Vec hi = Eigen::Map<const Vec>(cfg.feasible_upper.data(), m);
      exp.problem.problem.feasible_set = FeasibleSet::box(lo, hi);
    } else {
      fail(ErrorKind::InvalidConfig, "unknown feasible set kind",
           {{"kind", cfg.feasible_kind}});
    }
  }

  if (cfg.theta0.empty()) {
    exp.theta0 = default_theta0(cfg.problem_name, m);
  } else {
    if (int(cfg.theta0.size()) != m)
      fail(ErrorKind::InvalidConfig, "theta0 must match the problem dimension",
           {{"m", fmt_value(m)}, {"given", fmt_value(int(cfg.theta0.size()))}});
    exp.theta0 = Eigen::Map<const Vec>(cfg.theta0.data(), m);
  }

  sampler::GibbsSamplerConfig s;
  s.lambda = cfg.lambda;
  s.chains = cfg.chains;
  s.steps = cfg.steps;
  s.stepsize = cfg.stepsize;
  s.seed = cfg.seed;
  s.workers = cfg.workers;
  if (cfg.init_kind == "gaussian-on-manifold") {
    s.init = sampler::InitGaussianOnManifold{cfg.tau};
  } else if (cfg.init_kind == "gaussian-at-center") {
    const int d = exp.problem.problem.dims.d;
    Vec center;
    if (cfg.init_center.empty()) {
      center = Vec::Zero(d);
    } else {
      if (int(cfg.init_center.size()) != d)
        fail(ErrorKind::InvalidConfig, "init_center must match the lower-level dimension",
             {{"d", fmt_value(d)}});
      center = Eigen::Map<const Vec>(cfg.init_center.data(), d);
    }
    s.init = sampler::InitGaussianAtCenter{center, cfg.tau};
  } else if (cfg.init_kind == "fixed") {
    const int d = exp.problem.problem.dims.d;
    if (int(cfg.init_center.size()) != d)
      fail(ErrorKind::InvalidConfig, "fixed init needs init_center of the lower-level dimension",
           {{"d", fmt_value(d)}});
    s.init = sampler::InitFixedPoints{{Eigen::Map<const Vec>(cfg.init_center.data(), d)}};
  } else {
    fail(ErrorKind::InvalidConfig, "unknown sampler init kind", {{"init", cfg.init_kind}});
  }
  exp.sampler_cfg = s;
  exp.hypergrad_cfg = cfg.hypergrad;
  exp.outer_cfg = cfg.outer;
  return exp;
}

}  // namespace hgms::cli
