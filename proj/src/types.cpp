#include "hgms/types.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace hgms {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::CgBudgetExceeded: return "CgBudgetExceeded";
    case ErrorKind::OracleDisagreement: return "OracleDisagreement";
  }
  return "Unknown";
}

namespace {
std::string render(ErrorKind kind, const std::string& message,
                   const std::vector<std::pair<std::string, std::string>>& context) {
  std::ostringstream os;
  os << to_string(kind) << ": " << message;
  if (!context.empty()) {
    os << " [";
    bool first = true;
    for (const auto& [k, v] : context) {
      if (!first) os << ", ";
      first = false;
      os << k << "=" << v;
    }
    os << "]";
  }
  return os.str();
}
}  // namespace

ToolException::ToolException(ErrorKind kind, const std::string& message,
                             std::vector<std::pair<std::string, std::string>> context)
    : std::runtime_error(render(kind, message, context)),
      err_{kind, message, std::move(context)} {}

void fail(ErrorKind kind, const std::string& message,
          std::vector<std::pair<std::string, std::string>> context) {
  throw ToolException(kind, message, std::move(context));
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_value(int v) { return std::to_string(v); }
std::string fmt_value(std::uint64_t v) { return std::to_string(v); }

FeasibleSet FeasibleSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size())
    fail(ErrorKind::DimensionMismatch, "box bounds differ in length",
         {{"lower_len", fmt_value(int(lower.size()))}, {"upper_len", fmt_value(int(upper.size()))}});
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      fail(ErrorKind::InvalidConfig, "box lower bound exceeds upper bound",
           {{"index", fmt_value(int(i))},
            {"lower", fmt_value(lower[i])},
            {"upper", fmt_value(upper[i])}});
  return FeasibleSet{BoxSet{std::move(lower), std::move(upper)}};
}

FeasibleSet FeasibleSet::box(double lo, double hi, int m) {
  return box(Vec::Constant(m, lo), Vec::Constant(m, hi));
}

FeasibleSet FeasibleSet::simplex(int dim) {
  if (dim < 1)
    fail(ErrorKind::InvalidConfig, "simplex dimension must be positive",
         {{"dim", fmt_value(dim)}});
  return FeasibleSet{SimplexSet{dim}};
}

FeasibleSet FeasibleSet::full_space() { return FeasibleSet{FullSpaceSet{}}; }

bool FeasibleSet::contains(const Vec& u, double tol) const {
  if (std::holds_alternative<FullSpaceSet>(set)) return true;
  if (const auto* b = std::get_if<BoxSet>(&set)) {
    if (u.size() != b->lower.size()) return false;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (u[i] < b->lower[i] - tol || u[i] > b->upper[i] + tol) return false;
    return true;
  }
  const auto& s = std::get<SimplexSet>(set);
  if (u.size() != s.dim) return false;
  if (u.minCoeff() < -tol) return false;
  return std::abs(u.sum() - 1.0) <= tol;
}

void check_finite(const Vec& v, const char* name) {
  if (!v.allFinite())
    fail(ErrorKind::NonFinite, std::string(name) + " has a non-finite entry",
         {{"name", name}});
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v))
    fail(ErrorKind::NonFinite, std::string(name) + " is non-finite",
         {{"name", name}, {"value", fmt_value(v)}});
}

void check_size(const Vec& v, Eigen::Index n, const char* name) {
  if (v.size() != n)
    fail(ErrorKind::DimensionMismatch, std::string(name) + " has the wrong length",
         {{"name", name},
          {"expected", fmt_value(int(n))},
          {"actual", fmt_value(int(v.size()))}});
}

}  // namespace hgms
