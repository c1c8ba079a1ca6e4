#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hgms {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Upper-level dimension m (theta) and lower-level dimension d (x).
struct ProblemDims {
  int m = 0;
  int d = 0;
};

enum class ErrorKind {
  DimensionMismatch,
  NonFinite,
  InvalidConfig,
  CgBudgetExceeded,
  OracleDisagreement,
};

const char* to_string(ErrorKind kind);

// Errors are recorded values: each one names the offending quantity in
// `context` so traces and exit paths can report it without re-deriving state.
struct ToolError {
  ErrorKind kind = ErrorKind::InvalidConfig;
  std::string message;
  std::vector<std::pair<std::string, std::string>> context;
};

class ToolException : public std::runtime_error {
 public:
  ToolException(ErrorKind kind, const std::string& message,
                std::vector<std::pair<std::string, std::string>> context = {});
  const ToolError& error() const { return err_; }
  ErrorKind kind() const { return err_.kind; }

 private:
  ToolError err_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message,
                       std::vector<std::pair<std::string, std::string>> context = {});

std::string fmt_value(double v);
std::string fmt_value(int v);
std::string fmt_value(std::uint64_t v);

// Feasible set for the upper-level variable theta.
struct BoxSet {
  Vec lower;
  Vec upper;
};
struct SimplexSet {
  int dim = 0;  // probability simplex in R^dim
};
struct FullSpaceSet {};

struct FeasibleSet {
  std::variant<BoxSet, SimplexSet, FullSpaceSet> set = FullSpaceSet{};

  static FeasibleSet box(Vec lower, Vec upper);
  static FeasibleSet box(double lo, double hi, int m);
  static FeasibleSet simplex(int dim);
  static FeasibleSet full_space();

  bool contains(const Vec& u, double tol = 1e-12) const;
};

void check_finite(const Vec& v, const char* name);
void check_finite(double v, const char* name);
void check_size(const Vec& v, Eigen::Index n, const char* name);

}  // namespace hgms
