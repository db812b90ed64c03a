#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gldgcn/optim.hpp"

namespace gldgcn {

/// Parameter under test and the group it reports into.
struct CheckedParam {
  Parameter* param;
  std::string group;
};

struct GradCheckEntry {
  std::string name;
  std::string group;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  /// False when both the analytic and the numeric gradient vanish everywhere.
  bool has_grad = true;
};

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  bool has_grad = false;
  bool passed = true;
};

struct GradCheckReport {
  double tolerance = 1e-4;
  std::vector<GradCheckEntry> entries;
  std::vector<GradCheckGroup> groups;
  bool passed() const;
};

/// Below this magnitude gradients are compared in absolute terms.
inline constexpr double kGradCheckFloor = 1e-5;

/// Evaluates the loss at the current parameter values. When `with_grad` is
/// set it must also add the analytic gradient into every Parameter::grad.
using CheckedLoss = std::function<double(bool with_grad)>;

/// Central differences with step h against the analytic gradient, per entry
/// |g_a - g_fd| / max(|g_a|, |g_fd|, kGradCheckFloor). Parameter values are
/// restored afterwards. `sabotage_group` flips the sign of that group's
/// analytic gradient before comparison (a test hook).
GradCheckReport finite_diff_check(const CheckedLoss& loss, const std::vector<CheckedParam>& params,
                                  double h = 1e-5, double tolerance = 1e-4,
                                  const std::string& sabotage_group = "");

}  // namespace gldgcn
