#include "gldgcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gldgcn {

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GradCheckGroup& g) { return g.passed; });
}

GradCheckReport finite_diff_check(const CheckedLoss& loss, const std::vector<CheckedParam>& params,
                                  double h, double tolerance, const std::string& sabotage_group) {
  GradCheckReport report;
  report.tolerance = tolerance;

  for (const CheckedParam& cp : params) cp.param->zero_grad();
  loss(true);
  std::vector<DenseMatrix> analytic;
  analytic.reserve(params.size());
  for (const CheckedParam& cp : params) {
    analytic.push_back(cp.param->grad);
    if (!sabotage_group.empty() && cp.group == sabotage_group) {
      for (double& v : analytic.back().values()) v = -v;
    }
    cp.param->zero_grad();
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = *params[p].param;
    GradCheckEntry entry{param.name, params[p].group};
    bool any_nonzero = false;
    for (std::size_t k = 0; k < param.value.size(); ++k) {
      double& x = param.value.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = loss(false);
      x = saved - h;
      const double down = loss(false);
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[p].data()[k];
      if (exact != 0.0 || std::abs(numeric) > 1e-12) any_nonzero = true;
      const double diff = std::abs(exact - numeric);
      const double denom = std::max({std::abs(exact), std::abs(numeric), kGradCheckFloor});
      entry.max_abs_error = std::max(entry.max_abs_error, diff);
      entry.max_rel_error = std::max(entry.max_rel_error, diff / denom);
    }
    entry.has_grad = any_nonzero;
    report.entries.push_back(entry);
  }

  for (const GradCheckEntry& e : report.entries) {
    auto it = std::find_if(report.groups.begin(), report.groups.end(),
                           [&](const GradCheckGroup& g) { return g.name == e.group; });
    if (it == report.groups.end()) {
      report.groups.push_back({e.group});
      it = report.groups.end() - 1;
    }
    it->has_grad = it->has_grad || e.has_grad;
    it->max_rel_error = std::max(it->max_rel_error, e.max_rel_error);
  }
  for (GradCheckGroup& g : report.groups) g.passed = !g.has_grad || g.max_rel_error <= tolerance;
  return report;
}

}  // namespace gldgcn
