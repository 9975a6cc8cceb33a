// core/src/grad_check.cpp

// Copyright 2026  corrkd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "corrkd/grad_check.hpp"

#include <cmath>
#include <sstream>

#include "corrkd/tensor.hpp"

namespace corrkd {

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " tol=" << tol;
  for (const auto& e : entries) {
    os << "\n  " << e.name << ": max_rel_err=" << e.max_rel_err;
    if (!e.finite) os << " [non-finite evaluation]";
    if (e.max_rel_err > tol || !e.finite)
      os << " worst@" << e.worst_index << " analytic=" << e.analytic
         << " numeric=" << e.numeric;
  }
  return os.str();
}

GradCheckReport finite_diff_check(
    const std::function<double()>& f, std::span<const CheckedParam> params,
    const std::vector<std::vector<double>>& analytic_grads, double step,
    double tol, double denom_floor) {
  CORRKD_CHECK(params.size() == analytic_grads.size(),
               "finite_diff_check: " << params.size() << " params but "
                                     << analytic_grads.size()
                                     << " gradient arrays");
  GradCheckReport report;
  report.tol = tol;
  report.passed = true;

  for (std::size_t k = 0; k < params.size(); ++k) {
    const CheckedParam& p = params[k];
    CORRKD_CHECK(p.values != nullptr, "finite_diff_check: null param buffer");
    CORRKD_CHECK(p.values->size() == analytic_grads[k].size(),
                 "finite_diff_check: param '"
                     << p.name << "' has " << p.values->size()
                     << " values but gradient has "
                     << analytic_grads[k].size());
    GradCheckEntry entry;
    entry.name = p.name;
    std::vector<double>& v = *p.values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + step;
      const double fp = f();
      v[i] = saved - step;
      const double fm = f();
      v[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        entry.finite = false;
        entry.worst_index = i;
        report.passed = false;
        break;
      }
      const double numeric = (fp - fm) / (2.0 * step);
      const double analytic = analytic_grads[k][i];
      const double denom = std::max(
          {std::fabs(analytic), std::fabs(numeric), denom_floor});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.analytic = analytic;
        entry.numeric = numeric;
      }
    }
    if (entry.max_rel_err > tol) report.passed = false;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace corrkd
