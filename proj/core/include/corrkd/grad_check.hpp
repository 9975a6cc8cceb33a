// core/include/corrkd/grad_check.hpp

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

#ifndef CORRKD_GRAD_CHECK_HPP_
#define CORRKD_GRAD_CHECK_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace corrkd {

/// A parameter under check: the function under test must read `*values`
/// (by reference) on every evaluation so central differences can perturb it
/// in place.
struct CheckedParam {
  std::string name;
  std::vector<double>* values = nullptr;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;   // at worst_index
  double numeric = 0.0;    // at worst_index
  bool finite = true;      // false if f produced a non-finite value
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool passed = false;
  std::string to_string() const;
};

/// Compares analytic gradients against central finite differences
///   (f(x+h) - f(x-h)) / 2h.
/// Relative error uses a scale floor so components whose true gradient is
/// zero compare against FD noise sensibly:
///   rel = |a - n| / max(|a|, |n|, denom_floor).
/// `analytic_grads[k]` must align with `params[k]` elementwise.
GradCheckReport finite_diff_check(
    const std::function<double()>& f, std::span<const CheckedParam> params,
    const std::vector<std::vector<double>>& analytic_grads, double step = 1e-5,
    double tol = 1e-4, double denom_floor = 1e-3);

}  // namespace corrkd

#endif  // CORRKD_GRAD_CHECK_HPP_
