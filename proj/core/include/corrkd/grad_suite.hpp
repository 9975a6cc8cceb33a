// core/include/corrkd/grad_suite.hpp

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

#ifndef CORRKD_GRAD_SUITE_HPP_
#define CORRKD_GRAD_SUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "corrkd/losses.hpp"

namespace corrkd {

/// Configuration for the full finite-difference verification sweep over the
/// kd / bt / cl losses (and optionally the student forward pass).
struct GradSuiteConfig {
  int seeds = 20;           // random batches per loss
  double step = 1e-5;       // central-difference step
  double tol = 1e-4;        // max relative error
  LossWeights weights{};    // lambda_cc=5e-5, lambda_sc=5e-6, gamma=1
  bool include_model = true;
  std::uint64_t base_seed = 1234;
};

struct GradSuiteResult {
  struct Item {
    std::string name;
    double max_rel_err = 0.0;
    bool passed = false;
    std::string detail;  // non-empty on failure
  };
  std::vector<Item> items;
  double max_rel_err = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

GradSuiteResult run_gradient_suite(const GradSuiteConfig& cfg);

}  // namespace corrkd

#endif  // CORRKD_GRAD_SUITE_HPP_
