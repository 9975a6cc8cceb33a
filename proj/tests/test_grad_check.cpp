// tests/test_grad_check.cpp

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

#include <cmath>
#include <limits>

#include <doctest.h>

#include "corrkd/grad_check.hpp"
#include "corrkd/grad_suite.hpp"

using namespace corrkd;

TEST_CASE("finite_diff_check on a bilinear function is essentially exact") {
  std::vector<double> xy{2.0, 3.0};
  auto f = [&]() { return xy[0] * xy[1]; };
  CheckedParam p{"xy", &xy};
  // d/dx (xy) = y, d/dy = x
  std::vector<std::vector<double>> analytic{{3.0, 2.0}};
  GradCheckReport rep = finite_diff_check(f, {&p, 1}, analytic, 1e-5, 1e-4);
  CHECK(rep.passed);
  CHECK(rep.max_rel_err < 1e-9);
}

TEST_CASE("finite_diff_check flags an injected sign flip") {
  std::vector<double> xy{2.0, 3.0};
  auto f = [&]() { return xy[0] * xy[1]; };
  CheckedParam p{"xy", &xy};
  std::vector<std::vector<double>> wrong{{-3.0, 2.0}};  // sign flip on d/dx
  GradCheckReport rep = finite_diff_check(f, {&p, 1}, wrong, 1e-5, 1e-4);
  CHECK_FALSE(rep.passed);
  CHECK(rep.max_rel_err > 0.5);
  CHECK(rep.to_string().find("FAIL") != std::string::npos);
}

TEST_CASE("finite_diff_check reports non-finite evaluations") {
  std::vector<double> x{0.5};
  auto f = [&]() {
    return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x[0];
  };
  CheckedParam p{"x", &x};
  std::vector<std::vector<double>> analytic{{1.0}};
  GradCheckReport rep = finite_diff_check(f, {&p, 1}, analytic, 1e-3, 1e-4);
  CHECK_FALSE(rep.passed);
  REQUIRE(rep.entries.size() == 1);
  CHECK_FALSE(rep.entries[0].finite);
}

TEST_CASE("gradient suite passes at reduced seed count") {
  GradSuiteConfig cfg;
  cfg.seeds = 4;
  cfg.include_model = true;
  GradSuiteResult result = run_gradient_suite(cfg);
  for (const auto& item : result.items) {
    INFO(item.name, " -> ", item.detail);
    CHECK(item.passed);
  }
  CHECK(result.passed);
  CHECK(result.max_rel_err < 1e-4);
}
