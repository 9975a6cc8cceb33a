// core/src/grad_suite.cpp

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

#include "corrkd/grad_suite.hpp"

#include <chrono>
#include <random>

#include "corrkd/grad_check.hpp"
#include "corrkd/model.hpp"

namespace corrkd {

namespace {

Tensor randn(Shape shape, std::mt19937_64& rng, bool requires_grad = false) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// One FD check w.r.t. the listed tensors (shared storage: the eager closure
// reads them live; `analytic` returns gradient arrays aligned with inputs).
GradCheckReport check_tensors(
    const std::function<double()>& eager_value,
    const std::function<std::vector<std::vector<double>>()>& analytic,
    const std::vector<Tensor>& inputs, const std::vector<std::string>& names,
    double step, double tol) {
  std::vector<std::vector<double>> analytic_grads = analytic();
  std::vector<CheckedParam> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    params.push_back({names[i], inputs[i].storage().get()});
  }
  return finite_diff_check(eager_value, params, analytic_grads, step, tol);
}

std::vector<double> grad_of(const GradientMap& g, const Tensor& watched) {
  const Tensor& t = g.at(watched);
  return {t.data().begin(), t.data().end()};
}

void fold(GradSuiteResult& result, const std::string& name,
          const GradCheckReport& rep) {
  GradSuiteResult::Item item;
  item.name = name;
  item.max_rel_err = rep.max_rel_err;
  item.passed = rep.passed;
  if (!rep.passed) item.detail = rep.to_string();
  result.max_rel_err = std::max(result.max_rel_err, rep.max_rel_err);
  if (!rep.passed) result.passed = false;
  result.items.push_back(std::move(item));
}

}  // namespace

GradSuiteResult run_gradient_suite(const GradSuiteConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteResult result;
  result.passed = true;

  std::mt19937_64 master(cfg.base_seed);
  for (int s = 0; s < cfg.seeds; ++s) {
    std::mt19937_64 rng(master());
    std::uniform_int_distribution<std::size_t> b_dist(2, 8), t_dist(1, 5),
        d_dist(4, 16);
    const std::size_t B = b_dist(rng), P = 3, T = t_dist(rng), D = d_dist(rng);
    const std::string dims = " B=" + std::to_string(B) + " T=" +
                             std::to_string(T) + " D=" + std::to_string(D);

    // ---- kd ----
    {
      Tensor student = randn({B, P, T, D}, rng, true);
      Tensor teacher = randn({B, P, T, D}, rng);
      auto eager = [&]() {
        return kd_loss({student, teacher}, cfg.weights.gamma).value();
      };
      auto analytic = [&]() {
        Tape tape;
        Tensor st = tape.watch(student);
        GradientMap g = tape.backward(kd_loss({st, teacher}, cfg.weights.gamma));
        return std::vector<std::vector<double>>{grad_of(g, st)};
      };
      fold(result, "kd_loss[" + std::to_string(s) + dims + "]",
           check_tensors(eager, analytic, {student}, {"student"}, cfg.step,
                         cfg.tol));
    }

    // ---- bt (both views differentiable) ----
    {
      Tensor y1 = randn({B, D}, rng, true);
      Tensor y2 = randn({B, D}, rng, true);
      auto eager = [&]() { return bt_loss(y1, y2, cfg.weights.lambda_cc).value(); };
      auto analytic = [&]() {
        Tape tape;
        Tensor a = tape.watch(y1);
        Tensor b = tape.watch(y2);
        GradientMap g = tape.backward(bt_loss(a, b, cfg.weights.lambda_cc));
        return std::vector<std::vector<double>>{grad_of(g, a), grad_of(g, b)};
      };
      fold(result, "bt_loss[" + std::to_string(s) + dims + "]",
           check_tensors(eager, analytic, {y1, y2}, {"y_v1", "y_v2"}, cfg.step,
                         cfg.tol));
    }

    // ---- cl (all components) ----
    {
      Tensor student = randn({B, P, T, D}, rng, true);
      Tensor teacher = randn({B, P, T, D}, rng);
      auto eager = [&]() {
        return cl_loss({student, teacher}, cfg.weights).value();
      };
      auto analytic = [&]() {
        Tape tape;
        Tensor st = tape.watch(student);
        GradientMap g = tape.backward(cl_loss({st, teacher}, cfg.weights));
        return std::vector<std::vector<double>>{grad_of(g, st)};
      };
      fold(result, "cl_loss[" + std::to_string(s) + dims + "]",
           check_tensors(eager, analytic, {student}, {"student"}, cfg.step,
                         cfg.tol));
    }
  }

  if (cfg.include_model) {
    // Student forward at reduced dims: d(sum of predictions)/d(params) over
    // every trainable parameter.
    EncoderConfig mc;
    mc.input_dim = 10;
    mc.model_dim = 8;
    mc.n_heads = 2;
    mc.mlp_dim = 16;
    mc.seed = cfg.base_seed + 99;
    StudentModel student(mc, /*head_seed=*/cfg.base_seed + 100);
    std::mt19937_64 rng(cfg.base_seed + 101);
    Tensor features = randn({5, mc.input_dim}, rng);

    auto eager = [&]() {
      return sum_all(student.forward(features).predictions).value();
    };
    Tape tape;
    StudentModel::Bound bound = student.bind(&tape);
    Tensor out = sum_all(student.forward(bound, features).predictions);
    GradientMap grads = tape.backward(out);

    std::vector<CheckedParam> params;
    std::vector<std::vector<double>> analytic_grads;
    std::vector<Tensor> all_bound = bound.trunk;
    all_bound.insert(all_bound.end(), bound.heads.begin(), bound.heads.end());
    auto& model_params = student.parameters();
    for (std::size_t i = 0; i < model_params.size(); ++i) {
      params.push_back(
          {model_params[i].name, model_params[i].value.storage().get()});
      const Tensor& g = grads.at(all_bound[i]);
      analytic_grads.emplace_back(g.data().begin(), g.data().end());
    }
    fold(result, "student_forward",
         finite_diff_check(eager, params, analytic_grads, cfg.step, cfg.tol));
  }

  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return result;
}

}  // namespace corrkd
