// benchmarks/bench_core.cpp

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

#include <random>

#include <benchmark/benchmark.h>

#include "corrkd/augment.hpp"
#include "corrkd/corpus.hpp"
#include "corrkd/features.hpp"
#include "corrkd/losses.hpp"
#include "corrkd/model.hpp"

namespace {

using namespace corrkd;

Tensor randn(Shape shape, std::mt19937_64& rng, bool rg = false) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), rg);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor a = randn({n, n}, rng);
  Tensor b = randn({n, n}, rng);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(98)->Arg(128);

void BM_TeacherForward(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.seed = 3;
  TeacherModel teacher(cfg);
  std::mt19937_64 rng(2);
  Tensor feats = randn({98, cfg.input_dim}, rng);
  for (auto _ : state) {
    auto taps = teacher.forward(feats);
    benchmark::DoNotOptimize(taps[2].data().data());
  }
}
BENCHMARK(BM_TeacherForward);

void BM_StudentForwardBackward(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.seed = 3;
  TeacherModel teacher(cfg);
  StudentModel student = init_student_from_teacher(teacher, 5);
  std::mt19937_64 rng(2);
  Tensor feats = randn({98, cfg.input_dim}, rng);
  for (auto _ : state) {
    Tape tape;
    auto bound = student.bind(&tape);
    Tensor out = sum_all(student.forward(bound, feats).predictions);
    GradientMap g = tape.backward(out);
    benchmark::DoNotOptimize(g.size());
  }
}
BENCHMARK(BM_StudentForwardBackward);

void BM_ClLoss(benchmark::State& state) {
  std::mt19937_64 rng(4);
  Tensor s = randn({8, 3, 98, 32}, rng, true);
  Tensor t = randn({8, 3, 98, 32}, rng);
  LossWeights w;
  for (auto _ : state) {
    Tape tape;
    Tensor st = tape.watch(s);
    Tensor loss = cl_loss({st, t}, w);
    GradientMap g = tape.backward(loss);
    benchmark::DoNotOptimize(g.size());
  }
}
BENCHMARK(BM_ClLoss);

void BM_ApplyPlan(benchmark::State& state) {
  CorpusConfig cc;
  cc.n_utterances = 1;
  auto corpus = make_synthetic_corpus(cc);
  DistortionPlan plan = make_plan(
      {DistortionSpec::make_reverb(0.3),
       DistortionSpec::make_noise(NoiseColor::pink, 15.0)},
      7);
  for (auto _ : state) {
    AudioBuffer out = apply_plan(corpus[0], plan);
    benchmark::DoNotOptimize(out.samples.data());
  }
}
BENCHMARK(BM_ApplyPlan);

void BM_LogmelFrontend(benchmark::State& state) {
  CorpusConfig cc;
  cc.n_utterances = 1;
  auto corpus = make_synthetic_corpus(cc);
  FrontendConfig fc;
  for (auto _ : state) {
    Tensor f = logmel_frontend(corpus[0], fc);
    benchmark::DoNotOptimize(f.data().data());
  }
}
BENCHMARK(BM_LogmelFrontend);

}  // namespace

BENCHMARK_MAIN();
