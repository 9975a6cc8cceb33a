// tests/test_trainer.cpp

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "corrkd/corpus.hpp"
#include "corrkd/trainer.hpp"
#include "oracles.hpp"

using namespace corrkd;

namespace {

EncoderConfig small_cfg() {
  EncoderConfig c;
  c.input_dim = 40;
  c.model_dim = 16;
  c.n_heads = 2;
  c.mlp_dim = 32;
  c.seed = 77;
  return c;
}

std::vector<AudioBuffer> small_corpus(std::size_t n, std::uint64_t seed) {
  CorpusConfig cc;
  cc.n_utterances = n;
  cc.seconds = 0.5;
  cc.seed = seed;
  return make_synthetic_corpus(cc);
}

TrainingConfig tiny_training() {
  TrainingConfig t;
  t.steps = 5;
  t.batch_size = 4;
  t.dev_eval_every = 0;
  t.threads = 2;
  return t;
}

}  // namespace

TEST_CASE("sample_views honors the setups") {
  auto corpus = small_corpus(4, 5);
  SUBCASE("setup 1: teacher views are the clean buffers bit-exactly") {
    ViewBatch v = sample_views(corpus, Setup::student_only,
                               TeacherMode::variant, {}, 3, 1);
    CHECK(v.teacher_snr_db == 20.0);
    for (std::size_t b = 0; b < corpus.size(); ++b) {
      REQUIRE(v.teacher_views[b].samples.size() == corpus[b].samples.size());
      for (std::size_t i = 0; i < corpus[b].samples.size(); ++i)
        CHECK(v.teacher_views[b].samples[i] == corpus[b].samples[i]);
      CHECK(v.teacher_plans[b].specs.empty());
    }
  }
  SUBCASE("setup 2: teacher and student plans differ per utterance") {
    ViewBatch v =
        sample_views(corpus, Setup::both, TeacherMode::variant, {}, 3, 1);
    for (std::size_t b = 0; b < corpus.size(); ++b) {
      CHECK_FALSE(v.teacher_plans[b].specs.empty());
      CHECK(v.teacher_plans[b].describe() != v.student_plans[b].describe());
    }
  }
  SUBCASE("oracle-invariant teacher sees clean input even in setup 2") {
    ViewBatch v = sample_views(corpus, Setup::both,
                               TeacherMode::oracle_invariant, {}, 3, 1);
    CHECK(v.teacher_snr_db == 20.0);
    for (std::size_t b = 0; b < corpus.size(); ++b)
      CHECK(v.teacher_plans[b].specs.empty());
  }
  SUBCASE("recorded student SNR stays within [10,20]") {
    for (std::uint64_t step = 1; step <= 20; ++step) {
      ViewBatch v =
          sample_views(corpus, Setup::both, TeacherMode::variant, {}, 9, step);
      for (const DistortionPlan& p : v.student_plans) {
        CHECK(p.effective_snr_db >= 10.0);
        CHECK(p.effective_snr_db <= 20.0);
      }
    }
  }
}

TEST_CASE("train_distill: zero learning rate leaves the student unchanged") {
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  const auto before = [&]() {
    std::vector<std::vector<double>> snap;
    for (const Parameter& p : student.parameters())
      snap.emplace_back(p.value.data().begin(), p.value.data().end());
    return snap;
  }();

  TrainingConfig cfg = tiny_training();
  cfg.steps = 1;
  cfg.learning_rate = 0.0;
  auto corpus = small_corpus(8, 6);
  TrainResult r = train_distill(cfg, teacher, student, corpus, {});
  CHECK_FALSE(r.aborted);
  const auto& params = student.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].value.numel(); ++j)
      CHECK(params[i].value.data()[j] == before[i][j]);
}

TEST_CASE("train_distill is deterministic: identical records across reruns") {
  auto corpus = small_corpus(8, 7);
  TrainingConfig cfg = tiny_training();
  cfg.seed = 42;

  auto run = [&]() {
    TeacherModel teacher(small_cfg());
    StudentModel student = init_student_from_teacher(teacher, 13);
    return train_distill(cfg, teacher, student, corpus, {});
  };
  TrainResult a = run();
  TrainResult b = run();
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].serialize() == b.records[i].serialize());

  // thread count must not change the numbers either
  TrainingConfig cfg1 = cfg;
  cfg1.threads = 1;
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  TrainResult c = train_distill(cfg1, teacher, student, corpus, {});
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].serialize() == c.records[i].serialize());
}

TEST_CASE("teacher parameters are bit-identical after training") {
  TeacherModel teacher(small_cfg());
  const auto before = teacher.parameter_bytes();
  StudentModel student = init_student_from_teacher(teacher, 13);
  TrainingConfig cfg = tiny_training();
  cfg.steps = 8;
  auto corpus = small_corpus(8, 8);
  (void)train_distill(cfg, teacher, student, corpus, {});
  CHECK(teacher.parameter_bytes() == before);
}

TEST_CASE("heuristic lambdas recorded per step match heuristic_lambda exactly") {
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  TrainingConfig cfg = tiny_training();
  cfg.loss = LossKind::cl;
  cfg.weights.heuristic = true;
  cfg.steps = 6;
  auto corpus = small_corpus(8, 9);
  TrainResult r = train_distill(cfg, teacher, student, corpus, {});
  REQUIRE_FALSE(r.aborted);
  for (const RunRecord& rec : r.records) {
    CHECK(rec.report.lambda_sc_eff == heuristic_lambda(rec.student_snr_db));
    CHECK(rec.report.lambda_cc_eff == heuristic_lambda(rec.teacher_snr_db));
  }
}

TEST_CASE("single tiny-lr step does not increase the loss on its own batch") {
  // first-order descent check on the same batch
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  auto corpus = small_corpus(4, 10);
  TrainingConfig cfg = tiny_training();
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-6;
  cfg.steps = 1;
  cfg.seed = 3;

  TrainingConfig zero = cfg;
  zero.learning_rate = 0.0;
  StudentModel s0 = init_student_from_teacher(teacher, 13);
  TrainResult before = train_distill(zero, teacher, s0, corpus, {});

  StudentModel s1 = init_student_from_teacher(teacher, 13);
  TrainResult step = train_distill(cfg, teacher, s1, corpus, {});
  // recompute the same batch loss with the updated parameters and lr=0
  TrainResult after = train_distill(zero, teacher, s1, corpus, {});

  CHECK(after.records[0].report.l_total <=
        before.records[0].report.l_total + 1e-12);
  (void)step;
}

TEST_CASE("dev loss: recomputation oracle at step 0 with identity heads") {
  // student == teacher prefix, identity heads, kd with gamma=0:
  // dev loss must equal the mean scaled L1 between teacher taps and the
  // teacher's block-2 hidden state.
  EncoderConfig cfg = small_cfg();
  TeacherModel teacher(cfg);
  StudentModel student =
      init_student_from_teacher(teacher, 13, HeadInit::identity);

  auto dev = small_corpus(8, 11);
  // canonical order inside evaluate_dev_loss sorts by samples; do the same
  std::sort(dev.begin(), dev.end(),
            [](const AudioBuffer& a, const AudioBuffer& b) {
              return a.samples < b.samples;
            });

  TrainingConfig tc = tiny_training();
  tc.loss = LossKind::kd;
  tc.weights.gamma = 0.0;
  tc.batch_size = 4;

  const double got = evaluate_dev_loss(student, teacher, dev, tc);

  double want = 0.0;
  for (const AudioBuffer& utt : dev) {
    Tensor feats = logmel_frontend(utt, tc.frontend);
    auto taps = teacher.forward(feats);
    std::vector<Tensor> hidden = teacher.stack().forward_hidden(feats);
    const Tensor& z = hidden[1];
    const std::size_t T = z.shape()[0], D = z.shape()[1];
    double utt_loss = 0.0;
    for (const Tensor& tap : taps) {
      for (std::size_t t = 0; t < T; ++t) {
        double l1 = 0.0;
        for (std::size_t i = 0; i < D; ++i)
          l1 += std::fabs(tap.data()[t * D + i] - z.data()[t * D + i]);
        utt_loss += l1 / static_cast<double>(D);
      }
    }
    want += utt_loss;
  }
  want /= static_cast<double>(dev.size());
  CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("dev loss is invariant to dev-corpus ordering and repeatable") {
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  auto dev = small_corpus(8, 12);
  TrainingConfig tc = tiny_training();
  tc.batch_size = 4;

  const double a = evaluate_dev_loss(student, teacher, dev, tc);
  const double b = evaluate_dev_loss(student, teacher, dev, tc);
  CHECK(a == b);

  std::mt19937_64 rng(1);
  std::shuffle(dev.begin(), dev.end(), rng);
  const double c = evaluate_dev_loss(student, teacher, dev, tc);
  CHECK(a == c);
}

TEST_CASE("non-finite loss aborts with a diagnostic record") {
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  auto corpus = small_corpus(4, 13);
  // poison one weight; the forward pass then yields a NaN loss
  student.parameters()[0].value.mutable_data()[0] =
      std::numeric_limits<double>::quiet_NaN();
  TrainingConfig cfg = tiny_training();
  cfg.batch_size = 4;
  cfg.steps = 3;
  TrainResult r = train_distill(cfg, teacher, student, corpus, {});
  CHECK(r.aborted);
  CHECK_FALSE(r.abort_reason.empty());
  REQUIRE_FALSE(r.records.empty());
  CHECK_FALSE(std::isfinite(r.records.back().report.l_total));
}

TEST_CASE("select_checkpoint picks the argmin with earliest-step ties") {
  auto rec = [](int step, double dev) {
    RunRecord r;
    r.step = step;
    r.dev_loss = dev;
    return r;
  };
  SUBCASE("plain argmin") {
    std::vector<RunRecord> records{rec(100, 3.0), rec(200, 2.1), rec(300, 2.5)};
    CHECK(select_checkpoint(records, {100, 200, 300}) == 200);
  }
  SUBCASE("tie breaks to the earlier step") {
    std::vector<RunRecord> records{rec(100, 2.0), rec(200, 2.0)};
    CHECK(select_checkpoint(records, {100, 200}) == 100);
  }
  SUBCASE("single checkpoint selects itself") {
    std::vector<RunRecord> records{rec(100, 9.0)};
    CHECK(select_checkpoint(records, {100}) == 100);
  }
  SUBCASE("empty set is an error") {
    std::vector<RunRecord> records;
    CHECK_THROWS_AS(select_checkpoint(records, {}), std::invalid_argument);
  }
}

TEST_CASE("two-stage batch backward equals a single-tape end-to-end graph") {
  // the trainer differentiates through per-utterance tapes plus a batch
  // tape; the same gradients must come out of one flat graph
  TeacherModel teacher(small_cfg());
  StudentModel student = init_student_from_teacher(teacher, 13);
  auto corpus = small_corpus(3, 14);
  TrainingConfig tc = tiny_training();
  tc.batch_size = 3;

  std::vector<Tensor> feats;
  std::vector<Tensor> targets;
  for (const AudioBuffer& utt : corpus) {
    Tensor f = logmel_frontend(utt, tc.frontend);
    feats.push_back(f);
    auto taps = teacher.forward(f);
    targets.push_back(stack_first(std::span<const Tensor>(taps.data(), 3)));
  }
  Tensor teacher_batch = stack_first(targets);
  LossWeights w;

  // route 1: single tape through everything
  Tape flat;
  StudentModel::Bound bound = student.bind(&flat);
  std::vector<Tensor> preds;
  for (const Tensor& f : feats)
    preds.push_back(student.forward(bound, f).predictions);
  Tensor flat_loss = cl_loss({stack_first(preds), teacher_batch}, w);
  GradientMap flat_grads = flat.backward(flat_loss);

  // route 2: per-utterance tapes + batch tape over prediction leaves
  std::vector<Tape> tapes(3);
  std::vector<StudentModel::Bound> bounds(3);
  std::vector<StudentModel::Forward> fwd(3);
  for (std::size_t b = 0; b < 3; ++b) {
    bounds[b] = student.bind(&tapes[b]);
    fwd[b] = student.forward(bounds[b], feats[b]);
  }
  Tape batch_tape;
  std::vector<Tensor> leaves(3);
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor leaf = fwd[b].predictions;
    leaf.set_requires_grad(true);
    leaves[b] = batch_tape.watch(leaf);
  }
  Tensor staged_loss = cl_loss({stack_first(leaves), teacher_batch}, w);
  CHECK(staged_loss.value() == flat_loss.value());
  GradientMap bg = batch_tape.backward(staged_loss);

  const auto& params = student.parameters();
  std::vector<std::vector<double>> staged(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    staged[i].assign(params[i].value.numel(), 0.0);
  for (std::size_t b = 0; b < 3; ++b) {
    GradientMap g =
        tapes[b].backward_from(fwd[b].predictions, bg.at(leaves[b]).data());
    std::size_t i = 0;
    for (const Tensor& t : bounds[b].trunk) {
      const Tensor& gt = g.at(t);
      for (std::size_t j = 0; j < gt.numel(); ++j) staged[i][j] += gt.data()[j];
      ++i;
    }
    for (const Tensor& t : bounds[b].heads) {
      const Tensor& gt = g.at(t);
      for (std::size_t j = 0; j < gt.numel(); ++j) staged[i][j] += gt.data()[j];
      ++i;
    }
  }

  std::vector<Tensor> flat_bound = bound.trunk;
  flat_bound.insert(flat_bound.end(), bound.heads.begin(), bound.heads.end());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = flat_grads.at(flat_bound[i]);
    for (std::size_t j = 0; j < g.numel(); ++j)
      CHECK(staged[i][j] == doctest::Approx(g.data()[j]).epsilon(1e-10));
  }
}
