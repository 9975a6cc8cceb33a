// core/include/corrkd/trainer.hpp

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

#ifndef CORRKD_TRAINER_HPP_
#define CORRKD_TRAINER_HPP_

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrkd/augment.hpp"
#include "corrkd/features.hpp"
#include "corrkd/losses.hpp"
#include "corrkd/model.hpp"

namespace corrkd {

/// Setup 1 distorts only the student input; Setup 2 distorts teacher and
/// student independently.
enum class Setup { student_only, both };
enum class LossKind { kd, cl, bt_reference };

/// `variant` feeds the teacher its own (possibly distorted) view; the
/// default random-initialized teacher then encodes distortion identity.
/// `oracle_invariant` always feeds the teacher the clean waveform, isolating
/// a perfectly noise-invariant teacher.
enum class TeacherMode { variant, oracle_invariant };

const char* setup_name(Setup s);
const char* loss_kind_name(LossKind k);
const char* teacher_mode_name(TeacherMode m);

/// Per-view distortion sampling: one additive spec always (kind by weight,
/// SNR uniform in [10,20)), plus one non-additive spec with probability
/// p_nonadditive, applied before the additive one.
struct DistortionPolicy {
  double p_nonadditive = 0.5;
  // gaussian, white, pink, babble
  std::array<double, 4> additive_weights{1.0, 1.0, 1.0, 1.0};
  // reverb, pitch_shift, band_reject
  std::array<double, 3> nonadditive_weights{1.0, 1.0, 1.0};
};

struct TrainingConfig {
  Setup setup = Setup::both;
  LossKind loss = LossKind::cl;
  TeacherMode teacher_mode = TeacherMode::variant;
  LossWeights weights{};
  int steps = 2000;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int dev_eval_every = 200;
  DistortionPolicy policy{};
  FrontendConfig frontend{};
  int threads = 0;  // 0 = use hardware concurrency
};

/// One line of the training log. Serialization uses a stable key order and
/// %.17g doubles so reruns diff byte-identically.
struct RunRecord {
  int step = 0;
  LossReport report{};
  std::optional<double> dev_loss;
  double student_snr_db = 20.0;  // batch mean of effective view SNRs
  double teacher_snr_db = 20.0;
  std::string serialize() const;
};

struct ViewBatch {
  std::vector<AudioBuffer> teacher_views, student_views;
  std::vector<DistortionPlan> teacher_plans, student_plans;
  double teacher_snr_db = 20.0;  // batch means
  double student_snr_db = 20.0;
};

/// Sample one distortion plan from the policy (seeded, deterministic).
DistortionPlan sample_plan(const DistortionPolicy& policy,
                           std::uint64_t stream_seed);

/// Build teacher/student views for a batch of clean utterances.
ViewBatch sample_views(std::span<const AudioBuffer> clean_batch, Setup setup,
                       TeacherMode teacher_mode, const DistortionPolicy& policy,
                       std::uint64_t seed, std::uint64_t step);

/// Adam with bias correction; state per parameter, updates in place.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);
  void step(std::vector<Parameter>& params,
            const std::vector<std::vector<double>>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainResult {
  std::vector<RunRecord> records;
  std::vector<int> checkpoint_steps;
  bool aborted = false;
  std::string abort_reason;
};

/// Called at every dev evaluation; gives the CLI a hook to persist
/// checkpoints without the trainer touching the filesystem.
using CheckpointSink =
    std::function<void(int step, const StudentModel& student, double dev_loss)>;

/// Distillation pre-training. Only the student is updated; the teacher is
/// read-only throughout. Deterministic given (config, corpus contents).
TrainResult train_distill(const TrainingConfig& config,
                          const TeacherModel& teacher, StudentModel& student,
                          std::span<const AudioBuffer> corpus,
                          std::span<const AudioBuffer> dev_corpus,
                          const CheckpointSink& sink = nullptr);

/// Configured loss on clean inputs to both models, averaged over dev
/// batches; no updates. The dev set is canonicalized internally, so the
/// result does not depend on the caller's ordering.
double evaluate_dev_loss(const StudentModel& student,
                         const TeacherModel& teacher,
                         std::span<const AudioBuffer> dev_corpus,
                         const TrainingConfig& config);

/// Step with the lowest dev loss; ties break toward the earliest step.
int select_checkpoint(const std::vector<RunRecord>& records,
                      const std::vector<int>& checkpoint_steps);

}  // namespace corrkd

#endif  // CORRKD_TRAINER_HPP_
