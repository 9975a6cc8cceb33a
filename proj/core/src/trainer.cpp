// core/src/trainer.cpp

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

#include "corrkd/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace corrkd {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream per (seed, step, utterance, role).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t step,
                          std::uint64_t utt, std::uint64_t role) {
  std::uint64_t s = seed;
  s ^= 0x9e3779b97f4a7c15ULL * (step + 1);
  s ^= 0xc2b2ae3d27d4eb4fULL * (utt + 1);
  s ^= 0x165667b19e3779f9ULL * (role + 1);
  return splitmix64(s);
}

// Deterministic regardless of thread count: each index writes its own slot.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  int tc = threads;
  if (tc <= 0) tc = static_cast<int>(std::thread::hardware_concurrency());
  tc = std::max(1, std::min<int>(tc, static_cast<int>(n)));
  if (tc == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int t = 0; t < tc; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

int weighted_pick(std::span<const double> weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  CORRKD_CHECK(total > 0.0, "distortion policy: all weights are zero");
  std::uniform_real_distribution<double> u(0.0, total);
  double x = u(rng);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x -= weights[i];
    if (x <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

const char* setup_name(Setup s) {
  return s == Setup::student_only ? "student_only" : "both";
}
const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kd: return "kd";
    case LossKind::cl: return "cl";
    case LossKind::bt_reference: return "bt_reference";
  }
  return "?";
}
const char* teacher_mode_name(TeacherMode m) {
  return m == TeacherMode::variant ? "variant" : "oracle_invariant";
}

// ============================================================================
// view sampling
// ============================================================================

DistortionPlan sample_plan(const DistortionPolicy& policy,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<DistortionSpec> specs;

  // non-additive first so the recorded SNR of the additive mix is exact
  if (unit(rng) < policy.p_nonadditive) {
    std::uniform_real_distribution<double> rt(0.15, 0.5);
    std::uniform_real_distribution<double> semis(-4.0, 4.0);
    std::uniform_real_distribution<double> logf(std::log(300.0),
                                                std::log(4000.0));
    std::uniform_real_distribution<double> qdist(2.0, 8.0);
    switch (weighted_pick(policy.nonadditive_weights, rng)) {
      case 0:
        specs.push_back(DistortionSpec::make_reverb(rt(rng)));
        break;
      case 1:
        specs.push_back(DistortionSpec::make_pitch(semis(rng)));
        break;
      default:
        specs.push_back(
            DistortionSpec::make_band_reject(std::exp(logf(rng)), qdist(rng)));
        break;
    }
  }
  std::uniform_real_distribution<double> snr(10.0, 20.0);
  const double snr_db = snr(rng);
  switch (weighted_pick(policy.additive_weights, rng)) {
    case 0:
      specs.push_back(DistortionSpec::make_gaussian(snr_db));
      break;
    case 1:
      specs.push_back(DistortionSpec::make_noise(NoiseColor::white, snr_db));
      break;
    case 2:
      specs.push_back(DistortionSpec::make_noise(NoiseColor::pink, snr_db));
      break;
    default:
      specs.push_back(DistortionSpec::make_noise(NoiseColor::babble, snr_db));
      break;
  }
  std::uint64_t inner = seed;
  return make_plan(std::move(specs), splitmix64(inner));
}

ViewBatch sample_views(std::span<const AudioBuffer> clean_batch, Setup setup,
                       TeacherMode teacher_mode, const DistortionPolicy& policy,
                       std::uint64_t seed, std::uint64_t step) {
  CORRKD_CHECK(!clean_batch.empty(), "sample_views: empty batch");
  ViewBatch out;
  const std::size_t B = clean_batch.size();
  out.teacher_views.resize(B);
  out.student_views.resize(B);
  out.teacher_plans.resize(B);
  out.student_plans.resize(B);

  double t_snr = 0.0, s_snr = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    out.student_plans[b] =
        sample_plan(policy, stream_seed(seed, step, b, /*role=*/2));
    const bool teacher_clean =
        setup == Setup::student_only || teacher_mode == TeacherMode::oracle_invariant;
    if (teacher_clean) {
      out.teacher_plans[b] = make_plan({}, 0);  // clean pass-through, SNR 20
    } else {
      out.teacher_plans[b] =
          sample_plan(policy, stream_seed(seed, step, b, /*role=*/1));
    }
    t_snr += out.teacher_plans[b].effective_snr_db;
    s_snr += out.student_plans[b].effective_snr_db;
  }
  out.teacher_snr_db = t_snr / static_cast<double>(B);
  out.student_snr_db = s_snr / static_cast<double>(B);

  for (std::size_t b = 0; b < B; ++b) {
    out.teacher_views[b] = out.teacher_plans[b].specs.empty()
                               ? clean_batch[b]
                               : apply_plan(clean_batch[b], out.teacher_plans[b]);
    out.student_views[b] = apply_plan(clean_batch[b], out.student_plans[b]);
  }
  return out;
}

// ============================================================================
// optimizer
// ============================================================================

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2,
                             double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void AdamOptimizer::step(std::vector<Parameter>& params,
                         const std::vector<std::vector<double>>& grads) {
  CORRKD_CHECK(params.size() == grads.size(),
               "adam: " << params.size() << " params vs " << grads.size()
                        << " gradients");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value.numel(), 0.0);
      v_[i].assign(params[i].value.numel(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].value.mutable_data();
    const std::vector<double>& g = grads[i];
    CORRKD_CHECK(g.size() == data.size(), "adam: gradient size mismatch for "
                                              << params[i].name);
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      data[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

// ============================================================================
// loss assembly
// ============================================================================

namespace {

// Mean over (p,t) of the reference redundancy-reduction loss on the
// per-(p,t) [B,D] slices. Components land in `report` under the cc keys.
Tensor bt_reference_loss(const Tensor& student_bptd, const Tensor& teacher_bptd,
                         double lambda, LossReport* report) {
  const Shape& s = student_bptd.shape();
  const std::size_t B = s[0], P = s[1], T = s[2], D = s[3];
  Tensor flat_s = reshape(student_bptd, {B, P * T * D});
  Tensor flat_t = reshape(teacher_bptd, {B, P * T * D});
  Tensor total;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t off = (p * T + t) * D;
      Tensor ys = slice_last(flat_s, off, D);
      Tensor yt = slice_last(flat_t, off, D);
      Tensor l = bt_loss(ys, yt, lambda);
      total = total.defined() ? add(total, l) : l;
    }
  }
  total = mul_scalar(total, 1.0 / (static_cast<double>(P) * T));
  if (report) {
    *report = LossReport{};
    report->l_total = total.value();
    report->lambda_cc_eff = lambda;
  }
  return total;
}

struct BatchTensors {
  Tensor student;  // [B,P,T,D], tracked when built on a tape
  Tensor teacher;  // [B,P,T,D], never tracked
};

Tensor configured_loss(LossKind kind, const BatchTensors& bt,
                       const LossWeights& weights, LossReport* report) {
  switch (kind) {
    case LossKind::kd: {
      Tensor l = kd_loss({bt.student, bt.teacher}, weights.gamma, report);
      if (report) {
        report->lambda_cc_eff = 0.0;
        report->lambda_sc_eff = 0.0;
      }
      return l;
    }
    case LossKind::cl:
      return cl_loss({bt.student, bt.teacher}, weights, report);
    case LossKind::bt_reference:
      return bt_reference_loss(bt.student, bt.teacher, weights.lambda_cc,
                               report);
  }
  CORRKD_CHECK(false, "configured_loss: bad loss kind");
  return {};
}

LossWeights resolve_weights(const TrainingConfig& cfg, double teacher_snr_db,
                            double student_snr_db) {
  LossWeights w = cfg.weights;
  if (w.heuristic) {
    w.lambda_cc = heuristic_lambda(teacher_snr_db);
    w.lambda_sc = heuristic_lambda(student_snr_db);
  }
  return w;
}

// Canonical dev order: lexicographic by samples, so dev loss is independent
// of the caller's corpus ordering.
std::vector<std::size_t> canonical_order(std::span<const AudioBuffer> dev) {
  std::vector<std::size_t> idx(dev.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return dev[a].samples < dev[b].samples;
  });
  return idx;
}

struct DevCache {
  bool ready = false;
  std::vector<Tensor> features;              // per dev utterance (canonical)
  std::vector<std::array<Tensor, 3>> taps;   // teacher taps on clean input
};

double dev_loss_impl(const StudentModel& student, const TeacherModel& teacher,
                     std::span<const AudioBuffer> dev,
                     const TrainingConfig& cfg, DevCache& cache, int threads) {
  CORRKD_CHECK(!dev.empty(), "evaluate_dev_loss: empty dev corpus");
  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
  CORRKD_CHECK(dev.size() >= B,
               "evaluate_dev_loss: dev corpus smaller than one batch ("
                   << dev.size() << " < " << B << ")");
  if (!cache.ready) {
    const std::vector<std::size_t> order = canonical_order(dev);
    cache.features.resize(dev.size());
    cache.taps.resize(dev.size());
    parallel_for(dev.size(), threads, [&](std::size_t i) {
      cache.features[i] = logmel_frontend(dev[order[i]], cfg.frontend);
      cache.taps[i] = teacher.forward(cache.features[i]);
    });
    cache.ready = true;
  }

  double total = 0.0;
  std::size_t n_batches = 0;
  std::vector<StudentModel::Forward> fwd(B);
  for (std::size_t start = 0; start + B <= cache.features.size(); start += B) {
    parallel_for(B, threads, [&](std::size_t b) {
      fwd[b] = student.forward(cache.features[start + b]);
    });
    std::vector<Tensor> preds, targets;
    for (std::size_t b = 0; b < B; ++b) {
      preds.push_back(fwd[b].predictions);
      std::array<Tensor, 3>& taps = cache.taps[start + b];
      targets.push_back(stack_first(std::span<const Tensor>(taps.data(), 3)));
    }
    BatchTensors bt{stack_first(preds), stack_first(targets)};
    // clean inputs on both sides: SNR 20 on both, heuristic resolves there
    LossWeights w = resolve_weights(cfg, 20.0, 20.0);
    total += configured_loss(cfg.loss, bt, w, nullptr).value();
    ++n_batches;
  }
  return total / static_cast<double>(n_batches);
}

}  // namespace

double evaluate_dev_loss(const StudentModel& student,
                         const TeacherModel& teacher,
                         std::span<const AudioBuffer> dev_corpus,
                         const TrainingConfig& config) {
  DevCache cache;
  return dev_loss_impl(student, teacher, dev_corpus, config, cache,
                       config.threads);
}

// ============================================================================
// run records
// ============================================================================

std::string RunRecord::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "step=" << step << " student_snr_db=" << student_snr_db
     << " teacher_snr_db=" << teacher_snr_db << " " << report.serialize();
  if (dev_loss.has_value()) os << " dev_loss=" << *dev_loss;
  return os.str();
}

// ============================================================================
// training loop
// ============================================================================

TrainResult train_distill(const TrainingConfig& config,
                          const TeacherModel& teacher, StudentModel& student,
                          std::span<const AudioBuffer> corpus,
                          std::span<const AudioBuffer> dev_corpus,
                          const CheckpointSink& sink) {
  CORRKD_CHECK(!corpus.empty(), "train_distill: empty corpus");
  CORRKD_CHECK(config.steps >= 1, "train_distill: steps must be >= 1");
  CORRKD_CHECK(config.batch_size >= 1, "train_distill: batch_size must be >= 1");
  if (config.loss != LossKind::kd) {
    CORRKD_CHECK(config.batch_size >= 2,
                 "train_distill: correlation losses need batch_size >= 2");
  }

  TrainResult result;
  AdamOptimizer opt(config.learning_rate);
  DevCache dev_cache;
  const std::size_t B = static_cast<std::size_t>(config.batch_size);
  auto& params = student.parameters();

  for (int step = 1; step <= config.steps; ++step) {
    // -- batch selection --
    std::mt19937_64 batch_rng(
        stream_seed(config.seed, static_cast<std::uint64_t>(step), 0, 0));
    std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
    std::vector<AudioBuffer> clean(B);
    for (std::size_t b = 0; b < B; ++b) clean[b] = corpus[pick(batch_rng)];

    // -- views and features --
    ViewBatch views =
        sample_views(clean, config.setup, config.teacher_mode, config.policy,
                     config.seed, static_cast<std::uint64_t>(step));
    std::vector<Tensor> teacher_feat(B), student_feat(B);
    parallel_for(B, config.threads, [&](std::size_t b) {
      teacher_feat[b] = logmel_frontend(views.teacher_views[b], config.frontend);
      student_feat[b] = logmel_frontend(views.student_views[b], config.frontend);
    });

    // -- teacher targets (eager, frozen) --
    std::vector<Tensor> targets(B);
    parallel_for(B, config.threads, [&](std::size_t b) {
      std::array<Tensor, 3> taps = teacher.forward(teacher_feat[b]);
      targets[b] = stack_first(std::span<const Tensor>(taps.data(), 3));
    });

    // -- student forward on per-utterance tapes --
    std::vector<Tape> utt_tapes(B);
    std::vector<StudentModel::Bound> bounds(B);
    std::vector<StudentModel::Forward> fwd(B);
    parallel_for(B, config.threads, [&](std::size_t b) {
      bounds[b] = student.bind(&utt_tapes[b]);
      fwd[b] = student.forward(bounds[b], student_feat[b]);
    });

    // -- batch graph over prediction leaves --
    Tape batch_tape;
    std::vector<Tensor> pred_leaves(B);
    for (std::size_t b = 0; b < B; ++b) {
      // leaf shares storage with the per-utterance forward output
      Tensor leaf = fwd[b].predictions;
      leaf.set_requires_grad(true);
      pred_leaves[b] = batch_tape.watch(leaf);
    }
    BatchTensors bt;
    bt.student = stack_first(pred_leaves);
    bt.teacher = stack_first(targets);

    LossWeights weights =
        resolve_weights(config, views.teacher_snr_db, views.student_snr_db);
    RunRecord record;
    record.step = step;
    record.student_snr_db = views.student_snr_db;
    record.teacher_snr_db = views.teacher_snr_db;
    Tensor loss = configured_loss(config.loss, bt, weights, &record.report);

    if (!std::isfinite(record.report.l_total)) {
      record.dev_loss.reset();
      result.records.push_back(record);
      result.aborted = true;
      std::ostringstream os;
      os << "non-finite loss at step " << step << ": "
         << record.report.serialize();
      result.abort_reason = os.str();
      return result;
    }

    // -- two-stage backward: batch graph, then each utterance graph --
    GradientMap batch_grads = batch_tape.backward(loss);
    std::vector<std::vector<double>> total_grads(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      total_grads[i].assign(params[i].value.numel(), 0.0);

    std::vector<GradientMap> utt_grads(B);
    parallel_for(B, config.threads, [&](std::size_t b) {
      const Tensor& seed_grad = batch_grads.at(pred_leaves[b]);
      utt_grads[b] = utt_tapes[b].backward_from(fwd[b].predictions,
                                                seed_grad.data());
    });
    for (std::size_t b = 0; b < B; ++b) {
      const StudentModel::Bound& bound = bounds[b];
      std::size_t i = 0;
      for (const Tensor& t : bound.trunk) {
        const Tensor& g = utt_grads[b].at(t);
        for (std::size_t j = 0; j < g.numel(); ++j)
          total_grads[i][j] += g.data()[j];
        ++i;
      }
      for (const Tensor& t : bound.heads) {
        const Tensor& g = utt_grads[b].at(t);
        for (std::size_t j = 0; j < g.numel(); ++j)
          total_grads[i][j] += g.data()[j];
        ++i;
      }
    }

    opt.step(params, total_grads);

    // -- dev evaluation / checkpointing --
    if (config.dev_eval_every > 0 && step % config.dev_eval_every == 0 &&
        !dev_corpus.empty()) {
      const double dl = dev_loss_impl(student, teacher, dev_corpus, config,
                                      dev_cache, config.threads);
      record.dev_loss = dl;
      result.checkpoint_steps.push_back(step);
      if (sink) sink(step, student, dl);
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

int select_checkpoint(const std::vector<RunRecord>& records,
                      const std::vector<int>& checkpoint_steps) {
  CORRKD_CHECK(!checkpoint_steps.empty(),
               "select_checkpoint: no checkpoints were written");
  int best_step = -1;
  double best = 0.0;
  for (const RunRecord& r : records) {
    if (!r.dev_loss.has_value()) continue;
    if (std::find(checkpoint_steps.begin(), checkpoint_steps.end(), r.step) ==
        checkpoint_steps.end())
      continue;
    if (best_step < 0 || *r.dev_loss < best) {
      best = *r.dev_loss;
      best_step = r.step;
    }
  }
  CORRKD_CHECK(best_step >= 0,
               "select_checkpoint: no checkpointed record carries a dev loss");
  return best_step;
}

}  // namespace corrkd
