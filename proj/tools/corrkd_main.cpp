// tools/corrkd_main.cpp

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "corrkd/config.hpp"
#include "corrkd/grad_suite.hpp"

namespace fs = std::filesystem;
using namespace corrkd;

namespace {

struct AugmentArgs {
  std::string in_wav, out_wav;
  std::optional<double> gaussian_snr;
  std::string noise_color;  // white|pink|babble, with --snr
  std::optional<double> noise_snr;
  std::optional<double> reverb_rt60;
  std::optional<double> pitch_semitones;
  std::optional<double> band_center_hz;
  double band_q = 5.0;
  std::uint64_t seed = 0;
};

int run_augment(const AugmentArgs& args) {
  AudioBuffer in = read_wav(args.in_wav);

  std::vector<DistortionSpec> specs;
  // non-additive first, additive last, matching the training policy order
  if (args.reverb_rt60) specs.push_back(DistortionSpec::make_reverb(*args.reverb_rt60));
  if (args.pitch_semitones)
    specs.push_back(DistortionSpec::make_pitch(*args.pitch_semitones));
  if (args.band_center_hz)
    specs.push_back(DistortionSpec::make_band_reject(*args.band_center_hz, args.band_q));
  if (args.gaussian_snr)
    specs.push_back(DistortionSpec::make_gaussian(*args.gaussian_snr));
  if (!args.noise_color.empty()) {
    CORRKD_CHECK(args.noise_snr.has_value(),
                 "augment: --noise needs --snr for the target SNR");
    NoiseColor color;
    if (args.noise_color == "white") color = NoiseColor::white;
    else if (args.noise_color == "pink") color = NoiseColor::pink;
    else if (args.noise_color == "babble") color = NoiseColor::babble;
    else
      throw std::invalid_argument("augment: --noise must be white, pink or babble, got '" +
                                  args.noise_color + "'");
    specs.push_back(DistortionSpec::make_noise(color, *args.noise_snr));
  }

  DistortionPlan plan = make_plan(std::move(specs), args.seed);
  AudioBuffer out = apply_plan(in, plan);
  write_wav(args.out_wav, out);
  std::printf("plan=%s snr=%.1f samples=%zu rate=%d\n", plan.describe().c_str(),
              plan.effective_snr_db, out.samples.size(), out.sample_rate_hz);
  return 0;
}

RunConfig assemble_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = parse_run_config_file(config_path);
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    CORRKD_CHECK(eq != std::string::npos,
                 "--set expects key=value, got '" << kv << "'");
    apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<AudioBuffer> training_corpus(const RunConfig& cfg,
                                         const std::string& corpus_dir) {
  if (!corpus_dir.empty())
    return load_wav_corpus(corpus_dir, cfg.training.frontend.sample_rate_hz);
  CorpusConfig cc;
  cc.n_utterances = cfg.corpus_size;
  cc.seconds = cfg.utterance_seconds;
  cc.sample_rate_hz = cfg.training.frontend.sample_rate_hz;
  cc.seed = cfg.corpus_seed;
  return make_synthetic_corpus(cc);
}

std::vector<AudioBuffer> dev_corpus_for(const RunConfig& cfg) {
  CorpusConfig cc;
  cc.n_utterances = cfg.dev_size;
  cc.seconds = cfg.utterance_seconds;
  cc.sample_rate_hz = cfg.training.frontend.sample_rate_hz;
  cc.seed = cfg.corpus_seed + 0x0de5ULL;  // disjoint from the train stream
  return make_synthetic_corpus(cc);
}

int run_distill(const std::string& config_path,
                const std::vector<std::string>& overrides,
                const std::string& corpus_dir, const std::string& out_dir) {
  RunConfig cfg = assemble_config(config_path, overrides);
  fs::create_directories(out_dir);

  EncoderConfig enc = cfg.encoder;
  enc.seed = cfg.model_seed;
  TeacherModel teacher(enc);
  StudentModel student = init_student_from_teacher(teacher, cfg.head_seed);

  std::vector<AudioBuffer> corpus = training_corpus(cfg, corpus_dir);
  std::vector<AudioBuffer> dev = dev_corpus_for(cfg);

  std::ofstream log(fs::path(out_dir) / "run.log", std::ios::trunc);
  CORRKD_CHECK(log.good(), "distill: cannot open run log in " << out_dir);
  std::ofstream cfg_out(fs::path(out_dir) / "config.resolved");
  cfg_out << serialize_run_config(cfg);
  cfg_out.close();

  CheckpointSink sink = [&](int step, const StudentModel& s, double) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%06d", step);
    s.save(fs::path(out_dir) / name);
  };

  TrainResult result =
      train_distill(cfg.training, teacher, student, corpus, dev, sink);
  for (const RunRecord& r : result.records) log << r.serialize() << "\n";
  log.close();

  if (result.aborted) {
    std::fprintf(stderr, "distill aborted: %s\n", result.abort_reason.c_str());
    return 2;
  }
  if (!result.checkpoint_steps.empty()) {
    const int best = select_checkpoint(result.records, result.checkpoint_steps);
    char name[32];
    std::snprintf(name, sizeof(name), "step_%06d", best);
    std::ofstream sel(fs::path(out_dir) / "selected.txt", std::ios::trunc);
    sel << name << "\n";
    std::printf("selected=%s\n", name);
  }
  std::printf("steps=%d records=%zu out=%s\n", cfg.training.steps,
              result.records.size(), out_dir.c_str());
  return 0;
}

int run_probe(const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& checkpoint, const std::string& corpus_dir) {
  RunConfig cfg = assemble_config(config_path, overrides);
  StudentModel student = StudentModel::load(checkpoint);

  std::vector<AudioBuffer> corpus;
  if (!corpus_dir.empty()) {
    corpus = load_wav_corpus(corpus_dir, cfg.training.frontend.sample_rate_hz);
  } else {
    CorpusConfig cc;
    cc.n_utterances = cfg.probe_corpus_size;
    cc.seconds = cfg.utterance_seconds;
    cc.sample_rate_hz = cfg.training.frontend.sample_rate_hz;
    cc.seed = cfg.corpus_seed + 0x9200beULL;  // disjoint from train and dev
    corpus = make_synthetic_corpus(cc);
  }

  ProbeBuildConfig pb;
  pb.frontend = cfg.training.frontend;
  pb.seed = cfg.forest.seed;
  pb.threads = cfg.training.threads;
  ProbeDataset data = build_probe_dataset(student, corpus, pb);
  RandomForest forest = forest_train(data, cfg.forest);
  ProbeReport report = probe_accuracy(forest, data);
  report.seed = cfg.forest.seed;
  std::printf("%s\n", report.serialize().c_str());
  return 0;
}

int run_gradcheck() {
  GradSuiteConfig cfg;
  GradSuiteResult result = run_gradient_suite(cfg);
  double worst_kd = 0.0, worst_bt = 0.0, worst_cl = 0.0, worst_model = 0.0;
  for (const auto& item : result.items) {
    if (item.name.rfind("kd_loss", 0) == 0)
      worst_kd = std::max(worst_kd, item.max_rel_err);
    else if (item.name.rfind("bt_loss", 0) == 0)
      worst_bt = std::max(worst_bt, item.max_rel_err);
    else if (item.name.rfind("cl_loss", 0) == 0)
      worst_cl = std::max(worst_cl, item.max_rel_err);
    else
      worst_model = std::max(worst_model, item.max_rel_err);
    if (!item.passed)
      std::fprintf(stderr, "FAIL %s\n%s\n", item.name.c_str(),
                   item.detail.c_str());
  }
  std::printf("kd_loss max_rel_err=%.3g\n", worst_kd);
  std::printf("bt_loss max_rel_err=%.3g\n", worst_bt);
  std::printf("cl_loss max_rel_err=%.3g\n", worst_cl);
  std::printf("student_forward max_rel_err=%.3g\n", worst_model);
  std::printf("checks=%zu tol=%.1g runtime=%.1fs overall=%s\n",
              result.items.size(), 1e-4, result.seconds,
              result.passed ? "pass" : "FAIL");
  return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "corrkd: correlation-based knowledge distillation for noise-robust "
      "representations"};
  app.require_subcommand(1);

  // ---- augment ----
  AugmentArgs aug;
  CLI::App* augment =
      app.add_subcommand("augment", "distort one WAV file and report the SNR");
  augment->add_option("--in", aug.in_wav, "input mono 16-bit PCM WAV")
      ->required();
  augment->add_option("--out", aug.out_wav, "output WAV")->required();
  augment->add_option("--gaussian-snr", aug.gaussian_snr,
                      "add gaussian noise at this SNR (dB, [10,20))");
  augment->add_option("--noise", aug.noise_color,
                      "add synthetic noise: white | pink | babble");
  augment->add_option("--snr", aug.noise_snr, "target SNR for --noise (dB)");
  augment->add_option("--reverb", aug.reverb_rt60, "reverb RT60 in seconds");
  augment->add_option("--pitch", aug.pitch_semitones,
                      "pitch shift in semitones (|x| <= 12)");
  augment->add_option("--band-center", aug.band_center_hz,
                      "band-reject center frequency in Hz");
  augment->add_option("--band-q", aug.band_q, "band-reject Q (default 5)");
  augment->add_option("--plan-seed", aug.seed, "seed for noise draws");

  // ---- distill ----
  std::string config_path, corpus_dir, out_dir = "run";
  std::vector<std::string> overrides;
  CLI::App* distill = app.add_subcommand(
      "distill", "teacher/student distillation pre-training");
  distill->add_option("--config", config_path, "key=value config file");
  distill->add_option("--set", overrides,
                      "override a config key, e.g. --set loss=cl (repeatable; "
                      "overrides the file)");
  distill->add_option("--corpus", corpus_dir,
                      "directory of mono WAVs (default: built-in synthetic "
                      "corpus)");
  distill->add_option("--out", out_dir, "output directory (default ./run)");

  // ---- probe ----
  std::string probe_config, probe_corpus, checkpoint;
  std::vector<std::string> probe_overrides;
  CLI::App* probe = app.add_subcommand(
      "probe", "noise-classification probe on a student checkpoint");
  probe->add_option("--checkpoint", checkpoint,
                    "checkpoint stem (expects <stem>.manifest/.blob)")
      ->required();
  probe->add_option("--config", probe_config, "key=value config file");
  probe->add_option("--set", probe_overrides, "override a config key");
  probe->add_option("--corpus", probe_corpus,
                    "directory of mono WAVs (default: built-in synthetic "
                    "corpus)");

  // ---- gradcheck ----
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck",
      "finite-difference verification of every loss and the student forward");

  // ---- config-keys ----
  CLI::App* keys =
      app.add_subcommand("config-keys", "list every config key with its doc");

  CLI11_PARSE(app, argc, argv);

  try {
    if (augment->parsed()) return run_augment(aug);
    if (distill->parsed())
      return run_distill(config_path, overrides, corpus_dir, out_dir);
    if (probe->parsed())
      return run_probe(probe_config, probe_overrides, checkpoint, probe_corpus);
    if (gradcheck->parsed()) return run_gradcheck();
    if (keys->parsed()) {
      std::printf("%s", run_config_key_table().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
