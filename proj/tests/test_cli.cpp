// tests/test_cli.cpp

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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <unistd.h>

#include <doctest.h>

#include "corrkd/audio.hpp"

using namespace corrkd;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return CORRKD_CLI_PATH; }

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() /
               ("corrkd_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

AudioBuffer tone(double freq, double amp, std::size_t n, int rate) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate);
  return a;
}

}  // namespace

TEST_CASE("augment with no distortion flags copies samples byte-identically") {
  const fs::path dir = fresh_dir("identity");
  write_wav(dir / "in.wav", tone(440, 0.3, 8000, 16000));
  const int rc = run(std::string(cli_path()) + " augment --in " +
                     (dir / "in.wav").string() + " --out " +
                     (dir / "out.wav").string() + " > " +
                     (dir / "stdout.txt").string());
  CHECK(rc == 0);
  // data payloads agree byte for byte
  CHECK(slurp(dir / "in.wav") == slurp(dir / "out.wav"));
  CHECK(slurp(dir / "stdout.txt").find("snr=20.0") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("augment at a target SNR prints the plan record") {
  const fs::path dir = fresh_dir("gauss");
  write_wav(dir / "in.wav", tone(440, 0.3, 8000, 16000));
  const int rc = run(std::string(cli_path()) + " augment --in " +
                     (dir / "in.wav").string() + " --out " +
                     (dir / "out.wav").string() +
                     " --gaussian-snr 15 > " + (dir / "stdout.txt").string());
  CHECK(rc == 0);
  const std::string out = slurp(dir / "stdout.txt");
  CHECK(out.find("snr=15.0") != std::string::npos);

  // measured SNR of the written file against the input matches the target
  AudioBuffer in = read_wav(dir / "in.wav");
  AudioBuffer mixed = read_wav(dir / "out.wav");
  AudioBuffer residual;
  residual.sample_rate_hz = 16000;
  residual.samples.resize(in.samples.size());
  for (std::size_t i = 0; i < in.samples.size(); ++i)
    residual.samples[i] = mixed.samples[i] - in.samples[i];
  // 16-bit quantization limits the round trip here, not the mixer
  CHECK(measure_snr(in, residual) == doctest::Approx(15.0).epsilon(0.01));
  fs::remove_all(dir);
}

TEST_CASE("augment rejects stereo input with a nonzero exit") {
  const fs::path dir = fresh_dir("stereo");
  // minimal stereo wav
  std::vector<unsigned char> b;
  auto u32 = [&](std::uint32_t x) {
    for (int i = 0; i < 4; ++i) b.push_back((x >> (8 * i)) & 0xff);
  };
  auto u16 = [&](std::uint16_t x) {
    for (int i = 0; i < 2; ++i) b.push_back((x >> (8 * i)) & 0xff);
  };
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  u32(36 + 8);
  b.insert(b.end(), {'W', 'A', 'V', 'E'});
  b.insert(b.end(), {'f', 'm', 't', ' '});
  u32(16);
  u16(1);
  u16(2);
  u32(16000);
  u32(16000 * 4);
  u16(4);
  u16(16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  u32(8);
  for (int i = 0; i < 8; ++i) b.push_back(0);
  std::ofstream(dir / "st.wav", std::ios::binary)
      .write(reinterpret_cast<const char*>(b.data()),
             static_cast<std::streamsize>(b.size()));

  const int rc = run(std::string(cli_path()) + " augment --in " +
                     (dir / "st.wav").string() + " --out " +
                     (dir / "o.wav").string() + " 2> " +
                     (dir / "stderr.txt").string());
  CHECK(rc != 0);
  CHECK(slurp(dir / "stderr.txt").find("mono") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("distill reruns produce byte-identical logs and checkpoints") {
  const fs::path dir = fresh_dir("distill");
  const std::string small =
      " --set steps=24 --set batch_size=4 --set corpus_size=12"
      " --set dev_size=8 --set dev_eval_every=12 --set model_dim=16"
      " --set n_heads=2 --set mlp_dim=32 --set utterance_seconds=0.5"
      " --set seed=5";
  const std::string base = std::string(cli_path()) + " distill" + small;
  const int rc1 =
      run(base + " --out " + (dir / "a").string() + " > /dev/null");
  const int rc2 =
      run(base + " --out " + (dir / "b").string() + " > /dev/null");
  REQUIRE(rc1 == 0);
  REQUIRE(rc2 == 0);
  CHECK(slurp(dir / "a" / "run.log") == slurp(dir / "b" / "run.log"));
  CHECK_FALSE(slurp(dir / "a" / "run.log").empty());
  CHECK(slurp(dir / "a" / "step_000024.blob") ==
        slurp(dir / "b" / "step_000024.blob"));
  CHECK(slurp(dir / "a" / "step_000024.manifest") ==
        slurp(dir / "b" / "step_000024.manifest"));
  CHECK(slurp(dir / "a" / "selected.txt") == slurp(dir / "b" / "selected.txt"));

  // run log has the heuristic lambda column varying when enabled
  const int rc3 = run(base + " --set heuristic=true --set loss=cl --out " +
                      (dir / "h").string() + " > /dev/null");
  REQUIRE(rc3 == 0);
  const std::string log = slurp(dir / "h" / "run.log");
  CHECK(log.find("lambda_cc_eff=") != std::string::npos);

  SUBCASE("probe runs on the produced checkpoint") {
    const int rc4 =
        run(std::string(cli_path()) + " probe --checkpoint " +
            (dir / "a" / "step_000024").string() +
            " --set probe_corpus_size=12 --set utterance_seconds=0.5" +
            " --set probe_trees=20 > " + (dir / "probe.txt").string());
    REQUIRE(rc4 == 0);
    const std::string rep = slurp(dir / "probe.txt");
    CHECK(rep.find("overall_acc=") != std::string::npos);

    const int rc5 =
        run(std::string(cli_path()) + " probe --checkpoint " +
            (dir / "a" / "step_000024").string() +
            " --set probe_corpus_size=12 --set utterance_seconds=0.5" +
            " --set probe_trees=20 > " + (dir / "probe2.txt").string());
    REQUIRE(rc5 == 0);
    CHECK(slurp(dir / "probe.txt") == slurp(dir / "probe2.txt"));
  }
  fs::remove_all(dir);
}

TEST_CASE("distill rejects an unknown config key by name") {
  const fs::path dir = fresh_dir("badkey");
  const int rc = run(std::string(cli_path()) +
                     " distill --set nonsense_key=1 --out " +
                     (dir / "x").string() + " 2> " +
                     (dir / "stderr.txt").string());
  CHECK(rc != 0);
  CHECK(slurp(dir / "stderr.txt").find("nonsense_key") != std::string::npos);
  fs::remove_all(dir);
}
