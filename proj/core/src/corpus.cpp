// core/src/corpus.cpp

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

#include "corrkd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "corrkd/tensor.hpp"

namespace corrkd {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<AudioBuffer> make_synthetic_corpus(const CorpusConfig& cfg) {
  CORRKD_CHECK(cfg.n_utterances >= 1 && cfg.seconds > 0.0 &&
                   cfg.sample_rate_hz > 0,
               "make_synthetic_corpus: bad config");
  const auto n = static_cast<std::size_t>(cfg.seconds * cfg.sample_rate_hz);
  std::vector<AudioBuffer> corpus;
  corpus.reserve(cfg.n_utterances);

  for (std::size_t u = 0; u < cfg.n_utterances; ++u) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + u + 1);
    std::uniform_real_distribution<double> f0_dist(100.0, 300.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> nh_dist(4, 8);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double f0 = f0_dist(rng);
    const double drift = (unit(rng) - 0.5) * 0.2;  // up to +-10% over the clip
    const int harmonics = nh_dist(rng);
    const double env_rate = 1.5 + 4.0 * unit(rng);  // syllable-ish rate
    const double env_phase = 2.0 * kPi * unit(rng);

    std::vector<double> amp(harmonics), phase(harmonics);
    for (int h = 0; h < harmonics; ++h) {
      amp[h] = std::pow(1.0 / (h + 1), 0.8) * (0.5 + unit(rng));
      phase[h] = 2.0 * kPi * unit(rng);
    }

    AudioBuffer utt;
    utt.sample_rate_hz = cfg.sample_rate_hz;
    utt.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / cfg.sample_rate_hz;
      const double f = f0 * (1.0 + drift * t / cfg.seconds);
      double v = 0.0;
      for (int h = 0; h < harmonics; ++h)
        v += amp[h] * std::sin(2.0 * kPi * f * (h + 1) * t + phase[h]);
      const double env =
          0.55 + 0.45 * std::sin(2.0 * kPi * env_rate * t + env_phase);
      v = v * env + 0.02 * gauss(rng);  // ~-30 dB noise floor
      utt.samples[i] = v;
    }
    double peak = 0.0;
    for (double v : utt.samples) peak = std::max(peak, std::fabs(v));
    const double g = peak > 0.0 ? 0.5 / peak : 1.0;
    for (double& v : utt.samples) v *= g;
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

std::vector<AudioBuffer> load_wav_corpus(const std::filesystem::path& dir,
                                         int expected_rate) {
  CORRKD_CHECK(std::filesystem::is_directory(dir),
               "load_wav_corpus: not a directory: " << dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  CORRKD_CHECK(!files.empty(),
               "load_wav_corpus: no .wav files in " << dir.string());
  std::vector<AudioBuffer> corpus;
  for (const auto& f : files) {
    AudioBuffer a = read_wav(f);
    CORRKD_CHECK(a.sample_rate_hz == expected_rate,
                 "load_wav_corpus: " << f.string() << " has rate "
                                     << a.sample_rate_hz << ", expected "
                                     << expected_rate
                                     << " (no resampling on I/O)");
    corpus.push_back(std::move(a));
  }
  return corpus;
}

}  // namespace corrkd
