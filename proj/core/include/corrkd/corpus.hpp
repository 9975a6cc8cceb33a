// core/include/corrkd/corpus.hpp

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

#ifndef CORRKD_CORPUS_HPP_
#define CORRKD_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "corrkd/audio.hpp"

namespace corrkd {

struct CorpusConfig {
  std::size_t n_utterances = 256;
  double seconds = 1.0;
  int sample_rate_hz = 16000;
  std::uint64_t seed = 0;
};

/// Seeded harmonic-plus-noise "utterances": a drifting f0 with a handful of
/// harmonics under a slow amplitude envelope plus a low noise floor. Enough
/// spectro-temporal structure for the frontend and the correlation losses to
/// bite, with zero external data. Utterance i depends only on (seed, i).
std::vector<AudioBuffer> make_synthetic_corpus(const CorpusConfig& cfg);

/// All mono 16-bit WAVs in a directory, sorted by filename. Every file must
/// match `expected_rate`.
std::vector<AudioBuffer> load_wav_corpus(const std::filesystem::path& dir,
                                         int expected_rate);

}  // namespace corrkd

#endif  // CORRKD_CORPUS_HPP_
