// core/include/corrkd/features.hpp

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

#ifndef CORRKD_FEATURES_HPP_
#define CORRKD_FEATURES_HPP_

#include "corrkd/audio.hpp"
#include "corrkd/tensor.hpp"

namespace corrkd {

struct FrontendConfig {
  int sample_rate_hz = 16000;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_mels = 40;
  double log_floor = 1e-10;
};

/// log(mel_filterbank(|STFT|^2) + log_floor), Hann window, HTK mel scale.
/// Output is a [T, n_mels] tensor with T = floor((len - frame)/hop) + 1.
Tensor logmel_frontend(const AudioBuffer& signal, const FrontendConfig& cfg);

/// Frame count produced by logmel_frontend for a signal of `n_samples`.
std::size_t logmel_frame_count(std::size_t n_samples, const FrontendConfig& cfg);

}  // namespace corrkd

#endif  // CORRKD_FEATURES_HPP_
