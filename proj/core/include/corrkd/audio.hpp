// core/include/corrkd/audio.hpp

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

#ifndef CORRKD_AUDIO_HPP_
#define CORRKD_AUDIO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrkd {

/// Mono waveform with sample rate; amplitudes nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Mean squared amplitude.
double signal_power(const AudioBuffer& a);
double signal_rms(const AudioBuffer& a);

/// 10*log10(P_signal / P_noise). Throws on zero-power noise.
double measure_snr(const AudioBuffer& signal, const AudioBuffer& noise);

// ---- WAV I/O: RIFF PCM, 16-bit little-endian, mono only ----
// No resampling happens on I/O; callers that require a particular rate must
// check `sample_rate_hz` themselves.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace corrkd

#endif  // CORRKD_AUDIO_HPP_
