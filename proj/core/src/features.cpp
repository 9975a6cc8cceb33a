// core/src/features.cpp

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

#include "corrkd/features.hpp"

#include <cmath>
#include <numbers>

#include "corrkd/fft.hpp"

namespace corrkd {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filters over FFT bins, rows: n_mels x (n_fft/2 + 1).
std::vector<double> mel_filterbank(std::size_t n_mels, std::size_t n_fft,
                                   int sample_rate_hz) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double f_max = sample_rate_hz / 2.0;
  const double mel_max = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / (n_mels + 1));

  std::vector<double> fb(n_mels * n_bins, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double fk =
          static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
      double w = 0.0;
      if (fk > f0 && fk < f1) {
        w = (fk - f0) / (f1 - f0);
      } else if (fk >= f1 && fk < f2) {
        w = (f2 - fk) / (f2 - f1);
      }
      fb[m * n_bins + k] = w;
    }
  }
  return fb;
}

}  // namespace

std::size_t logmel_frame_count(std::size_t n_samples,
                               const FrontendConfig& cfg) {
  const auto frame = static_cast<std::size_t>(
      std::lround(cfg.frame_ms * cfg.sample_rate_hz / 1000.0));
  const auto hop = static_cast<std::size_t>(
      std::lround(cfg.hop_ms * cfg.sample_rate_hz / 1000.0));
  CORRKD_CHECK(n_samples >= frame,
               "logmel: signal shorter than one frame (" << n_samples << " < "
                                                         << frame << ")");
  return (n_samples - frame) / hop + 1;
}

Tensor logmel_frontend(const AudioBuffer& signal, const FrontendConfig& cfg) {
  CORRKD_CHECK(signal.sample_rate_hz == cfg.sample_rate_hz,
               "logmel: signal rate " << signal.sample_rate_hz
                                      << " != configured rate "
                                      << cfg.sample_rate_hz);
  const auto frame = static_cast<std::size_t>(
      std::lround(cfg.frame_ms * cfg.sample_rate_hz / 1000.0));
  const auto hop = static_cast<std::size_t>(
      std::lround(cfg.hop_ms * cfg.sample_rate_hz / 1000.0));
  const std::size_t n_frames = logmel_frame_count(signal.samples.size(), cfg);
  const std::size_t n_fft = next_pow2(frame);
  const std::size_t n_bins = n_fft / 2 + 1;

  std::vector<double> window(frame);
  for (std::size_t i = 0; i < frame; ++i)
    window[i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (frame - 1));
  const std::vector<double> fb =
      mel_filterbank(cfg.n_mels, n_fft, cfg.sample_rate_hz);

  std::vector<double> feat(n_frames * cfg.n_mels);
  std::vector<double> buf(frame);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* src = signal.samples.data() + t * hop;
    for (std::size_t i = 0; i < frame; ++i) buf[i] = src[i] * window[i];
    const std::vector<double> p = power_spectrum(buf, n_fft);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      const double* w = fb.data() + m * n_bins;
      double s = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) s += w[k] * p[k];
      feat[t * cfg.n_mels + m] = std::log(s + cfg.log_floor);
    }
  }
  return Tensor::from({n_frames, cfg.n_mels}, std::move(feat));
}

}  // namespace corrkd
