// core/include/corrkd/augment.hpp

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

#ifndef CORRKD_AUGMENT_HPP_
#define CORRKD_AUGMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrkd/audio.hpp"

namespace corrkd {

enum class NoiseColor { white, pink, babble, gaussian };

const char* noise_color_name(NoiseColor c);

/// One distortion applied to a waveform. Additive kinds (gaussian /
/// synthetic_noise) carry a target SNR in [10, 20); non-additive kinds
/// (reverb / pitch_shift / band_reject) carry none.
struct DistortionSpec {
  enum class Kind { gaussian, synthetic_noise, reverb, pitch_shift, band_reject };

  Kind kind = Kind::gaussian;
  NoiseColor color = NoiseColor::white;  // synthetic_noise only
  std::optional<double> snr_db;          // additive kinds only
  double rt60_s = 0.0;                   // reverb
  double semitones = 0.0;                // pitch_shift
  double center_hz = 0.0;                // band_reject
  double q = 0.0;                        // band_reject

  bool additive() const {
    return kind == Kind::gaussian || kind == Kind::synthetic_noise;
  }
  std::string describe() const;

  static DistortionSpec make_gaussian(double snr_db);
  static DistortionSpec make_noise(NoiseColor color, double snr_db);
  static DistortionSpec make_reverb(double rt60_s);
  static DistortionSpec make_pitch(double semitones);
  static DistortionSpec make_band_reject(double center_hz, double q);
};

/// Ordered per-utterance distortion chain. `effective_snr_db` is the SNR of
/// the additive spec, or 20 (the clean end of [10,20)) when the plan has no
/// additive component; it drives the heuristic loss weighting.
struct DistortionPlan {
  std::vector<DistortionSpec> specs;
  double effective_snr_db = 20.0;
  std::uint64_t seed = 0;

  std::string describe() const;
};

/// Validates the spec invariants and fills in effective_snr_db.
DistortionPlan make_plan(std::vector<DistortionSpec> specs, std::uint64_t seed);

/// Scale for the noise so that signal + gain*noise hits the target SNR:
///   gain = sqrt(P_signal / (P_noise * 10^(target/10))).
double mix_gain_for_snr(const AudioBuffer& signal, const AudioBuffer& noise,
                        double target_snr_db);

/// signal + gain*noise, hard-clipped to [-1, 1]. The noise must be at least
/// as long as the signal; longer noise is cropped at a seeded random offset.
AudioBuffer mix_at_snr(const AudioBuffer& signal, const AudioBuffer& noise,
                       double target_snr_db, std::uint64_t seed = 0);

/// Deterministic unit-RMS noise. Pink has a -3 dB/octave average slope;
/// babble is a sum of amplitude-modulated band-limited streams.
AudioBuffer synth_noise(NoiseColor color, std::size_t length,
                        int sample_rate_hz, std::uint64_t seed);

/// Convolution with a synthetic exponentially-decaying noise RIR reaching
/// -60 dB at rt60_s; output trimmed to the input length. rt60_s == 0 is the
/// identity.
AudioBuffer apply_reverb(const AudioBuffer& signal, double rt60_s,
                         std::uint64_t seed);

/// Shift pitch by `semitones` (|semitones| <= 12) keeping duration:
/// resample by 2^(semitones/12), then time-stretch back via WSOLA.
AudioBuffer pitch_shift(const AudioBuffer& signal, double semitones);

/// Second-order RBJ notch filter at center_hz with quality factor q.
AudioBuffer band_reject(const AudioBuffer& signal, double center_hz, double q);

/// Apply plan.specs in order (noise seeds derived from plan.seed).
AudioBuffer apply_plan(const AudioBuffer& clean, const DistortionPlan& plan);

}  // namespace corrkd

#endif  // CORRKD_AUGMENT_HPP_
