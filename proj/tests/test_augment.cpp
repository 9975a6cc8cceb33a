// tests/test_augment.cpp

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
#include <numbers>

#include <doctest.h>

#include "corrkd/augment.hpp"
#include "oracles.hpp"

using namespace corrkd;

namespace {

AudioBuffer tone(double freq, double amp, std::size_t n, int rate) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate);
  return a;
}

double rms(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return std::sqrt(p / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("synth_noise determinism and unit RMS") {
  for (NoiseColor c : {NoiseColor::white, NoiseColor::pink, NoiseColor::babble,
                       NoiseColor::gaussian}) {
    AudioBuffer a = synth_noise(c, 8192, 16000, 42);
    AudioBuffer b = synth_noise(c, 8192, 16000, 42);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      CHECK(a.samples[i] == b.samples[i]);
    CHECK(rms(a.samples) == doctest::Approx(1.0).epsilon(1e-9));
    AudioBuffer other = synth_noise(c, 8192, 16000, 43);
    CHECK(a.samples != other.samples);
  }
}

TEST_CASE("white noise has a flat octave spectrum within 2 dB") {
  AudioBuffer n = synth_noise(NoiseColor::white, 1 << 14, 16000, 7);
  const auto psd = oracles::welch_psd(n.samples, 1024);
  const auto bands = oracles::octave_band_db(psd, 16000, 125.0);
  REQUIRE(bands.size() >= 4);
  double mean = 0.0;
  for (double b : bands) mean += b;
  mean /= static_cast<double>(bands.size());
  for (double b : bands) CHECK(std::fabs(b - mean) < 2.0);
}

TEST_CASE("pink noise falls 3 dB per octave within 1 dB") {
  AudioBuffer n = synth_noise(NoiseColor::pink, 1 << 15, 16000, 7);
  const auto psd = oracles::welch_psd(n.samples, 2048);
  const auto bands = oracles::octave_band_db(psd, 16000, 125.0);
  REQUIRE(bands.size() >= 4);
  // least-squares slope per octave index
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    sx += static_cast<double>(i);
    sy += bands[i];
    sxx += static_cast<double>(i * i);
    sxy += static_cast<double>(i) * bands[i];
  }
  const double k = static_cast<double>(bands.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(std::fabs(slope - (-3.0)) < 1.0);
}

TEST_CASE("babble is modulated band-limited noise, deterministic") {
  AudioBuffer a = synth_noise(NoiseColor::babble, 16000, 16000, 3);
  // energy should fluctuate at syllable rate: compare 50 ms window powers
  double min_p = 1e300, max_p = 0.0;
  const std::size_t win = 800;
  for (std::size_t s = 0; s + win <= a.samples.size(); s += win) {
    double p = 0.0;
    for (std::size_t i = s; i < s + win; ++i) p += a.samples[i] * a.samples[i];
    min_p = std::min(min_p, p);
    max_p = std::max(max_p, p);
  }
  CHECK(max_p / min_p > 1.5);
}

TEST_CASE("apply_reverb") {
  SUBCASE("rt60 = 0 is the identity") {
    AudioBuffer s = tone(440, 0.4, 8000, 16000);
    AudioBuffer out = apply_reverb(s, 0.0, 5);
    REQUIRE(out.samples.size() == s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i)
      CHECK(out.samples[i] == s.samples[i]);
  }
  SUBCASE("impulse response decays 60 dB over rt60 within 3 dB") {
    AudioBuffer impulse;
    impulse.sample_rate_hz = 16000;
    impulse.samples.assign(16000, 0.0);
    impulse.samples[0] = 1.0;
    AudioBuffer out = apply_reverb(impulse, 0.3, 11);
    const double slope =
        oracles::envelope_decay_db_per_s(out.samples, 16000, 0.3);
    // -60 dB over 0.3 s is -200 dB/s
    CHECK(std::fabs(slope * 0.3 - (-60.0)) < 3.0);
  }
  SUBCASE("deterministic under a fixed seed") {
    AudioBuffer s = tone(220, 0.4, 8000, 16000);
    AudioBuffer a = apply_reverb(s, 0.25, 9);
    AudioBuffer b = apply_reverb(s, 0.25, 9);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      CHECK(a.samples[i] == b.samples[i]);
  }
  SUBCASE("negative rt60 is rejected") {
    AudioBuffer s = tone(220, 0.4, 800, 16000);
    CHECK_THROWS_AS(apply_reverb(s, -0.1, 0), std::invalid_argument);
  }
}

TEST_CASE("pitch_shift") {
  const int rate = 16000;
  SUBCASE("zero semitones is the identity") {
    AudioBuffer s = tone(440, 0.4, 16000, rate);
    AudioBuffer out = pitch_shift(s, 0.0);
    REQUIRE(out.samples.size() == s.samples.size());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < s.samples.size(); ++i)
      max_diff = std::max(max_diff, std::fabs(out.samples[i] - s.samples[i]));
    CHECK(max_diff < 1e-6);
  }
  SUBCASE("one octave up moves the peak to 880 Hz within one bin") {
    AudioBuffer s = tone(440, 0.4, 16000, rate);
    AudioBuffer out = pitch_shift(s, 12.0);
    CHECK(out.samples.size() == s.samples.size());
    const double peak = oracles::spectral_peak_hz(out.samples, rate);
    const double bin = rate / 16384.0;
    CHECK(std::fabs(peak - 880.0) <= bin + 1e-9);
  }
  SUBCASE("one octave down moves the peak to 220 Hz within one bin") {
    AudioBuffer s = tone(440, 0.4, 16000, rate);
    AudioBuffer out = pitch_shift(s, -12.0);
    const double peak = oracles::spectral_peak_hz(out.samples, rate);
    const double bin = rate / 16384.0;
    CHECK(std::fabs(peak - 220.0) <= bin + 1e-9);
  }
  SUBCASE("out-of-range shift is rejected") {
    AudioBuffer s = tone(440, 0.4, 1600, rate);
    CHECK_THROWS_AS(pitch_shift(s, 12.5), std::invalid_argument);
  }
}

TEST_CASE("band_reject") {
  const int rate = 16000;
  SUBCASE("notched tone drops at least 20 dB") {
    AudioBuffer s = tone(1000, 0.4, 16000, rate);
    AudioBuffer out = band_reject(s, 1000.0, 5.0);
    // skip the transient at the start when measuring
    const std::vector<double> tail_in(s.samples.begin() + 4000, s.samples.end());
    const std::vector<double> tail_out(out.samples.begin() + 4000,
                                       out.samples.end());
    const double drop = 20.0 * std::log10(rms(tail_in) / (rms(tail_out) + 1e-30));
    CHECK(drop >= 20.0);
  }
  SUBCASE("tone at 4x the center passes within 1 dB") {
    AudioBuffer s = tone(4000, 0.4, 16000, rate);
    AudioBuffer out = band_reject(s, 1000.0, 5.0);
    const std::vector<double> tail_in(s.samples.begin() + 4000, s.samples.end());
    const std::vector<double> tail_out(out.samples.begin() + 4000,
                                       out.samples.end());
    const double drop = 20.0 * std::log10(rms(tail_in) / (rms(tail_out) + 1e-30));
    CHECK(std::fabs(drop) <= 1.0);
  }
  SUBCASE("DC-free input stays DC-free") {
    AudioBuffer n = synth_noise(NoiseColor::white, 16384, rate, 21);
    double m = 0.0;
    for (double v : n.samples) m += v;
    m /= static_cast<double>(n.samples.size());
    for (double& v : n.samples) v = 0.1 * (v - m);  // exact zero mean
    AudioBuffer out = band_reject(n, 1000.0, 5.0);
    double mo = 0.0;
    for (double v : out.samples) mo += v;
    mo /= static_cast<double>(out.samples.size());
    CHECK(std::fabs(mo) < 1e-3);
  }
  SUBCASE("center beyond Nyquist is rejected") {
    AudioBuffer s = tone(440, 0.4, 1600, rate);
    CHECK_THROWS_AS(band_reject(s, 9000.0, 5.0), std::invalid_argument);
  }
}

TEST_CASE("plans") {
  AudioBuffer clean = tone(350, 0.3, 16000, 16000);
  SUBCASE("empty plan is the identity with SNR 20") {
    DistortionPlan plan = make_plan({}, 3);
    CHECK(plan.effective_snr_db == 20.0);
    AudioBuffer out = apply_plan(clean, plan);
    for (std::size_t i = 0; i < clean.samples.size(); ++i)
      CHECK(out.samples[i] == clean.samples[i]);
  }
  SUBCASE("gaussian@12dB round-trips through measure_snr") {
    DistortionPlan plan =
        make_plan({DistortionSpec::make_gaussian(12.0)}, 3);
    CHECK(plan.effective_snr_db == 12.0);
    AudioBuffer out = apply_plan(clean, plan);
    AudioBuffer residual;
    residual.sample_rate_hz = 16000;
    residual.samples.resize(clean.samples.size());
    for (std::size_t i = 0; i < clean.samples.size(); ++i)
      residual.samples[i] = out.samples[i] - clean.samples[i];
    CHECK(measure_snr(clean, residual) == doctest::Approx(12.0).epsilon(1e-9));
  }
  SUBCASE("composite plan is deterministic under a fixed seed") {
    DistortionPlan plan = make_plan(
        {DistortionSpec::make_reverb(0.2),
         DistortionSpec::make_noise(NoiseColor::pink, 15.0)},
        99);
    AudioBuffer a = apply_plan(clean, plan);
    AudioBuffer b = apply_plan(clean, plan);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      CHECK(a.samples[i] == b.samples[i]);
  }
  SUBCASE("spec invariants are enforced") {
    CHECK_THROWS_AS(make_plan({DistortionSpec::make_gaussian(22.0)}, 0),
                    std::invalid_argument);
    DistortionSpec bad = DistortionSpec::make_reverb(0.2);
    bad.snr_db = 15.0;
    CHECK_THROWS_AS(make_plan({bad}, 0), std::invalid_argument);
  }
}
