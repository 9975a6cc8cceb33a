// core/src/augment.cpp

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

#include "corrkd/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "corrkd/fft.hpp"
#include "corrkd/tensor.hpp"

namespace corrkd {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base ^ (0xa076'1d64'78bd'642fULL * (salt + 1));
  return splitmix64(s);
}

void normalize_rms(std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / static_cast<double>(x.size()));
  if (p > 0.0) {
    const double g = 1.0 / p;
    for (double& v : x) v *= g;
  }
}

// RBJ biquad bandpass (constant skirt gain), used by the babble streams.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;
  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

Biquad make_bandpass(double center_hz, double q, int sample_rate_hz) {
  const double w0 = 2.0 * kPi * center_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad f{};
  f.b0 = alpha / a0;
  f.b1 = 0.0;
  f.b2 = -alpha / a0;
  f.a1 = -2.0 * std::cos(w0) / a0;
  f.a2 = (1.0 - alpha) / a0;
  return f;
}

Biquad make_notch(double center_hz, double q, int sample_rate_hz) {
  const double w0 = 2.0 * kPi * center_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad f{};
  f.b0 = 1.0 / a0;
  f.b1 = -2.0 * std::cos(w0) / a0;
  f.b2 = 1.0 / a0;
  f.a1 = -2.0 * std::cos(w0) / a0;
  f.a2 = (1.0 - alpha) / a0;
  return f;
}

}  // namespace

// ============================================================================
// specs and plans
// ============================================================================

const char* noise_color_name(NoiseColor c) {
  switch (c) {
    case NoiseColor::white: return "white";
    case NoiseColor::pink: return "pink";
    case NoiseColor::babble: return "babble";
    case NoiseColor::gaussian: return "gaussian";
  }
  return "?";
}

std::string DistortionSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::gaussian:
      os << "gaussian@" << *snr_db << "dB";
      break;
    case Kind::synthetic_noise:
      os << noise_color_name(color) << "@" << *snr_db << "dB";
      break;
    case Kind::reverb:
      os << "reverb(rt60=" << rt60_s << "s)";
      break;
    case Kind::pitch_shift:
      os << "pitch(" << semitones << "st)";
      break;
    case Kind::band_reject:
      os << "band_reject(" << center_hz << "Hz,q=" << q << ")";
      break;
  }
  return os.str();
}

DistortionSpec DistortionSpec::make_gaussian(double snr_db) {
  DistortionSpec s;
  s.kind = Kind::gaussian;
  s.color = NoiseColor::gaussian;
  s.snr_db = snr_db;
  return s;
}

DistortionSpec DistortionSpec::make_noise(NoiseColor color, double snr_db) {
  DistortionSpec s;
  s.kind = Kind::synthetic_noise;
  s.color = color;
  s.snr_db = snr_db;
  return s;
}

DistortionSpec DistortionSpec::make_reverb(double rt60_s) {
  DistortionSpec s;
  s.kind = Kind::reverb;
  s.rt60_s = rt60_s;
  return s;
}

DistortionSpec DistortionSpec::make_pitch(double semitones) {
  DistortionSpec s;
  s.kind = Kind::pitch_shift;
  s.semitones = semitones;
  return s;
}

DistortionSpec DistortionSpec::make_band_reject(double center_hz, double q) {
  DistortionSpec s;
  s.kind = Kind::band_reject;
  s.center_hz = center_hz;
  s.q = q;
  return s;
}

std::string DistortionPlan::describe() const {
  if (specs.empty()) return "clean";
  std::string s;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) s += "+";
    s += specs[i].describe();
  }
  return s;
}

DistortionPlan make_plan(std::vector<DistortionSpec> specs,
                         std::uint64_t seed) {
  DistortionPlan plan;
  plan.seed = seed;
  plan.effective_snr_db = 20.0;  // clean pass-through
  for (const DistortionSpec& s : specs) {
    if (s.additive()) {
      CORRKD_CHECK(s.snr_db.has_value(),
                   "make_plan: additive spec without snr_db");
      CORRKD_CHECK(*s.snr_db >= 10.0 && *s.snr_db < 20.0,
                   "make_plan: additive snr_db " << *s.snr_db
                                                 << " outside [10,20)");
      plan.effective_snr_db = *s.snr_db;
    } else {
      CORRKD_CHECK(!s.snr_db.has_value(),
                   "make_plan: non-additive spec must not carry snr_db");
    }
  }
  plan.effective_snr_db = std::clamp(plan.effective_snr_db, 10.0, 20.0);
  plan.specs = std::move(specs);
  return plan;
}

// ============================================================================
// SNR mixing
// ============================================================================

double mix_gain_for_snr(const AudioBuffer& signal, const AudioBuffer& noise,
                        double target_snr_db) {
  const double ps = signal_power(signal);
  const double pn = signal_power(noise);
  CORRKD_CHECK(ps > 0.0, "mix_gain_for_snr: signal has zero power");
  CORRKD_CHECK(pn > 0.0, "mix_gain_for_snr: noise has zero power");
  return std::sqrt(ps / (pn * std::pow(10.0, target_snr_db / 10.0)));
}

AudioBuffer mix_at_snr(const AudioBuffer& signal, const AudioBuffer& noise,
                       double target_snr_db, std::uint64_t seed) {
  CORRKD_CHECK(signal.sample_rate_hz == noise.sample_rate_hz,
               "mix_at_snr: sample rate mismatch");
  CORRKD_CHECK(noise.samples.size() >= signal.samples.size(),
               "mix_at_snr: noise shorter than signal ("
                   << noise.samples.size() << " < " << signal.samples.size()
                   << ")");
  AudioBuffer cropped;
  cropped.sample_rate_hz = noise.sample_rate_hz;
  const std::size_t slack = noise.samples.size() - signal.samples.size();
  std::size_t offset = 0;
  if (slack > 0) {
    std::uint64_t s = seed;
    offset = splitmix64(s) % (slack + 1);
  }
  cropped.samples.assign(noise.samples.begin() + offset,
                         noise.samples.begin() + offset +
                             signal.samples.size());

  const double gain = mix_gain_for_snr(signal, cropped, target_snr_db);
  AudioBuffer out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.resize(signal.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = std::clamp(
        signal.samples[i] + gain * cropped.samples[i], -1.0, 1.0);
  }
  return out;
}

// ============================================================================
// noise synthesis
// ============================================================================

AudioBuffer synth_noise(NoiseColor color, std::size_t length,
                        int sample_rate_hz, std::uint64_t seed) {
  CORRKD_CHECK(length >= 1, "synth_noise: length must be >= 1");
  CORRKD_CHECK(sample_rate_hz > 0, "synth_noise: bad sample rate");
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(color)));
  AudioBuffer out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(length);

  switch (color) {
    case NoiseColor::gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (double& v : out.samples) v = dist(rng);
      break;
    }
    case NoiseColor::white: {
      // uniform on [-sqrt(3), sqrt(3)] is unit variance
      std::uniform_real_distribution<double> dist(-std::sqrt(3.0),
                                                  std::sqrt(3.0));
      for (double& v : out.samples) v = dist(rng);
      break;
    }
    case NoiseColor::pink: {
      // Kellet's pole cascade: -3 dB/octave to within a fraction of a dB
      // across the audio band.
      std::normal_distribution<double> dist(0.0, 1.0);
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (double& v : out.samples) {
        const double w = dist(rng);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseColor::babble: {
      // Several amplitude-modulated band-limited streams, roughly the
      // syllable-rate energy fluctuation of overlapping talkers.
      constexpr int kStreams = 6;
      std::normal_distribution<double> dist(0.0, 1.0);
      std::uniform_real_distribution<double> center(300.0, 3000.0);
      std::uniform_real_distribution<double> mod_rate(2.0, 6.0);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
      std::fill(out.samples.begin(), out.samples.end(), 0.0);
      for (int s = 0; s < kStreams; ++s) {
        Biquad bp = make_bandpass(center(rng), 2.0, sample_rate_hz);
        const double fm = mod_rate(rng);
        const double ph = phase(rng);
        for (std::size_t i = 0; i < length; ++i) {
          const double t = static_cast<double>(i) / sample_rate_hz;
          const double env = 0.5 * (1.0 + std::sin(2.0 * kPi * fm * t + ph));
          out.samples[i] += env * bp.step(dist(rng));
        }
      }
      break;
    }
  }
  normalize_rms(out.samples);
  return out;
}

// ============================================================================
// reverb
// ============================================================================

AudioBuffer apply_reverb(const AudioBuffer& signal, double rt60_s,
                         std::uint64_t seed) {
  CORRKD_CHECK(rt60_s >= 0.0, "apply_reverb: rt60 must be >= 0, got " << rt60_s);
  if (rt60_s == 0.0) return signal;
  CORRKD_CHECK(!signal.samples.empty(), "apply_reverb: empty signal");

  const int sr = signal.sample_rate_hz;
  const std::size_t rir_len =
      std::max<std::size_t>(2, static_cast<std::size_t>(1.1 * rt60_s * sr));
  std::mt19937_64 rng(derive_seed(seed, 0x7265766572ULL));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> rir(rir_len);
  // envelope reaches -60 dB (1e-3 amplitude) at rt60
  const double decay = std::log(1e3) / (rt60_s * sr);
  for (std::size_t i = 0; i < rir_len; ++i) {
    rir[i] = dist(rng) * std::exp(-decay * static_cast<double>(i));
  }
  // unit energy so the convolution roughly preserves signal level
  double e = 0.0;
  for (double v : rir) e += v * v;
  const double g = 1.0 / std::sqrt(e);
  for (double& v : rir) v *= g;

  std::vector<double> conv = fft_convolve(signal.samples, rir);
  AudioBuffer out;
  out.sample_rate_hz = sr;
  out.samples.assign(conv.begin(), conv.begin() + signal.samples.size());
  for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

// ============================================================================
// pitch shift: resample then WSOLA time-stretch
// ============================================================================

namespace {

// Catmull-Rom resampling: y[n] = x(n * step).
std::vector<double> resample(const std::vector<double>& x, double step) {
  const std::size_t out_len =
      static_cast<std::size_t>(std::floor((x.size() - 1) / step)) + 1;
  std::vector<double> y(out_len);
  const auto sample_at = [&](std::ptrdiff_t i) -> double {
    if (i < 0) return x.front();
    if (i >= static_cast<std::ptrdiff_t>(x.size())) return x.back();
    return x[static_cast<std::size_t>(i)];
  };
  for (std::size_t n = 0; n < out_len; ++n) {
    const double pos = n * step;
    const auto i = static_cast<std::ptrdiff_t>(std::floor(pos));
    const double t = pos - static_cast<double>(i);
    const double p0 = sample_at(i - 1), p1 = sample_at(i), p2 = sample_at(i + 1),
                 p3 = sample_at(i + 2);
    y[n] = 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
  }
  return y;
}

// WSOLA time stretch to an exact output length.
std::vector<double> wsola_stretch(const std::vector<double>& x,
                                  std::size_t out_len) {
  const std::size_t win = std::min<std::size_t>(1024, x.size());
  if (x.size() <= win || out_len <= win) {
    // too short to stretch segment-wise; fall back to direct resampling
    return resample(x, static_cast<double>(x.size() - 1) /
                           static_cast<double>(std::max<std::size_t>(out_len, 2) - 1));
  }
  const std::size_t hop_out = win / 4;
  const double ratio = static_cast<double>(x.size()) / out_len;
  const std::ptrdiff_t search = static_cast<std::ptrdiff_t>(win / 8);

  std::vector<double> w(win);
  for (std::size_t i = 0; i < win; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

  std::vector<double> out(out_len + win, 0.0);
  std::vector<double> wsum(out_len + win, 0.0);
  // previous copied segment, advanced by hop_out: the natural continuation
  std::vector<double> prev_tail(win, 0.0);
  bool have_prev = false;

  const auto max_src = static_cast<std::ptrdiff_t>(x.size() - win);
  for (std::size_t pos = 0; pos + win <= out.size(); pos += hop_out) {
    const std::ptrdiff_t ideal = std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(std::llround(pos * ratio)), 0, max_src);
    std::ptrdiff_t src = ideal;
    if (have_prev) {
      // best alignment against the continuation of the previous segment
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, ideal - search);
      const std::ptrdiff_t hi = std::min(max_src, ideal + search);
      double best = -1e300;
      for (std::ptrdiff_t c = lo; c <= hi; ++c) {
        double corr = 0.0;
        const double* xa = x.data() + c;
        for (std::size_t i = 0; i < win; i += 4) {
          corr += xa[i] * prev_tail[i];
        }
        if (corr > best) {
          best = corr;
          src = c;
        }
      }
    }
    const double* seg = x.data() + src;
    for (std::size_t i = 0; i < win; ++i) {
      out[pos + i] += w[i] * seg[i];
      wsum[pos + i] += w[i];
    }
    // continuation reference: same source advanced by the synthesis hop
    const std::ptrdiff_t cont =
        std::min(max_src, src + static_cast<std::ptrdiff_t>(hop_out));
    std::copy(x.begin() + cont, x.begin() + cont + win, prev_tail.begin());
    have_prev = true;
  }
  out.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (wsum[i] > 1e-9) out[i] /= wsum[i];
  }
  return out;
}

}  // namespace

AudioBuffer pitch_shift(const AudioBuffer& signal, double semitones) {
  CORRKD_CHECK(std::fabs(semitones) <= 12.0,
               "pitch_shift: |semitones| must be <= 12, got " << semitones);
  CORRKD_CHECK(!signal.samples.empty(), "pitch_shift: empty signal");
  if (semitones == 0.0) return signal;

  const double factor = std::pow(2.0, semitones / 12.0);
  // reading the input at step `factor` scales every frequency by `factor`
  std::vector<double> shifted = resample(signal.samples, factor);
  std::vector<double> stretched = wsola_stretch(shifted, signal.samples.size());

  AudioBuffer out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples = std::move(stretched);
  for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

// ============================================================================
// band rejection
// ============================================================================

AudioBuffer band_reject(const AudioBuffer& signal, double center_hz, double q) {
  CORRKD_CHECK(center_hz > 0.0 && center_hz < signal.sample_rate_hz / 2.0,
               "band_reject: center " << center_hz
                                      << " Hz outside (0, Nyquist="
                                      << signal.sample_rate_hz / 2.0 << ")");
  CORRKD_CHECK(q > 0.0, "band_reject: q must be > 0");
  Biquad f = make_notch(center_hz, q, signal.sample_rate_hz);
  AudioBuffer out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.resize(signal.samples.size());
  for (std::size_t i = 0; i < signal.samples.size(); ++i)
    out.samples[i] = f.step(signal.samples[i]);
  return out;
}

// ============================================================================
// plan application
// ============================================================================

AudioBuffer apply_plan(const AudioBuffer& clean, const DistortionPlan& plan) {
  AudioBuffer cur = clean;
  std::size_t idx = 0;
  for (const DistortionSpec& s : plan.specs) {
    const std::uint64_t op_seed = derive_seed(plan.seed, idx++);
    switch (s.kind) {
      case DistortionSpec::Kind::gaussian: {
        AudioBuffer noise = synth_noise(NoiseColor::gaussian,
                                        cur.samples.size(),
                                        cur.sample_rate_hz, op_seed);
        cur = mix_at_snr(cur, noise, *s.snr_db, op_seed);
        break;
      }
      case DistortionSpec::Kind::synthetic_noise: {
        AudioBuffer noise = synth_noise(s.color, cur.samples.size(),
                                        cur.sample_rate_hz, op_seed);
        cur = mix_at_snr(cur, noise, *s.snr_db, op_seed);
        break;
      }
      case DistortionSpec::Kind::reverb:
        cur = apply_reverb(cur, s.rt60_s, op_seed);
        break;
      case DistortionSpec::Kind::pitch_shift:
        cur = pitch_shift(cur, s.semitones);
        break;
      case DistortionSpec::Kind::band_reject:
        cur = band_reject(cur, s.center_hz, s.q);
        break;
    }
  }
  return cur;
}

}  // namespace corrkd
