// core/src/audio.cpp

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

#include "corrkd/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "corrkd/tensor.hpp"

namespace corrkd {

double signal_power(const AudioBuffer& a) {
  CORRKD_CHECK(!a.samples.empty(), "signal_power: empty buffer");
  double s = 0.0;
  for (double v : a.samples) s += v * v;
  return s / static_cast<double>(a.samples.size());
}

double signal_rms(const AudioBuffer& a) { return std::sqrt(signal_power(a)); }

double measure_snr(const AudioBuffer& signal, const AudioBuffer& noise) {
  CORRKD_CHECK(signal.samples.size() == noise.samples.size(),
               "measure_snr: length mismatch (" << signal.samples.size()
                                                << " vs "
                                                << noise.samples.size() << ")");
  CORRKD_CHECK(signal.sample_rate_hz == noise.sample_rate_hz,
               "measure_snr: sample rate mismatch");
  const double ps = signal_power(signal);
  const double pn = signal_power(noise);
  CORRKD_CHECK(pn > 0.0, "measure_snr: noise has zero power");
  return 10.0 * std::log10(ps / pn);
}

// ============================================================================
// WAV I/O
// ============================================================================

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    (static_cast<std::uint16_t>(p[1]) << 8));
}

void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  CORRKD_CHECK(in.good(), "read_wav: cannot open " << path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  CORRKD_CHECK(bytes.size() >= 44, "read_wav: file too small to be RIFF PCM: "
                                       << path.string());
  CORRKD_CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                   std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
               "read_wav: not a RIFF/WAVE file: " << path.string());

  std::size_t pos = 12;
  int sample_rate = 0;
  std::uint16_t channels = 0, bits = 0, format = 0;
  const unsigned char* data_ptr = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    CORRKD_CHECK(body + len <= bytes.size(),
                 "read_wav: truncated chunk in " << path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      CORRKD_CHECK(len >= 16, "read_wav: malformed fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(read_u32(bytes.data() + body + 4));
      bits = read_u16(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  CORRKD_CHECK(format == 1, "read_wav: only PCM supported, got format tag "
                                << format << " in " << path.string());
  CORRKD_CHECK(channels == 1, "read_wav: only mono supported, got "
                                  << channels << " channels in "
                                  << path.string());
  CORRKD_CHECK(bits == 16, "read_wav: only 16-bit supported, got " << bits
                               << " bits in " << path.string());
  CORRKD_CHECK(data_ptr != nullptr && data_len >= 2,
               "read_wav: missing data chunk in " << path.string());

  AudioBuffer out;
  out.sample_rate_hz = sample_rate;
  const std::size_t n = data_len / 2;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(
        read_u16(data_ptr + 2 * i));
    out.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  CORRKD_CHECK(!audio.samples.empty(), "write_wav: empty buffer");
  CORRKD_CHECK(audio.sample_rate_hz > 0, "write_wav: bad sample rate");
  const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_len = n * 2;

  std::vector<unsigned char> bytes;
  bytes.reserve(44 + data_len);
  bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
  put_u32(bytes, 36 + data_len);
  bytes.insert(bytes.end(), {'W', 'A', 'V', 'E'});
  bytes.insert(bytes.end(), {'f', 'm', 't', ' '});
  put_u32(bytes, 16);
  put_u16(bytes, 1);  // PCM
  put_u16(bytes, 1);  // mono
  put_u32(bytes, static_cast<std::uint32_t>(audio.sample_rate_hz));
  put_u32(bytes, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
  put_u16(bytes, 2);   // block align
  put_u16(bytes, 16);  // bits
  bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
  put_u32(bytes, data_len);
  for (double v : audio.samples) {
    // symmetric with the read scale (s/32768), so read -> write round-trips
    const long q = std::lrint(std::clamp(v, -1.0, 1.0) * 32768.0);
    const auto s = static_cast<std::int16_t>(
        std::clamp<long>(q, -32768, 32767));
    put_u16(bytes, static_cast<std::uint16_t>(s));
  }

  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  CORRKD_CHECK(outf.good(), "write_wav: cannot open " << path.string());
  outf.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  CORRKD_CHECK(outf.good(), "write_wav: write failed for " << path.string());
}

}  // namespace corrkd
