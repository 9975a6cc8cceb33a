// tests/oracles.cpp

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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "corrkd/fft.hpp"

namespace corrkd::oracles {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kEps = 1e-8;

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

double kd_loss(const std::vector<double>& student,
               const std::vector<double>& teacher, const Dims& d,
               double gamma) {
  double total = 0.0;
  for (std::size_t b = 0; b < d.B; ++b) {
    for (std::size_t p = 0; p < d.P; ++p) {
      for (std::size_t t = 0; t < d.T; ++t) {
        double l1 = 0.0, dot = 0.0, ns = 0.0, nt = 0.0;
        for (std::size_t i = 0; i < d.D; ++i) {
          const double h = teacher[at(d, b, p, t, i)];
          const double hh = student[at(d, b, p, t, i)];
          l1 += std::fabs(h - hh);
          dot += h * hh;
          ns += hh * hh;
          nt += h * h;
        }
        const double cos =
            dot / ((std::sqrt(ns) + kEps) * (std::sqrt(nt) + kEps));
        total += l1 / static_cast<double>(d.D) -
                 gamma * std::log(sigmoid(cos));
      }
    }
  }
  return total / static_cast<double>(d.B);
}

double bt_loss(const std::vector<double>& y1, const std::vector<double>& y2,
               std::size_t B, std::size_t D, double lambda) {
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      double num = 0.0, n1 = 0.0, n2 = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        num += y1[b * D + i] * y2[b * D + j];
        n1 += y1[b * D + i] * y1[b * D + i];
        n2 += y2[b * D + j] * y2[b * D + j];
      }
      const double c = num / ((std::sqrt(n1) + kEps) * (std::sqrt(n2) + kEps));
      if (i == j) {
        diag += (1.0 - c) * (1.0 - c);
      } else {
        off += c * c;
      }
    }
  }
  return diag + lambda * off;
}

std::vector<double> batch_standardize(const std::vector<double>& x,
                                      const Dims& d) {
  std::vector<double> out(x.size());
  for (std::size_t p = 0; p < d.P; ++p) {
    for (std::size_t t = 0; t < d.T; ++t) {
      for (std::size_t i = 0; i < d.D; ++i) {
        double m = 0.0;
        for (std::size_t b = 0; b < d.B; ++b) m += x[at(d, b, p, t, i)];
        m /= static_cast<double>(d.B);
        double v = 0.0;
        for (std::size_t b = 0; b < d.B; ++b) {
          const double c = x[at(d, b, p, t, i)] - m;
          v += c * c;
        }
        v /= static_cast<double>(d.B);
        const double denom = std::sqrt(v) + kEps;
        for (std::size_t b = 0; b < d.B; ++b)
          out[at(d, b, p, t, i)] = (x[at(d, b, p, t, i)] - m) / denom;
      }
    }
  }
  return out;
}

std::vector<double> batched_outer(const std::vector<double>& a,
                                  const std::vector<double>& b, const Dims& d) {
  std::vector<double> out(d.P * d.T * d.D * d.D, 0.0);
  for (std::size_t p = 0; p < d.P; ++p) {
    for (std::size_t t = 0; t < d.T; ++t) {
      for (std::size_t i = 0; i < d.D; ++i) {
        for (std::size_t j = 0; j < d.D; ++j) {
          double s = 0.0;
          for (std::size_t bb = 0; bb < d.B; ++bb)
            s += a[at(d, bb, p, t, i)] * b[at(d, bb, p, t, j)];
          out[((p * d.T + t) * d.D + i) * d.D + j] =
              s / static_cast<double>(d.B);
        }
      }
    }
  }
  return out;
}

std::vector<double> cross_corr(const std::vector<double>& student,
                               const std::vector<double>& teacher,
                               const Dims& d) {
  return batched_outer(batch_standardize(student, d),
                       batch_standardize(teacher, d), d);
}

std::vector<double> self_corr(const std::vector<double>& student,
                              const Dims& d) {
  const std::vector<double> s = batch_standardize(student, d);
  return batched_outer(s, s, d);
}

ClComponents cl_loss(const std::vector<double>& student,
                     const std::vector<double>& teacher, const Dims& d,
                     double lambda_cc, double lambda_sc, double gamma) {
  const std::vector<double> ccc = cross_corr(student, teacher, d);
  const std::vector<double> csc = self_corr(student, d);
  const double inv_pt = 1.0 / (static_cast<double>(d.P) * d.T);

  double cc_diag = 0.0, cc_off = 0.0, sc_off = 0.0;
  for (std::size_t pt = 0; pt < d.P * d.T; ++pt) {
    for (std::size_t i = 0; i < d.D; ++i) {
      for (std::size_t j = 0; j < d.D; ++j) {
        const double c = ccc[(pt * d.D + i) * d.D + j];
        const double s = csc[(pt * d.D + i) * d.D + j];
        if (i == j) {
          cc_diag += (1.0 - c) * (1.0 - c);
        } else {
          cc_off += c * c;
          sc_off += s * s;
        }
      }
    }
  }
  cc_diag *= inv_pt;
  cc_off *= inv_pt;
  sc_off *= inv_pt;

  double cos_term = 0.0;
  for (std::size_t b = 0; b < d.B; ++b) {
    for (std::size_t p = 0; p < d.P; ++p) {
      for (std::size_t t = 0; t < d.T; ++t) {
        double dot = 0.0, ns = 0.0, nt = 0.0;
        for (std::size_t i = 0; i < d.D; ++i) {
          const double h = teacher[at(d, b, p, t, i)];
          const double hh = student[at(d, b, p, t, i)];
          dot += h * hh;
          ns += hh * hh;
          nt += h * h;
        }
        cos_term += std::log(sigmoid(
            dot / ((std::sqrt(ns) + kEps) * (std::sqrt(nt) + kEps))));
      }
    }
  }
  cos_term /= static_cast<double>(d.B);

  ClComponents out{};
  out.cc_diag = cc_diag;
  out.cc_offdiag = cc_off;
  out.sc_offdiag = sc_off;
  out.cos_term = cos_term;
  out.total =
      cc_diag + lambda_cc * cc_off + lambda_sc * sc_off - gamma * cos_term;
  return out;
}

// ============================================================================
// signal oracles
// ============================================================================

std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * kPi * static_cast<double>(k) * i / n;
      s += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  return out;
}

std::vector<double> welch_psd(const std::vector<double>& x,
                              std::size_t segment) {
  const std::size_t hop = segment / 2;
  std::vector<double> psd(segment / 2 + 1, 0.0);
  std::size_t count = 0;
  std::vector<double> frame(segment);
  for (std::size_t start = 0; start + segment <= x.size(); start += hop) {
    for (std::size_t i = 0; i < segment; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (segment - 1));
      frame[i] = x[start + i] * w;
    }
    const auto spec = naive_dft(frame);
    for (std::size_t k = 0; k <= segment / 2; ++k)
      psd[k] += std::norm(spec[k]);
    ++count;
  }
  for (double& v : psd) v /= static_cast<double>(std::max<std::size_t>(count, 1));
  return psd;
}

std::vector<double> octave_band_db(const std::vector<double>& psd,
                                   double sample_rate, double f_lo) {
  const std::size_t n_bins = psd.size();
  const double bin_hz = sample_rate / (2.0 * static_cast<double>(n_bins - 1));
  std::vector<double> bands;
  for (double f0 = f_lo; 2.0 * f0 <= sample_rate / 2.0; f0 *= 2.0) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 1; k < n_bins; ++k) {
      const double f = k * bin_hz;
      if (f >= f0 && f < 2.0 * f0) {
        total += psd[k];
        ++count;
      }
    }
    if (count > 0) bands.push_back(10.0 * std::log10(total / count + 1e-30));
  }
  return bands;
}

double envelope_decay_db_per_s(const std::vector<double>& x,
                               double sample_rate, double fit_seconds) {
  const auto win = static_cast<std::size_t>(sample_rate * 0.010);  // 10 ms
  const std::size_t limit = std::min(
      x.size(), static_cast<std::size_t>(fit_seconds * sample_rate));
  std::vector<double> ts, dbs;
  for (std::size_t start = 0; start + win <= limit; start += win) {
    double p = 0.0;
    for (std::size_t i = start; i < start + win; ++i) p += x[i] * x[i];
    p /= static_cast<double>(win);
    ts.push_back((static_cast<double>(start) + win / 2.0) / sample_rate);
    dbs.push_back(10.0 * std::log10(p + 1e-30));
  }
  // least squares slope
  const auto n = static_cast<double>(ts.size());
  double st = 0.0, sd = 0.0, stt = 0.0, std_ = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sd += dbs[i];
    stt += ts[i] * ts[i];
    std_ += ts[i] * dbs[i];
  }
  return (n * std_ - st * sd) / (n * stt - st * st);
}

double spectral_peak_hz(const std::vector<double>& x, double sample_rate) {
  const std::size_t n = next_pow2(x.size());
  std::vector<std::complex<double>> buf(n, {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (x.size() - 1));
    buf[i] = x[i] * w;
  }
  fft(buf);
  std::size_t best = 1;
  double best_mag = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double m = std::norm(buf[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  return static_cast<double>(best) * sample_rate / static_cast<double>(n);
}

}  // namespace corrkd::oracles
