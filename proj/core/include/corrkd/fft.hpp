// core/include/corrkd/fft.hpp

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

#ifndef CORRKD_FFT_HPP_
#define CORRKD_FFT_HPP_

#include <complex>
#include <cstddef>
#include <vector>

namespace corrkd {

/// In-place iterative radix-2 FFT. Length must be a power of two.
void fft(std::vector<std::complex<double>>& x, bool inverse = false);

std::size_t next_pow2(std::size_t n);

/// |X_k|^2 for k = 0..n/2 of the real input (zero-padded to a power of two).
std::vector<double> power_spectrum(const std::vector<double>& frame,
                                   std::size_t n_fft);

/// Linear convolution of two real signals via FFT, full length a+b-1.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b);

}  // namespace corrkd

#endif  // CORRKD_FFT_HPP_
