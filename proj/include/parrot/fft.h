// parrot/fft.h

// Copyright 2026  Parrot Lab Authors
//
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

#ifndef PARROT_FFT_H_
#define PARROT_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace parrot {

/// Real-input FFT of fixed length backed by FFTW.  Instances own their
/// buffers and are not shared between threads; use RealFft::ForSize() to get
/// a per-thread cached instance.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  /// Zero-pads (or truncates) `x` to size() and returns n/2+1 bins.
  void Forward(std::span<const double> x,
               std::vector<std::complex<double>> *out);
  /// Unnormalized inverse: Forward then Inverse multiplies by size().
  void Inverse(std::span<const std::complex<double>> bins,
               std::vector<double> *out);

  static RealFft &ForSize(int n);

 private:
  int n_;
  double *real_;
  void *spec_;
  void *forward_plan_;
  void *inverse_plan_;
};

/// Smallest power of two >= n.
int NextPow2(int n);

}  // namespace parrot

#endif  // PARROT_FFT_H_
