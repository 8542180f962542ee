// src/fft.cc

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

#include "parrot/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "parrot/common.h"

namespace parrot {

namespace {
// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw ConfigError("FFT size must be >= 2");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  real_ = fftw_alloc_real(n);
  auto *spec = fftw_alloc_complex(n / 2 + 1);
  spec_ = spec;
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::Forward(std::span<const double> x,
                      std::vector<std::complex<double>> *out) {
  const size_t m = std::min<size_t>(x.size(), n_);
  std::copy_n(x.begin(), m, real_);
  std::fill(real_ + m, real_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const auto *spec = static_cast<const fftw_complex *>(spec_);
  out->resize(num_bins());
  for (int k = 0; k < num_bins(); ++k) (*out)[k] = {spec[k][0], spec[k][1]};
}

void RealFft::Inverse(std::span<const std::complex<double>> bins,
                      std::vector<double> *out) {
  auto *spec = static_cast<fftw_complex *>(spec_);
  for (int k = 0; k < num_bins(); ++k) {
    spec[k][0] = bins[k].real();
    spec[k][1] = bins[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  out->assign(real_, real_ + n_);
}

RealFft &RealFft::ForSize(int n) {
  thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto &slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

int NextPow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace parrot
