// parrot/mfcc.h

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

#ifndef PARROT_MFCC_H_
#define PARROT_MFCC_H_

#include <span>
#include <vector>

#include "parrot/audio.h"
#include "parrot/io.h"

namespace parrot {

struct MfccConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int num_ceps = 20;
  int num_mel_bins = 26;
  double preemph = 0.97;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  double log_floor = 1e-20;

  int FrameLength(int sample_rate) const;
  int HopLength(int sample_rate) const;
  /// floor((len - frame) / hop) + 1, or 0 if the clip is shorter than a frame.
  int NumFrames(size_t num_samples, int sample_rate) const;

  bool operator==(const MfccConfig &) const = default;
};

void to_json(Json &j, const MfccConfig &c);
void from_json(const Json &j, MfccConfig &c);

/// Row-major frames x coefficients.
struct MfccMatrix {
  int rows = 0;
  int cols = 0;
  double frame_ms = 0.0;
  double hop_ms = 0.0;
  std::vector<double> data;

  double &at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols,
            static_cast<size_t>(cols)};
  }
};

/// Pre-emphasis, Hamming window, power spectrum, HTK mel filterbank,
/// log with an additive floor, orthonormal DCT-II (c0 retained).
/// The object caches the filterbank and DCT matrix for one sample rate and
/// is immutable after construction.
class MfccComputer {
 public:
  MfccComputer(const MfccConfig &config, int sample_rate);

  const MfccConfig &config() const { return config_; }
  int sample_rate() const { return sample_rate_; }

  /// Throws ConfigError if the clip is shorter than one frame or its rate
  /// differs from sample_rate().
  MfccMatrix Compute(const AudioClip &clip) const;

  /// Gradient of a scalar loss w.r.t. the clip samples, given the loss
  /// gradient w.r.t. Compute(clip).
  std::vector<double> Backward(const AudioClip &clip,
                               const MfccMatrix &grad) const;

 private:
  void CheckClip(const AudioClip &clip) const;

  MfccConfig config_;
  int sample_rate_;
  int frame_len_;
  int hop_len_;
  int fft_size_;
  std::vector<double> window_;
  // Sparse triangular filters: first bin index and weights per mel bin.
  std::vector<int> filter_start_;
  std::vector<std::vector<double>> filter_weights_;
  std::vector<double> dct_;  // num_ceps x num_mel_bins
};

/// Convenience wrapper constructing a computer for the clip's rate.
MfccMatrix ComputeMfcc(const AudioClip &clip, const MfccConfig &config = {});

/// Per-coefficient mean followed by per-coefficient standard deviation
/// (population, with a 1e-8 variance floor): 2 * cols values.
std::vector<double> PoolMeanStd(const MfccMatrix &m);

/// Backward of PoolMeanStd: maps d loss / d pooled to d loss / d matrix.
MfccMatrix PoolMeanStdBackward(const MfccMatrix &m,
                               std::span<const double> grad_pooled);

}  // namespace parrot

#endif  // PARROT_MFCC_H_
