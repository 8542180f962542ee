// src/mfcc.cc

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

#include "parrot/mfcc.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "parrot/common.h"
#include "parrot/fft.h"

namespace parrot {

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

constexpr double kStdVarianceFloor = 1e-8;

}  // namespace

int MfccConfig::FrameLength(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * frame_ms / 1000.0));
}

int MfccConfig::HopLength(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
}

int MfccConfig::NumFrames(size_t num_samples, int sample_rate) const {
  const size_t frame = static_cast<size_t>(FrameLength(sample_rate));
  if (num_samples < frame) return 0;
  return static_cast<int>((num_samples - frame) / HopLength(sample_rate)) + 1;
}

void to_json(Json &j, const MfccConfig &c) {
  j = Json{{"frame_ms", c.frame_ms},       {"hop_ms", c.hop_ms},
           {"num_ceps", c.num_ceps},       {"num_mel_bins", c.num_mel_bins},
           {"preemph", c.preemph},         {"low_freq", c.low_freq},
           {"high_freq", c.high_freq},     {"log_floor", c.log_floor}};
}

void from_json(const Json &j, MfccConfig &c) {
  c.frame_ms = j.at("frame_ms").get<double>();
  c.hop_ms = j.at("hop_ms").get<double>();
  c.num_ceps = j.at("num_ceps").get<int>();
  c.num_mel_bins = j.at("num_mel_bins").get<int>();
  c.preemph = j.at("preemph").get<double>();
  c.low_freq = j.at("low_freq").get<double>();
  c.high_freq = j.at("high_freq").get<double>();
  c.log_floor = j.at("log_floor").get<double>();
}

MfccComputer::MfccComputer(const MfccConfig &config, int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  if (sample_rate <= 0) throw ConfigError("MFCC sample rate must be positive");
  frame_len_ = config.FrameLength(sample_rate);
  hop_len_ = config.HopLength(sample_rate);
  if (frame_len_ < 2 || hop_len_ < 1)
    throw ConfigError("MFCC frame/hop too short for sample rate");
  if (config.num_ceps < 1 || config.num_ceps > config.num_mel_bins)
    throw ConfigError("MFCC num_ceps must be in [1, num_mel_bins]");
  fft_size_ = NextPow2(frame_len_);

  window_.resize(frame_len_);
  for (int n = 0; n < frame_len_; ++n)
    window_[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n /
                                        (frame_len_ - 1));

  const double nyquist = 0.5 * sample_rate;
  const double high = config.high_freq > 0 ? config.high_freq : nyquist;
  if (!(config.low_freq >= 0 && config.low_freq < high && high <= nyquist))
    throw ConfigError("MFCC filterbank frequency range invalid");
  const int bins = fft_size_ / 2 + 1;
  const int m = config.num_mel_bins;
  const double mel_lo = HzToMel(config.low_freq), mel_hi = HzToMel(high);
  std::vector<double> centers(m + 2);
  for (int i = 0; i < m + 2; ++i)
    centers[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (m + 1));
  filter_start_.assign(m, 0);
  filter_weights_.assign(m, {});
  for (int i = 0; i < m; ++i) {
    const double left = centers[i], mid = centers[i + 1], right = centers[i + 2];
    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size_;
      double v = 0.0;
      if (f > left && f <= mid) v = (f - left) / (mid - left);
      else if (f > mid && f < right) v = (right - f) / (right - mid);
      if (v > 0.0) {
        if (first < 0) first = k;
        w.resize(k - first + 1, 0.0);
        w[k - first] = v;
      }
    }
    filter_start_[i] = first < 0 ? 0 : first;
    filter_weights_[i] = std::move(w);
  }

  dct_.resize(static_cast<size_t>(config.num_ceps) * m);
  for (int j = 0; j < config.num_ceps; ++j) {
    const double scale = j == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    for (int i = 0; i < m; ++i)
      dct_[static_cast<size_t>(j) * m + i] =
          scale * std::cos(std::numbers::pi * j * (i + 0.5) / m);
  }
}

void MfccComputer::CheckClip(const AudioClip &clip) const {
  if (clip.sample_rate != sample_rate_)
    throw ConfigError("MFCC computer built for " + std::to_string(sample_rate_) +
                      " Hz got clip at " + std::to_string(clip.sample_rate));
  if (clip.samples.size() < static_cast<size_t>(frame_len_))
    throw ConfigError("clip shorter than one MFCC frame");
}

MfccMatrix MfccComputer::Compute(const AudioClip &clip) const {
  CheckClip(clip);
  const int frames = config_.NumFrames(clip.samples.size(), sample_rate_);
  const int m = config_.num_mel_bins;
  MfccMatrix out;
  out.rows = frames;
  out.cols = config_.num_ceps;
  out.frame_ms = config_.frame_ms;
  out.hop_ms = config_.hop_ms;
  out.data.resize(static_cast<size_t>(frames) * out.cols);

  RealFft &fft = RealFft::ForSize(fft_size_);
  std::vector<double> frame(frame_len_);
  std::vector<std::complex<double>> spec;
  std::vector<double> logmel(m);
  const double p = config_.preemph;
  for (int t = 0; t < frames; ++t) {
    const double *x = clip.samples.data() + static_cast<size_t>(t) * hop_len_;
    frame[0] = (x[0] - p * x[0]) * window_[0];
    for (int n = 1; n < frame_len_; ++n)
      frame[n] = (x[n] - p * x[n - 1]) * window_[n];
    fft.Forward(frame, &spec);
    for (int i = 0; i < m; ++i) {
      double e = 0.0;
      const auto &w = filter_weights_[i];
      for (size_t k = 0; k < w.size(); ++k)
        e += w[k] * std::norm(spec[filter_start_[i] + k]);
      logmel[i] = std::log(e + config_.log_floor);
    }
    for (int j = 0; j < out.cols; ++j) {
      double c = 0.0;
      const double *d = dct_.data() + static_cast<size_t>(j) * m;
      for (int i = 0; i < m; ++i) c += d[i] * logmel[i];
      out.at(t, j) = c;
    }
  }
  return out;
}

std::vector<double> MfccComputer::Backward(const AudioClip &clip,
                                           const MfccMatrix &grad) const {
  CheckClip(clip);
  const int frames = config_.NumFrames(clip.samples.size(), sample_rate_);
  if (grad.rows != frames || grad.cols != config_.num_ceps)
    throw ConfigError("MFCC gradient shape mismatch");
  const int m = config_.num_mel_bins;
  const int bins = fft_size_ / 2 + 1;

  RealFft &fft = RealFft::ForSize(fft_size_);
  std::vector<double> result(clip.samples.size(), 0.0);
  std::vector<double> frame(frame_len_);
  std::vector<std::complex<double>> spec, z(bins);
  std::vector<double> g_energy(m), g_power(bins), g_frame;
  const double p = config_.preemph;
  for (int t = 0; t < frames; ++t) {
    const size_t offset = static_cast<size_t>(t) * hop_len_;
    const double *x = clip.samples.data() + offset;
    frame[0] = (x[0] - p * x[0]) * window_[0];
    for (int n = 1; n < frame_len_; ++n)
      frame[n] = (x[n] - p * x[n - 1]) * window_[n];
    fft.Forward(frame, &spec);

    for (int i = 0; i < m; ++i) {
      double g = 0.0;
      for (int j = 0; j < config_.num_ceps; ++j)
        g += dct_[static_cast<size_t>(j) * m + i] * grad.at(t, j);
      double e = 0.0;
      const auto &w = filter_weights_[i];
      for (size_t k = 0; k < w.size(); ++k)
        e += w[k] * std::norm(spec[filter_start_[i] + k]);
      g_energy[i] = g / (e + config_.log_floor);
    }
    std::fill(g_power.begin(), g_power.end(), 0.0);
    for (int i = 0; i < m; ++i) {
      const auto &w = filter_weights_[i];
      for (size_t k = 0; k < w.size(); ++k)
        g_power[filter_start_[i] + k] += w[k] * g_energy[i];
    }
    // d|X_k|^2 / d w_n = 2 Re(X_k e^{i w k n}); summed over k this is a
    // Hermitian inverse transform with doubled DC and Nyquist terms.
    for (int k = 0; k < bins; ++k) z[k] = g_power[k] * spec[k];
    z[0] *= 2.0;
    z[bins - 1] *= 2.0;
    fft.Inverse(z, &g_frame);

    double *g = result.data() + offset;
    for (int n = 0; n < frame_len_; ++n) {
      const double gy = g_frame[n] * window_[n];
      if (n == 0) {
        g[0] += (1.0 - p) * gy;
      } else {
        g[n] += gy;
        g[n - 1] -= p * gy;
      }
    }
  }
  return result;
}

MfccMatrix ComputeMfcc(const AudioClip &clip, const MfccConfig &config) {
  return MfccComputer(config, clip.sample_rate).Compute(clip);
}

std::vector<double> PoolMeanStd(const MfccMatrix &m) {
  if (m.rows < 1) throw ConfigError("cannot pool an empty MFCC matrix");
  std::vector<double> out(2 * static_cast<size_t>(m.cols), 0.0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out[c] += m.at(r, c);
  for (int c = 0; c < m.cols; ++c) out[c] /= m.rows;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      const double d = m.at(r, c) - out[c];
      out[m.cols + c] += d * d;
    }
  for (int c = 0; c < m.cols; ++c)
    out[m.cols + c] = std::sqrt(out[m.cols + c] / m.rows + kStdVarianceFloor);
  return out;
}

MfccMatrix PoolMeanStdBackward(const MfccMatrix &m,
                               std::span<const double> grad_pooled) {
  if (grad_pooled.size() != 2 * static_cast<size_t>(m.cols))
    throw ConfigError("pooled gradient size mismatch");
  const std::vector<double> pooled = PoolMeanStd(m);
  MfccMatrix g = m;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      const double mean = pooled[c], sd = pooled[m.cols + c];
      // d sd / d x_r = (x_r - mean) / (T sd); the mean term cancels.
      g.at(r, c) = grad_pooled[c] / m.rows +
                   grad_pooled[m.cols + c] * (m.at(r, c) - mean) / (m.rows * sd);
    }
  return g;
}

}  // namespace parrot
