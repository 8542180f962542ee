// parrot/audio.h

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

#ifndef PARROT_AUDIO_H_
#define PARROT_AUDIO_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace parrot {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono waveform.  Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  AudioClip() = default;
  AudioClip(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws ConfigError unless the rate is positive and every sample finite.
void ValidateClip(const AudioClip &clip);

/// Sum of squares.
double Energy(std::span<const double> x);
/// Mean of squares; 0 for empty input.
double MeanPower(std::span<const double> x);

/// Reads PCM WAV (8/16/24/32-bit integer, any channel count).  Channels are
/// averaged; samples are scaled by 1/2^(bits-1).
AudioClip LoadWav(const std::filesystem::path &path);

/// Writes 16-bit mono PCM.  Samples are rounded and clipped to int16.
void WriteWav(const std::filesystem::path &path, const AudioClip &clip);

/// Band-limited (windowed-sinc) resampling to a new sample rate.
AudioClip Resample(const AudioClip &clip, int new_rate);

/// Resamples a waveform to exactly `out_len` samples spanning the same time
/// interval, low-pass filtering when shrinking.
std::vector<double> ResampleToLength(std::span<const double> x, size_t out_len);

/// Tiles a shorter waveform or truncates a longer one to `len` samples.
std::vector<double> TileToLength(std::span<const double> x, size_t len);

/// First `seconds` of a clip; throws ConfigError if the clip is shorter.
AudioClip Head(const AudioClip &clip, double seconds);

}  // namespace parrot

#endif  // PARROT_AUDIO_H_
