// parrot/dsp.h

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

#ifndef PARROT_DSP_H_
#define PARROT_DSP_H_

#include <functional>
#include <span>
#include <vector>

#include "parrot/audio.h"

namespace parrot {

inline constexpr double kMaxSemitoneShift = 25.0;
inline constexpr double kMinStretchRate = 0.2;
inline constexpr double kMaxStretchRate = 2.0;

/// Phase-vocoder time-scale modification without range checks.  Output has
/// round(len / rate) samples; rate > 1 shortens.
std::vector<double> PhaseVocoderStretch(std::span<const double> x, double rate,
                                        int sample_rate);

/// Pitch-preserving tempo change, rate in [0.2, 2.0].
AudioClip TimeStretch(const AudioClip &clip, double rate);

/// Duration-preserving pitch change: stretch by 2^(s/12), resample back.
/// |semitones| must not exceed `max_semitones`.
AudioClip ShiftPitch(const AudioClip &clip, double semitones,
                     double max_semitones = kMaxSemitoneShift);

/// Multiplies the short-time spectrum by gain(bin) and resynthesizes with
/// weighted overlap-add (Hann, 75% overlap).  `gain` has fft_size/2+1 taps.
std::vector<double> StftFilter(std::span<const double> x,
                               std::span<const double> gain, int fft_size);

/// Gain g such that 10 log10(E_signal / (g^2 E_carrier)) = scr_db.
double ScrGain(double signal_energy, double carrier_energy, double scr_db);

/// signal + g * carrier with the carrier tiled/truncated to the signal's
/// length and g chosen to hit `scr_db`.  Throws ConfigError on rate mismatch,
/// non-finite SCR or zero energy.
AudioClip MixAtScr(const AudioClip &signal, const AudioClip &carrier,
                   double scr_db);

/// 10 log10(E(original) / E(perturbed - original)); +inf when identical.
double MeasureScr(std::span<const double> original,
                  std::span<const double> perturbed);

struct QualityMetrics {
  double l2 = 0.0;
  double linf = 0.0;
  double scr_db = 0.0;
  double hnr_db = 0.0;  // of the perturbed clip
};

/// Throws ConfigError on length or rate mismatch.
QualityMetrics ComputeQualityMetrics(const AudioClip &original,
                                     const AudioClip &perturbed);

}  // namespace parrot

#endif  // PARROT_DSP_H_
