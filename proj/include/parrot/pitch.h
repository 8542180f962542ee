// parrot/pitch.h

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

#ifndef PARROT_PITCH_H_
#define PARROT_PITCH_H_

#include <vector>

#include "parrot/audio.h"

namespace parrot {

struct PitchConfig {
  double min_f0 = 50.0;
  double max_f0 = 500.0;
  double window_ms = 20.0;  // correlation window; frame span adds max lag
  double hop_ms = 10.0;
  double voicing_threshold = 0.3;  // on the normalized autocorrelation
  double silence_db = -35.0;  // windows this far below the loudest are unvoiced
  int min_voiced_run = 3;     // shorter voiced runs are discarded
  int median_width = 5;       // f0 median filter inside voiced runs
  double max_deviation_semitones = 10.0;  // from the clip median; 0 disables
};

/// Per-frame pitch.  f0 is 0 on unvoiced frames.  `harmonicity` is the peak
/// normalized autocorrelation in the lag band (0 on silent frames).
struct PitchTrack {
  std::vector<double> f0;
  std::vector<char> voiced;
  std::vector<double> harmonicity;
  double hop_ms = 10.0;

  size_t num_frames() const { return f0.size(); }
  size_t NumVoiced() const;
  /// Mean f0 over voiced frames, 0 if none.
  double MeanVoicedF0() const;
};

/// Normalized-autocorrelation pitch tracker with parabolic peak
/// interpolation, a relative silence gate and median smoothing of voiced
/// runs.  Throws ConfigError if the clip is shorter than one analysis frame
/// (window + longest lag).
PitchTrack EstimatePitch(const AudioClip &clip, const PitchConfig &config = {});

/// |12 log2(mean_a / mean_b)| over voiced-frame means, in semitones.
/// Throws ConfigError if either track has no voiced frame.
double PitchDistance(const PitchTrack &a, const PitchTrack &b);

/// Signed semitone interval 12 log2(to / from).
double Semitones(double from_hz, double to_hz);

/// Harmonics-to-noise ratio in dB: mean over voiced frames of
/// 10 log10(r / (1 - r)).  With no voiced frame the value at the voicing
/// threshold is returned, the lowest a voiced frame can report.
double HarmonicsToNoise(const PitchTrack &track,
                        const PitchConfig &config = {});

}  // namespace parrot

#endif  // PARROT_PITCH_H_
