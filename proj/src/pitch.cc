// src/pitch.cc

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

#include "parrot/pitch.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "parrot/common.h"
#include "parrot/fft.h"

namespace parrot {

namespace {
constexpr double kMaxHarmonicity = 1.0 - 1e-4;
constexpr double kSilenceFloor = 1e-10;  // mean power per sample
constexpr double kOctaveRatio = 0.9;
// Unvoices frames far from the clip's median f0 (octave errors), drops
// voiced runs shorter than min_voiced_run frames, then median-filters
// f0 inside each remaining run.
void SmoothVoicedRuns(const PitchConfig &config, PitchTrack *track) {
  const int n = static_cast<int>(track->num_frames());
  std::vector<double> voiced_f0;
  for (int t = 0; t < n; ++t)
    if (track->voiced[t]) voiced_f0.push_back(track->f0[t]);
  if (!voiced_f0.empty() && config.max_deviation_semitones > 0.0) {
    std::nth_element(voiced_f0.begin(), voiced_f0.begin() + voiced_f0.size() / 2,
                     voiced_f0.end());
    const double median = voiced_f0[voiced_f0.size() / 2];
    for (int t = 0; t < n; ++t)
      if (track->voiced[t] &&
          std::abs(12.0 * std::log2(track->f0[t] / median)) > config.max_deviation_semitones) {
        track->voiced[t] = 0;
        track->f0[t] = 0.0;
      }
  }
  const int half = std::max(config.median_width, 1) / 2;
  std::vector<double> smoothed = track->f0, window;
  for (int start = 0; start < n;) {
    if (!track->voiced[start]) {
      ++start;
      continue;
    }
    int end = start;
    while (end < n && track->voiced[end]) ++end;
    if (end - start < config.min_voiced_run) {
      for (int t = start; t < end; ++t) {
        track->voiced[t] = 0;
        smoothed[t] = 0.0;
      }
    } else {
      for (int t = start; t < end; ++t) {
        window.assign(track->f0.begin() + std::max(start, t - half),
                      track->f0.begin() + std::min(end, t + half + 1));
        std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
        smoothed[t] = window[window.size() / 2];
      }
    }
    start = end;
  }
  track->f0 = std::move(smoothed);
}

}  // namespace

size_t PitchTrack::NumVoiced() const {
  return static_cast<size_t>(std::count(voiced.begin(), voiced.end(), 1));
}

double PitchTrack::MeanVoicedF0() const {
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < f0.size(); ++i)
    if (voiced[i]) {
      sum += f0[i];
      ++n;
    }
  return n == 0 ? 0.0 : sum / n;
}

PitchTrack EstimatePitch(const AudioClip &clip, const PitchConfig &config) {
  if (!(config.min_f0 > 0 && config.max_f0 > config.min_f0))
    throw ConfigError("pitch search band invalid");
  const int rate = clip.sample_rate;
  const int window = static_cast<int>(std::lround(rate * config.window_ms / 1000.0));
  const int hop = static_cast<int>(std::lround(rate * config.hop_ms / 1000.0));
  const int min_lag = std::max(2, static_cast<int>(std::floor(rate / config.max_f0)));
  const int max_lag = static_cast<int>(std::ceil(rate / config.min_f0));
  const int span = window + max_lag + 1;
  if (clip.samples.size() < static_cast<size_t>(span))
    throw ConfigError("clip shorter than one pitch analysis frame");
  const int frames =
      static_cast<int>((clip.samples.size() - span) / hop) + 1;

  PitchTrack track;
  track.hop_ms = config.hop_ms;
  track.f0.assign(frames, 0.0);
  track.voiced.assign(frames, 0);
  track.harmonicity.assign(frames, 0.0);

  const int nfft = NextPow2(window + span);
  RealFft &fft = RealFft::ForSize(nfft);
  std::vector<double> seg(span), head(window), corr, prefix(span + 1);
  std::vector<std::complex<double>> a, b;
  std::vector<double> r(max_lag + 2, 0.0);

  // Loudest analysis window, for the relative silence gate.
  double peak_energy = 0.0;
  for (int t = 0; t < frames; ++t) {
    const double *x = clip.samples.data() + static_cast<size_t>(t) * hop;
    double e = 0.0;
    for (int n = 0; n < window; ++n) e += x[n] * x[n];
    peak_energy = std::max(peak_energy, e);
  }
  const double gate = peak_energy * std::pow(10.0, config.silence_db / 10.0);

  for (int t = 0; t < frames; ++t) {
    const double *x = clip.samples.data() + static_cast<size_t>(t) * hop;
    double mean = 0.0;
    for (int n = 0; n < span; ++n) mean += x[n];
    mean /= span;
    for (int n = 0; n < span; ++n) seg[n] = x[n] - mean;
    prefix[0] = 0.0;
    for (int n = 0; n < span; ++n) prefix[n + 1] = prefix[n] + seg[n] * seg[n];
    const double e0 = prefix[window];
    if (e0 < kSilenceFloor * window || e0 < gate) continue;

    std::copy_n(seg.begin(), window, head.begin());
    fft.Forward(head, &a);
    fft.Forward(seg, &b);
    for (size_t k = 0; k < a.size(); ++k) a[k] = std::conj(a[k]) * b[k];
    fft.Inverse(a, &corr);  // corr[tau] * nfft = sum_n head[n] seg[n + tau]

    double best = -1.0;
    for (int tau = min_lag - 1; tau <= max_lag + 1; ++tau) {
      const double et = prefix[tau + window] - prefix[tau];
      const double denom = std::sqrt(e0 * et);
      r[tau] = denom > 0 ? corr[tau] / nfft / denom : 0.0;
    }
    for (int tau = min_lag; tau <= max_lag; ++tau) best = std::max(best, r[tau]);
    if (best < config.voicing_threshold) {
      track.harmonicity[t] = std::max(best, 0.0);
      continue;
    }
    // Shortest-lag local maximum close to the global one avoids subharmonic
    // (octave-down) picks on strongly periodic frames.
    int pick = -1;
    for (int tau = min_lag; tau <= max_lag; ++tau) {
      if (r[tau] >= r[tau - 1] && r[tau] >= r[tau + 1] &&
          r[tau] >= kOctaveRatio * best) {
        pick = tau;
        break;
      }
    }
    if (pick < 0) continue;
    const double l = r[pick - 1], c = r[pick], rr = r[pick + 1];
    const double curv = l - 2.0 * c + rr;
    double shift = 0.0, peak = c;
    if (curv < 0.0) {
      shift = std::clamp(0.5 * (l - rr) / curv, -0.5, 0.5);
      peak = c - 0.25 * (l - rr) * shift;
    }
    const double f0 = rate / (pick + shift);
    track.harmonicity[t] = std::clamp(peak, 0.0, 1.0);
    if (f0 < config.min_f0 || f0 > config.max_f0) continue;
    track.f0[t] = f0;
    track.voiced[t] = 1;
  }
  SmoothVoicedRuns(config, &track);
  return track;
}

double Semitones(double from_hz, double to_hz) {
  return 12.0 * std::log2(to_hz / from_hz);
}

double PitchDistance(const PitchTrack &a, const PitchTrack &b) {
  if (a.NumVoiced() == 0 || b.NumVoiced() == 0)
    throw ConfigError("pitch distance needs voiced frames in both tracks");
  return std::abs(Semitones(b.MeanVoicedF0(), a.MeanVoicedF0()));
}

double HarmonicsToNoise(const PitchTrack &track, const PitchConfig &config) {
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < track.num_frames(); ++i) {
    if (!track.voiced[i]) continue;
    const double r = std::clamp(track.harmonicity[i], config.voicing_threshold,
                                kMaxHarmonicity);
    sum += 10.0 * std::log10(r / (1.0 - r));
    ++n;
  }
  if (n == 0) {
    const double r = config.voicing_threshold;
    return 10.0 * std::log10(r / (1.0 - r));
  }
  return sum / n;
}

}  // namespace parrot
