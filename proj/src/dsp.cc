// src/dsp.cc

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

#include "parrot/dsp.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "parrot/common.h"
#include "parrot/fft.h"
#include "parrot/pitch.h"

namespace parrot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double PrincipalArg(double phase) {
  return phase - kTwoPi * std::round(phase / kTwoPi);
}

std::vector<double> PeriodicHann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
  return w;
}

int VocoderFftSize(int sample_rate) {
  return NextPow2(static_cast<int>(std::lround(sample_rate * 0.05)));
}

// Windowed frame of x centred at `centre`, zero outside the signal.
void GrabFrame(std::span<const double> x, long centre,
               const std::vector<double> &window, std::vector<double> *frame) {
  const long n = static_cast<long>(window.size());
  const long start = centre - n / 2;
  for (long i = 0; i < n; ++i) {
    const long idx = start + i;
    (*frame)[i] = (idx >= 0 && idx < static_cast<long>(x.size()))
                      ? x[idx] * window[i]
                      : 0.0;
  }
}

}  // namespace

std::vector<double> PhaseVocoderStretch(std::span<const double> x, double rate,
                                        int sample_rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw ConfigError("stretch rate must be positive and finite");
  const size_t out_len = static_cast<size_t>(
      std::max<long long>(1, std::llround(x.size() / rate)));
  const int nfft = VocoderFftSize(sample_rate);
  const int synth_hop = nfft / 4;
  const int bins = nfft / 2 + 1;
  const std::vector<double> window = PeriodicHann(nfft);
  RealFft &fft = RealFft::ForSize(nfft);

  const long frames = static_cast<long>(out_len / synth_hop) + 4;
  std::vector<double> out(out_len + nfft, 0.0), norm(out_len + nfft, 0.0);
  std::vector<double> frame(nfft), resynth;
  std::vector<std::complex<double>> spec, synth(bins);
  std::vector<double> prev_phase(bins, 0.0), synth_phase(bins, 0.0);
  long prev_pos = 0;

  for (long m = 0; m < frames; ++m) {
    const long pos = std::lround(m * synth_hop * rate);
    GrabFrame(x, pos, window, &frame);
    fft.Forward(frame, &spec);
    const double hop = static_cast<double>(pos - prev_pos);
    for (int k = 0; k < bins; ++k) {
      const double phase = std::arg(spec[k]);
      if (m == 0 || hop <= 0.0) {
        synth_phase[k] = phase;
      } else {
        const double omega = kTwoPi * k / nfft;
        const double dev = PrincipalArg(phase - prev_phase[k] - omega * hop);
        synth_phase[k] += synth_hop * (omega + dev / hop);
      }
      prev_phase[k] = phase;
      synth[k] = std::polar(std::abs(spec[k]), synth_phase[k]);
    }
    prev_pos = pos;
    fft.Inverse(synth, &resynth);
    // Output frame m is centred at m * synth_hop; buffer index is shifted by
    // nfft/2 so that the first frame's left half lands inside the buffer.
    const long base = m * synth_hop;
    for (int i = 0; i < nfft; ++i) {
      const long idx = base + i;
      if (idx >= static_cast<long>(out.size())) break;
      out[idx] += resynth[i] / nfft * window[i];
      norm[idx] += window[i] * window[i];
    }
  }
  std::vector<double> y(out_len);
  const size_t offset = nfft / 2;
  for (size_t i = 0; i < out_len; ++i) {
    const double w = norm[i + offset];
    y[i] = w > 1e-6 ? out[i + offset] / w : 0.0;
  }
  return y;
}

AudioClip TimeStretch(const AudioClip &clip, double rate) {
  if (!(rate >= kMinStretchRate && rate <= kMaxStretchRate))
    throw ConfigError("time-stretch rate " + std::to_string(rate) +
                      " outside [0.2, 2.0]");
  return AudioClip(PhaseVocoderStretch(clip.samples, rate, clip.sample_rate),
                   clip.sample_rate);
}

AudioClip ShiftPitch(const AudioClip &clip, double semitones,
                     double max_semitones) {
  if (!std::isfinite(semitones) || std::abs(semitones) > max_semitones)
    throw ConfigError("pitch shift of " + std::to_string(semitones) +
                      " semitones exceeds limit");
  const double ratio = std::exp2(semitones / 12.0);
  std::vector<double> stretched =
      PhaseVocoderStretch(clip.samples, 1.0 / ratio, clip.sample_rate);
  return AudioClip(ResampleToLength(stretched, clip.samples.size()),
                   clip.sample_rate);
}

std::vector<double> StftFilter(std::span<const double> x,
                               std::span<const double> gain, int fft_size) {
  const int bins = fft_size / 2 + 1;
  if (static_cast<int>(gain.size()) != bins)
    throw ConfigError("STFT filter gain has wrong length");
  const int hop = fft_size / 4;
  const std::vector<double> window = PeriodicHann(fft_size);
  RealFft &fft = RealFft::ForSize(fft_size);
  const long frames = static_cast<long>(x.size() / hop) + 4;
  std::vector<double> out(x.size() + fft_size, 0.0),
      norm(x.size() + fft_size, 0.0);
  std::vector<double> frame(fft_size), resynth;
  std::vector<std::complex<double>> spec;
  for (long m = 0; m < frames; ++m) {
    const long centre = m * hop;
    GrabFrame(x, centre, window, &frame);
    fft.Forward(frame, &spec);
    for (int k = 0; k < bins; ++k) spec[k] *= gain[k];
    fft.Inverse(spec, &resynth);
    for (int i = 0; i < fft_size; ++i) {
      const long idx = centre + i;
      if (idx >= static_cast<long>(out.size())) break;
      out[idx] += resynth[i] / fft_size * window[i];
      norm[idx] += window[i] * window[i];
    }
  }
  std::vector<double> y(x.size());
  const size_t offset = fft_size / 2;
  for (size_t i = 0; i < x.size(); ++i) {
    const double w = norm[i + offset];
    y[i] = w > 1e-6 ? out[i + offset] / w : 0.0;
  }
  return y;
}

double ScrGain(double signal_energy, double carrier_energy, double scr_db) {
  if (!std::isfinite(scr_db)) throw ConfigError("SCR must be finite");
  if (!(signal_energy > 0.0)) throw ConfigError("signal has zero energy");
  if (!(carrier_energy > 0.0)) throw ConfigError("carrier has zero energy");
  return std::sqrt(signal_energy /
                   (carrier_energy * std::pow(10.0, scr_db / 10.0)));
}

AudioClip MixAtScr(const AudioClip &signal, const AudioClip &carrier,
                   double scr_db) {
  if (signal.sample_rate != carrier.sample_rate)
    throw ConfigError("signal and carrier sample rates differ");
  const std::vector<double> c = TileToLength(carrier.samples, signal.size());
  const double g = ScrGain(Energy(signal.samples), Energy(c), scr_db);
  AudioClip out = signal;
  for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * c[i];
  return out;
}

double MeasureScr(std::span<const double> original,
                  std::span<const double> perturbed) {
  if (original.size() != perturbed.size())
    throw ConfigError("SCR needs equal-length clips");
  double diff = 0.0;
  for (size_t i = 0; i < original.size(); ++i) {
    const double d = perturbed[i] - original[i];
    diff += d * d;
  }
  if (diff == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(Energy(original) / diff);
}

QualityMetrics ComputeQualityMetrics(const AudioClip &original,
                                     const AudioClip &perturbed) {
  if (original.size() != perturbed.size())
    throw ConfigError("quality metrics need equal-length clips");
  if (original.sample_rate != perturbed.sample_rate)
    throw ConfigError("quality metrics need equal sample rates");
  QualityMetrics q;
  double sq = 0.0;
  for (size_t i = 0; i < original.size(); ++i) {
    const double d = perturbed.samples[i] - original.samples[i];
    sq += d * d;
    q.linf = std::max(q.linf, std::abs(d));
  }
  q.l2 = std::sqrt(sq);
  q.scr_db = MeasureScr(original.samples, perturbed.samples);
  q.hnr_db = HarmonicsToNoise(EstimatePitch(perturbed));
  return q;
}

}  // namespace parrot
