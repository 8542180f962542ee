// tests/audio_test.cc

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

#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "parrot/audio.h"
#include "parrot/common.h"
#include "parrot/dsp.h"
#include "parrot/io.h"
#include "parrot/mfcc.h"
#include "parrot/pitch.h"
#include "test_util.h"

using namespace parrot;
using parrot::testing::RelativeL2;
using parrot::testing::Sine;
using parrot::testing::WhiteNoise;

namespace {

void Put(std::string *s, uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) s->push_back(static_cast<char>(v >> (8 * i)));
}

// Hand-assembled WAV so the reader is not only checked against the writer.
std::string RawWav(int format, int channels, int rate, int bits,
                   const std::vector<int32_t> &interleaved) {
  std::string body;
  for (int32_t v : interleaved) Put(&body, static_cast<uint32_t>(v), bits / 8);
  std::string s = "RIFF";
  Put(&s, 36 + body.size(), 4);
  s += "WAVEfmt ";
  Put(&s, 16, 4);
  Put(&s, format, 2);
  Put(&s, channels, 2);
  Put(&s, rate, 4);
  Put(&s, rate * channels * bits / 8, 4);
  Put(&s, channels * bits / 8, 2);
  Put(&s, bits, 2);
  s += "data";
  Put(&s, body.size(), 4);
  return s + body;
}

double MeanF0(const AudioClip &c) { return EstimatePitch(c).MeanVoicedF0(); }

// Independent straight-line MFCC: naive DFT, filterbank from the formula.
std::vector<std::vector<double>> ReferenceMfcc(const AudioClip &clip) {
  const int rate = clip.sample_rate, frame = 400, hop = 160, nfft = 512;
  const int mels = 26, ceps = 20;
  const double pi = std::numbers::pi;
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto imel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edges(mels + 2);
  for (int i = 0; i < mels + 2; ++i)
    edges[i] = imel(mel(20.0) + (mel(rate / 2.0) - mel(20.0)) * i / (mels + 1));
  std::vector<std::vector<double>> out;
  for (size_t start = 0; start + frame <= clip.size(); start += hop) {
    std::vector<double> w(frame);
    for (int n = 0; n < frame; ++n) {
      double prev = n == 0 ? clip.samples[start] : clip.samples[start + n - 1];
      w[n] = (clip.samples[start + n] - 0.97 * prev) *
             (0.54 - 0.46 * std::cos(2 * pi * n / (frame - 1)));
    }
    std::vector<double> power(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) {
      double re = 0, im = 0;
      for (int n = 0; n < frame; ++n) {
        re += w[n] * std::cos(2 * pi * k * n / nfft);
        im -= w[n] * std::sin(2 * pi * k * n / nfft);
      }
      power[k] = re * re + im * im;
    }
    std::vector<double> logmel(mels);
    for (int m = 0; m < mels; ++m) {
      double e = 0;
      for (int k = 0; k <= nfft / 2; ++k) {
        double f = k * static_cast<double>(rate) / nfft, v = 0;
        if (f > edges[m] && f <= edges[m + 1])
          v = (f - edges[m]) / (edges[m + 1] - edges[m]);
        else if (f > edges[m + 1] && f < edges[m + 2])
          v = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
        e += v * power[k];
      }
      logmel[m] = std::log(e + 1e-20);
    }
    std::vector<double> c(ceps);
    for (int j = 0; j < ceps; ++j) {
      double s = 0;
      for (int m = 0; m < mels; ++m) s += logmel[m] * std::cos(pi * j * (m + 0.5) / mels);
      c[j] = s * (j == 0 ? std::sqrt(1.0 / mels) : std::sqrt(2.0 / mels));
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("wav: 16-bit constant scales to 0.5") {
  auto dir = testing::ScratchDir("wav_const");
  WriteFileAtomic(dir / "c.wav", RawWav(1, 1, 16000, 16, std::vector<int32_t>(100, 16384)));
  AudioClip c = LoadWav(dir / "c.wav");
  CHECK(c.sample_rate == 16000);
  REQUIRE(c.size() == 100);
  for (double s : c.samples) CHECK(std::abs(s - 0.5) <= std::ldexp(1.0, -15));
}

TEST_CASE("wav: stereo channels are averaged") {
  auto dir = testing::ScratchDir("wav_stereo");
  std::vector<int32_t> lr;
  for (int i = 0; i < 50; ++i) {
    lr.push_back(16384);
    lr.push_back(-16384);
  }
  WriteFileAtomic(dir / "s.wav", RawWav(1, 2, 8000, 16, lr));
  AudioClip c = LoadWav(dir / "s.wav");
  CHECK(c.size() == 50);
  for (double s : c.samples) CHECK(s == 0.0);
}

TEST_CASE("wav: error paths") {
  auto dir = testing::ScratchDir("wav_err");
  CHECK_THROWS_AS(LoadWav(dir / "missing.wav"), DataError);
  WriteFileAtomic(dir / "float.wav", RawWav(3, 1, 16000, 32, {0, 0, 0}));
  CHECK_THROWS_AS(LoadWav(dir / "float.wav"), DataError);
  WriteFileAtomic(dir / "empty.wav", RawWav(1, 1, 16000, 16, {}));
  CHECK_THROWS_AS(LoadWav(dir / "empty.wav"), DataError);
}

TEST_CASE("wav: sine fixture round-trips through the writer") {
  auto dir = testing::ScratchDir("wav_sine");
  WriteWav(dir / "sine440_16k.wav", Sine(440, 1.0));
  AudioClip c = LoadWav(dir / "sine440_16k.wav");
  CHECK(c.sample_rate == 16000);
  CHECK(MeanF0(c) == doctest::Approx(440).epsilon(0.02));
  CHECK(RelativeL2(c.samples, Sine(440, 1.0).samples) < 1e-4);
}

TEST_CASE("resample: 8k tone to 16k keeps frequency") {
  AudioClip c = Resample(Sine(300, 0.5, 0.5, 8000), 16000);
  CHECK(c.sample_rate == 16000);
  CHECK(c.size() == 8000);
  CHECK(MeanF0(c) == doctest::Approx(300).epsilon(0.02));
}

TEST_CASE("mfcc: shape and short-clip error") {
  MfccConfig cfg;
  AudioClip c = Sine(440, 0.5);
  MfccMatrix m = ComputeMfcc(c, cfg);
  CHECK(m.rows == static_cast<int>((8000 - 400) / 160 + 1));
  CHECK(m.cols == 20);
  CHECK_THROWS_AS(ComputeMfcc(AudioClip(std::vector<double>(399, 0.1), 16000)),
                  ConfigError);
}

TEST_CASE("mfcc: digital silence gives identical rows") {
  MfccMatrix m = ComputeMfcc(AudioClip(std::vector<double>(4000, 0.0), 16000));
  for (int r = 1; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) CHECK(m.at(r, c) == m.at(0, c));
}

TEST_CASE("mfcc: halving amplitude only moves c0") {
  AudioClip a = WhiteNoise(0.5, 0.2, 3);
  AudioClip b = a;
  for (double &s : b.samples) s *= 0.5;
  MfccMatrix ma = ComputeMfcc(a), mb = ComputeMfcc(b);
  const double offset = ma.at(0, 0) - mb.at(0, 0);
  CHECK(offset > 0);
  for (int r = 0; r < ma.rows; ++r) {
    CHECK(ma.at(r, 0) - mb.at(r, 0) == doctest::Approx(offset).epsilon(1e-9));
    for (int c = 1; c < ma.cols; ++c) CHECK(std::abs(ma.at(r, c) - mb.at(r, c)) < 1e-6);
  }
}

TEST_CASE("mfcc: matches independent reference on the sine fixture") {
  AudioClip c = Sine(440, 0.3);
  MfccMatrix m = ComputeMfcc(c);
  auto ref = ReferenceMfcc(c);
  REQUIRE(static_cast<int>(ref.size()) == m.rows);
  double worst = 0;
  for (int r = 0; r < m.rows; ++r)
    for (int k = 0; k < m.cols; ++k) worst = std::max(worst, std::abs(m.at(r, k) - ref[r][k]));
  CHECK(worst < 1e-4);
}

TEST_CASE("mfcc: deterministic bytes") {
  AudioClip c = WhiteNoise(0.4, 0.1, 11);
  MfccMatrix a = ComputeMfcc(c), b = ComputeMfcc(c);
  REQUIRE(a.data.size() == b.data.size());
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

TEST_CASE("mfcc: backward matches finite differences") {
  AudioClip c = WhiteNoise(0.1, 0.1, 5);
  for (size_t i = 0; i < c.size(); ++i) c.samples[i] += 0.3 * std::sin(0.05 * i);
  MfccComputer comp(MfccConfig{}, 16000);
  // Loss = sum of pooled mean/std weighted by fixed coefficients.
  std::vector<double> w(40);
  for (int i = 0; i < 40; ++i) w[i] = std::sin(1.0 + i);
  auto loss = [&](const AudioClip &x) {
    auto p = PoolMeanStd(comp.Compute(x));
    double s = 0;
    for (int i = 0; i < 40; ++i) s += w[i] * p[i];
    return s;
  };
  MfccMatrix m = comp.Compute(c);
  std::vector<double> g = comp.Backward(c, PoolMeanStdBackward(m, w));
  for (size_t idx : {10ul, 200ul, 555ul, 1200ul, 1599ul}) {
    AudioClip p = c, q = c;
    const double h = 1e-5;
    p.samples[idx] += h;
    q.samples[idx] -= h;
    const double fd = (loss(p) - loss(q)) / (2 * h);
    CHECK(fd == doctest::Approx(g[idx]).epsilon(1e-4));
  }
}

TEST_CASE("pitch: pure tone and silence") {
  PitchTrack t = EstimatePitch(Sine(220, 0.5));
  REQUIRE(t.NumVoiced() > 0);
  for (size_t i = 0; i < t.num_frames(); ++i) {
    CHECK(t.voiced[i]);
    CHECK(t.f0[i] == doctest::Approx(220).epsilon(0.02));
  }
  PitchTrack s = EstimatePitch(AudioClip(std::vector<double>(8000, 0.0), 16000));
  CHECK(s.NumVoiced() == 0);
  CHECK_THROWS_AS(EstimatePitch(AudioClip(std::vector<double>(100, 0.1), 16000)),
                  ConfigError);
}

TEST_CASE("pitch: voiced frames stay in band") {
  for (double hz : {60.0, 110.0, 330.0, 480.0}) {
    PitchTrack t = EstimatePitch(Sine(hz, 0.4));
    for (size_t i = 0; i < t.num_frames(); ++i)
      if (t.voiced[i]) CHECK((t.f0[i] >= 50.0 && t.f0[i] <= 500.0));
    CHECK(t.MeanVoicedF0() == doctest::Approx(hz).epsilon(0.02));
  }
}

TEST_CASE("pitch_distance: formula values") {
  PitchTrack a, b, c;
  a.f0 = {440};
  a.voiced = {1};
  b = a;
  b.f0 = {880};
  c = a;
  c.f0 = {466.16};
  CHECK(PitchDistance(a, a) == 0.0);
  CHECK(PitchDistance(a, b) == 12.0);
  CHECK(PitchDistance(b, a) == 12.0);
  CHECK(PitchDistance(a, c) == doctest::Approx(1.0).epsilon(0.01));
  PitchTrack u;
  u.f0 = {0};
  u.voiced = {0};
  CHECK_THROWS_AS(PitchDistance(a, u), ConfigError);
}

TEST_CASE("pitch_distance: log identity across three tracks") {
  PitchTrack a, b, c;
  a.f0 = {150};
  b.f0 = {200};
  c.f0 = {310};
  a.voiced = b.voiced = c.voiced = {1};
  CHECK(PitchDistance(a, c) ==
        doctest::Approx(PitchDistance(a, b) + PitchDistance(b, c)).epsilon(1e-12));
}

TEST_CASE("shift_pitch: identity, octave and fifth-down") {
  AudioClip tone = Sine(220, 0.6);
  AudioClip same = ShiftPitch(tone, 0.0);
  CHECK(same.size() == tone.size());
  CHECK(RelativeL2(same.samples, tone.samples) < 1e-3);
  CHECK(MeanF0(ShiftPitch(tone, 12)) == doctest::Approx(440).epsilon(0.02));
  CHECK(MeanF0(ShiftPitch(Sine(300, 0.6), -7)) ==
        doctest::Approx(300 * std::exp2(-7.0 / 12)).epsilon(0.03));
  CHECK_NOTHROW(ShiftPitch(tone, 25));
  CHECK_THROWS_AS(ShiftPitch(tone, 25.5), ConfigError);
}

TEST_CASE("shift_pitch: up then down recovers the pitch") {
  AudioClip tone = Sine(200, 0.5);
  for (int s = 1; s <= 12; ++s) {
    AudioClip back = ShiftPitch(ShiftPitch(tone, s), -s);
    CHECK(MeanF0(back) == doctest::Approx(200).epsilon(0.03));
    AudioClip up = ShiftPitch(tone, s);
    CHECK(MeanF0(up) == doctest::Approx(200 * std::exp2(s / 12.0)).epsilon(0.03));
  }
}

TEST_CASE("time_stretch: identity, length and pitch preservation") {
  AudioClip tone = Sine(220, 2.0);
  AudioClip same = TimeStretch(tone, 1.0);
  CHECK(RelativeL2(same.samples, tone.samples) < 1e-3);
  AudioClip fast = TimeStretch(tone, 2.0);
  CHECK(std::abs(static_cast<long>(fast.size()) - 16000) <= 400);
  AudioClip slow = TimeStretch(Sine(220, 0.5), 0.5);
  CHECK(std::abs(static_cast<long>(slow.size()) - 16000) <= 400);
  CHECK(MeanF0(slow) == doctest::Approx(220).epsilon(0.03));
  CHECK_THROWS_AS(TimeStretch(tone, 0.1), ConfigError);
  CHECK_THROWS_AS(TimeStretch(tone, 2.5), ConfigError);
}

TEST_CASE("mix_at_scr: energy contract") {
  AudioClip s = Sine(300, 0.5, 0.3);
  AudioClip n = WhiteNoise(0.3, 1.0, 9);  // shorter: tiled
  AudioClip m0 = MixAtScr(s, n, 0.0);
  std::vector<double> carrier(s.size());
  for (size_t i = 0; i < s.size(); ++i) carrier[i] = m0.samples[i] - s.samples[i];
  CHECK(Energy(carrier) == doctest::Approx(Energy(s.samples)).epsilon(1e-6));
  CHECK(MeasureScr(s.samples, m0.samples) == doctest::Approx(0.0).epsilon(1e-6));

  AudioClip m60 = MixAtScr(s, n, 60.0);
  for (size_t i = 0; i < s.size(); ++i) carrier[i] = m60.samples[i] - s.samples[i];
  CHECK(Energy(carrier) / Energy(s.samples) == doctest::Approx(1e-6).epsilon(1e-6));

  AudioClip twice = MixAtScr(s, s, 0.0);
  for (size_t i = 0; i < s.size(); ++i)
    CHECK(twice.samples[i] == doctest::Approx(2 * s.samples[i]).epsilon(1e-12));

  CHECK_THROWS_AS(MixAtScr(s, AudioClip(std::vector<double>(10, 0.0), 16000), 0),
                  ConfigError);
  CHECK_THROWS_AS(MixAtScr(AudioClip(std::vector<double>(10, 0.0), 16000), s, 0),
                  ConfigError);
  CHECK_THROWS_AS(MixAtScr(s, n, std::numeric_limits<double>::infinity()), ConfigError);
}

TEST_CASE("mix_at_scr: doubling the gain lowers SCR by 6.02 dB") {
  AudioClip s = Sine(250, 0.3, 0.4);
  AudioClip n = WhiteNoise(0.3, 1.0, 4);
  const double g = ScrGain(Energy(s.samples), Energy(n.samples), 15.0);
  std::vector<double> a(s.size()), b(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    a[i] = s.samples[i] + g * n.samples[i];
    b[i] = s.samples[i] + 2 * g * n.samples[i];
  }
  CHECK(MeasureScr(s.samples, a) - MeasureScr(s.samples, b) ==
        doctest::Approx(20 * std::log10(2.0)).epsilon(1e-9));
}

TEST_CASE("quality_metrics: examples") {
  AudioClip s = Sine(200, 0.5, 0.3);
  QualityMetrics q = ComputeQualityMetrics(s, s);
  CHECK(q.l2 == 0.0);
  CHECK(q.linf == 0.0);
  CHECK(std::isinf(q.scr_db));
  CHECK(q.hnr_db > 20.0);

  AudioClip d = s;
  for (double &v : d.samples) v += 0.1;
  q = ComputeQualityMetrics(s, d);
  CHECK(q.linf == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(q.l2 == doctest::Approx(0.1 * std::sqrt(static_cast<double>(s.size()))).epsilon(1e-9));

  AudioClip noisy = MixAtScr(s, WhiteNoise(0.5, 1.0, 2), 20.0);
  CHECK(ComputeQualityMetrics(s, noisy).scr_db == doctest::Approx(20.0).epsilon(0.005));
  CHECK_THROWS_AS(ComputeQualityMetrics(s, Sine(200, 0.4)), ConfigError);
}
