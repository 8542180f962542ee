// tests/carriers_test.cc

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <set>

#include "doctest.h"
#include "parrot/carriers.h"
#include "parrot/common.h"
#include "parrot/io.h"
#include "test_util.h"

using namespace parrot;

namespace {

// Power of x at frequency hz (single-bin DFT).
double TonePower(const std::vector<double> &x, double hz, int rate) {
  double re = 0.0, im = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double ph = 2.0 * std::numbers::pi * hz * i / rate;
    re += x[i] * std::cos(ph);
    im += x[i] * std::sin(ph);
  }
  return (re * re + im * im) / x.size();
}

// Frequency with the largest single-bin power on a 1 Hz grid.
double DominantFrequency(const std::vector<double> &x, int rate, double lo, double hi) {
  double best = lo, best_p = -1.0;
  for (double f = lo; f <= hi; f += 1.0) {
    const double p = TonePower(x, f, rate);
    if (p > best_p) {
      best_p = p;
      best = f;
    }
  }
  return best;
}

Carrier ToneCarrier(double hz) {
  Carrier c;
  c.kind = CarrierKind::kEnvironmental;
  c.id = "tone";
  c.category = "music";
  c.waveform = testing::Sine(hz, 1.0, 1.0);
  NormalizeUnitPower(&c.waveform);
  return c;
}

}  // namespace

TEST_CASE("noise carriers are seeded unit-variance Gaussians") {
  Carrier a = MakeNoiseCarrier(16000, 42), b = MakeNoiseCarrier(16000, 42);
  CHECK(a.waveform.samples == b.waveform.samples);
  CHECK(a.kind == CarrierKind::kNoise);
  double mean = 0.0;
  for (double v : a.waveform.samples) mean += v;
  mean /= 16000;
  double var = 0.0;
  for (double v : a.waveform.samples) var += (v - mean) * (v - mean);
  var /= 16000 - 1;
  CHECK(std::abs(var - 1.0) < 0.05);

  Carrier c = MakeNoiseCarrier(16000, 43);
  double dot = 0.0, na = 0.0, nc = 0.0;
  for (size_t i = 0; i < 16000; ++i) {
    dot += a.waveform.samples[i] * c.waveform.samples[i];
    na += a.waveform.samples[i] * a.waveform.samples[i];
    nc += c.waveform.samples[i] * c.waveform.samples[i];
  }
  CHECK(std::abs(dot / std::sqrt(na * nc)) < 0.05);
  CHECK_THROWS_AS(MakeNoiseCarrier(0, 1), ConfigError);
}

TEST_CASE("feature twist grid has 510 points") {
  auto grid = FeatureTwistGrid();
  CHECK(grid.size() == 510);
  std::set<std::pair<int, long>> unique;
  for (auto [s, r] : grid) {
    CHECK(OnTwistGrid(s, r));
    unique.insert({s, std::lround(r * 10)});
  }
  CHECK(unique.size() == 510);
  CHECK_FALSE(OnTwistGrid(0.5, 1.0));
  CHECK_FALSE(OnTwistGrid(26, 1.0));
  CHECK_FALSE(OnTwistGrid(0, 0.3));
  CHECK_FALSE(OnTwistGrid(0, 2.2));
  CHECK_FALSE(OnTwistGrid(0, 0.0));
}

TEST_CASE("identity feature twist is nearly silent") {
  AudioClip base = testing::Sine(220.0, 1.0, 0.5);
  Carrier c = MakeFeatureTwisted(base, 0, 1.0);
  CHECK(c.kind == CarrierKind::kFeatureTwisted);
  CHECK(c.waveform.size() == base.size());
  CHECK(Energy(c.waveform.samples) < 1e-3 * Energy(base.samples));
  CHECK_THROWS_AS(MakeFeatureTwisted(base, 0.5, 1.0), ConfigError);
  CHECK_THROWS_AS(MakeFeatureTwisted(base, 0, 0.3), ConfigError);
}

TEST_CASE("octave feature twist adds a 440 Hz component") {
  AudioClip base = testing::Sine(220.0, 1.0, 0.5);
  Carrier c = MakeFeatureTwisted(base, 12, 1.0);
  const auto &x = c.waveform.samples;
  CHECK(TonePower(x, 440.0, 16000) > 100.0 * TonePower(x, 330.0, 16000));
  CHECK(TonePower(x, 440.0, 16000) > 0.1 * TonePower(base.samples, 220.0, 16000));
  // Rate twists keep the base length.
  Carrier slow = MakeFeatureTwisted(base, 0, 0.6);
  CHECK(slow.waveform.size() == base.size());
  CHECK(slow.rate == doctest::Approx(0.6));
}

TEST_CASE("synthetic library is deterministic, categorized and unit power") {
  CarrierLibrary lib = SynthesizeEnvironmentalLibrary(30, 5);
  REQUIRE(lib.size() == 30);
  std::set<std::string> ids;
  std::map<std::string, int> per_cat;
  for (const auto &c : lib.carriers) {
    ids.insert(c.id);
    ++per_cat[c.category];
    CHECK(c.kind == CarrierKind::kEnvironmental);
    CHECK(MeanPower(c.waveform.samples) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_NOTHROW(ValidateCarrier(c));
  }
  CHECK(ids.size() == 30);
  CHECK(per_cat.size() == 5);
  for (const auto &[cat, n] : per_cat) CHECK(n == 6);
  CarrierLibrary again = SynthesizeEnvironmentalLibrary(30, 5);
  for (size_t i = 0; i < lib.size(); ++i)
    CHECK(again.carriers[i].waveform.samples == lib.carriers[i].waveform.samples);
  // A larger library extends the small one.
  CarrierLibrary big = SynthesizeEnvironmentalLibrary(200, 5);
  CHECK(big.size() == 200);
  CHECK(big.carriers[7].waveform.samples == lib.carriers[7].waveform.samples);
  for (const auto &c : big.carriers)
    CHECK(std::all_of(c.waveform.samples.begin(), c.waveform.samples.end(),
                      [](double v) { return std::isfinite(v); }));
}

TEST_CASE("environmental library manifest round trip") {
  auto dir = testing::ScratchDir("carrier_lib");
  SaveEnvironmentalLibrary(dir, SynthesizeEnvironmentalLibrary(30, 9));
  CarrierLibrary lib = LoadEnvironmentalLibrary(dir / "manifest.json");
  CHECK(lib.size() == 30);
  for (const auto &c : lib.carriers)
    CHECK(std::abs(MeanPower(c.waveform.samples) - 1.0) < 1e-6);
  // Order-stable and idempotent.
  CarrierLibrary again = LoadEnvironmentalLibrary(dir / "manifest.json");
  for (size_t i = 0; i < lib.size(); ++i) {
    CHECK(again.carriers[i].id == lib.carriers[i].id);
    CHECK(again.carriers[i].waveform.samples == lib.carriers[i].waveform.samples);
  }
  CHECK(lib.Find(lib.carriers[3].id).id == lib.carriers[3].id);
  CHECK_THROWS_AS(lib.Find("nope"), ConfigError);

  Json j = LoadJson(dir / "manifest.json");
  j["sounds"].push_back(j["sounds"][0]);
  SaveJson(dir / "dup.json", j);
  CHECK_THROWS_AS(LoadEnvironmentalLibrary(dir / "dup.json"), ConfigError);

  Json missing = {{"sounds", {{{"id", "x"}, {"path", "absent.wav"}, {"category", "natural"}}}}};
  SaveJson(dir / "missing.json", missing);
  CHECK_THROWS_AS(LoadEnvironmentalLibrary(dir / "missing.json"), DataError);

  // Mixed sample rates are resampled.
  WriteWav(dir / "low.wav", Resample(testing::Sine(300.0, 1.0, 0.3), 8000));
  Json low = {{"sounds", {{{"id", "low"}, {"path", "low.wav"}, {"category", "music"}}}}};
  SaveJson(dir / "low.json", low);
  CarrierLibrary l2 = LoadEnvironmentalLibrary(dir / "low.json");
  CHECK(l2.carriers[0].waveform.sample_rate == 16000);
}

TEST_CASE("pitch twist bounds and identity") {
  Carrier tone = ToneCarrier(300.0);
  Carrier same = PitchTwistCarrier(tone, 0);
  CHECK(same.kind == CarrierKind::kPitchTwisted);
  CHECK(testing::RelativeL2(same.waveform.samples, tone.waveform.samples) < 1e-3);
  CHECK_NOTHROW(PitchTwistCarrier(tone, 25));
  CHECK_NOTHROW(PitchTwistCarrier(tone, -25));
  CHECK_THROWS_AS(PitchTwistCarrier(tone, 26), ConfigError);
  CHECK_THROWS_AS(PitchTwistCarrier(tone, -26), ConfigError);
  Carrier up = PitchTwistCarrier(tone, 12);
  CHECK(MeanPower(up.waveform.samples) == doctest::Approx(1.0).epsilon(1e-9));
  const double f = DominantFrequency(up.waveform.samples, 16000, 400, 800);
  CHECK(std::abs(f / 600.0 - 1.0) < 0.02);
  CHECK(up.semitones == 12);
}

TEST_CASE("pitch twists of library sounds stay finite and unit power") {
  CarrierLibrary lib = SynthesizeEnvironmentalLibrary(10, 3);
  for (const auto &c : lib.carriers)
    for (int s : {-25, -7, 5, 25}) {
      Carrier t = PitchTwistCarrier(c, s);
      CHECK(MeanPower(t.waveform.samples) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK_NOTHROW(ValidateCarrier(t));
    }
}
