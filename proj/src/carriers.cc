// src/carriers.cc

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

#include "parrot/carriers.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>

#include "parrot/common.h"
#include "parrot/dsp.h"
#include "parrot/io.h"

namespace parrot {

std::string CarrierKindName(CarrierKind kind) {
  switch (kind) {
    case CarrierKind::kNoise: return "noise";
    case CarrierKind::kFeatureTwisted: return "feature-twisted";
    case CarrierKind::kEnvironmental: return "environmental";
    case CarrierKind::kPitchTwisted: return "pitch-twisted-environmental";
  }
  return "?";
}

CarrierKind ParseCarrierKind(const std::string &name) {
  if (name == "noise") return CarrierKind::kNoise;
  if (name == "feature-twisted") return CarrierKind::kFeatureTwisted;
  if (name == "environmental") return CarrierKind::kEnvironmental;
  if (name == "pitch-twisted-environmental" || name == "pitch-twisted")
    return CarrierKind::kPitchTwisted;
  throw ConfigError("unknown carrier kind: " + name);
}

void ValidateCarrier(const Carrier &c) {
  ValidateClip(c.waveform);
  if (!(Energy(c.waveform.samples) > 0.0)) throw ConfigError("carrier has zero energy");
  if (std::abs(c.semitones) > kMaxTwistSemitones)
    throw ConfigError("carrier semitone shift out of range");
  if (c.rate < kMinStretchRate - 1e-9 || c.rate > kMaxStretchRate + 1e-9)
    throw ConfigError("carrier rhythm rate out of range");
}

void NormalizeUnitPower(AudioClip *clip) {
  const double p = MeanPower(clip->samples);
  if (!(p > 0.0)) throw ConfigError("cannot normalize a silent clip");
  const double g = 1.0 / std::sqrt(p);
  for (double &s : clip->samples) s *= g;
}

Carrier MakeNoiseCarrier(size_t length, uint64_t seed, int sample_rate) {
  if (length == 0) throw ConfigError("noise carrier length must be positive");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Carrier c;
  c.kind = CarrierKind::kNoise;
  c.id = "noise-" + std::to_string(seed);
  c.waveform.sample_rate = sample_rate;
  c.waveform.samples.resize(length);
  for (double &s : c.waveform.samples) s = g(rng);
  return c;
}

std::vector<std::pair<int, double>> FeatureTwistGrid() {
  std::vector<std::pair<int, double>> grid;
  for (int s = -kMaxTwistSemitones; s <= kMaxTwistSemitones; ++s)
    for (int k = 1; k <= 10; ++k) grid.emplace_back(s, k * kRateStep);
  return grid;
}

bool OnTwistGrid(double semitones, double rate) {
  if (semitones != std::round(semitones) || std::abs(semitones) > kMaxTwistSemitones)
    return false;
  const double k = rate / kRateStep;
  return std::abs(k - std::round(k)) < 1e-9 && std::round(k) >= 1 && std::round(k) <= 10;
}

Carrier MakeFeatureTwisted(const AudioClip &base, double semitones, double rate) {
  if (!OnTwistGrid(semitones, rate))
    throw ConfigError("feature twist parameters off the grid");
  rate = std::round(rate / kRateStep) * kRateStep;
  AudioClip twisted = ShiftPitch(base, semitones);
  if (rate != 1.0) twisted = TimeStretch(twisted, rate);
  Carrier c;
  c.kind = CarrierKind::kFeatureTwisted;
  c.semitones = semitones;
  c.rate = rate;
  c.waveform.sample_rate = base.sample_rate;
  c.waveform.samples.assign(base.size(), 0.0);
  for (size_t i = 0; i < base.size(); ++i)
    c.waveform.samples[i] = (i < twisted.size() ? twisted.samples[i] : 0.0) - base.samples[i];
  return c;
}

const Carrier &CarrierLibrary::Find(const std::string &id) const {
  for (const auto &c : carriers)
    if (c.id == id) return c;
  throw ConfigError("carrier not in library: " + id);
}

CarrierLibrary LoadEnvironmentalLibrary(const std::filesystem::path &manifest,
                                        int sample_rate) {
  const Json j = LoadJson(manifest);
  const auto base = manifest.parent_path();
  const auto &cats = CarrierCategories();
  CarrierLibrary lib;
  std::set<std::string> seen;
  try {
    for (const auto &e : j.at("sounds")) {
      Carrier c;
      c.kind = CarrierKind::kEnvironmental;
      c.id = e.at("id").get<std::string>();
      c.category = e.at("category").get<std::string>();
      if (!seen.insert(c.id).second) throw ConfigError("duplicate carrier id: " + c.id);
      if (std::find(cats.begin(), cats.end(), c.category) == cats.end())
        throw ConfigError("unknown carrier category: " + c.category);
      AudioClip clip = LoadWav(ResolvePath(base, e.at("path").get<std::string>()));
      if (clip.sample_rate != sample_rate) clip = Resample(clip, sample_rate);
      if (!(MeanPower(clip.samples) > 0.0))
        throw DataError("environmental sound is silent: " + c.id);
      NormalizeUnitPower(&clip);
      c.waveform = std::move(clip);
      lib.carriers.push_back(std::move(c));
    }
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("malformed carrier manifest: ") + e.what());
  }
  return lib;
}

void SaveEnvironmentalLibrary(const std::filesystem::path &dir,
                              const CarrierLibrary &library) {
  Json sounds = Json::array();
  // 16-bit files clip at |x| >= 1, so store at a fixed headroom; loading
  // renormalizes.
  for (const auto &c : library.carriers) {
    AudioClip scaled = c.waveform;
    double peak = 0.0;
    for (double s : scaled.samples) peak = std::max(peak, std::abs(s));
    const double g = peak > 0 ? 0.5 / peak : 1.0;
    for (double &s : scaled.samples) s *= g;
    WriteWav(dir / (c.id + ".wav"), scaled);
    sounds.push_back({{"id", c.id}, {"path", c.id + ".wav"}, {"category", c.category}});
  }
  SaveJson(dir / "manifest.json", Json{{"sounds", sounds}});
}

// ---------------------------------------------------------------------------
// Synthetic environmental sounds.

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Synth {
  int rate;
  size_t n;
  Rng *rng;

  double Uni(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(*rng);
  }
  std::vector<double> Noise() {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(n);
    for (double &v : x) v = g(*rng);
    return x;
  }
  // One-pole lowpass at cutoff hz.
  std::vector<double> Lowpass(std::vector<double> x, double hz) {
    const double a = std::exp(-kTwoPi * hz / rate);
    double y = 0.0;
    for (double &v : x) v = y = (1 - a) * v + a * y;
    return x;
  }
  std::vector<double> Highpass(std::vector<double> x, double hz) {
    std::vector<double> lp = Lowpass(x, hz);
    for (size_t i = 0; i < n; ++i) x[i] -= lp[i];
    return x;
  }
  // Two-pole resonator (constant peak gain).
  std::vector<double> Bandpass(const std::vector<double> &x, double hz, double bw) {
    const double r = std::exp(-std::numbers::pi * bw / rate);
    const double b1 = 2 * r * std::cos(kTwoPi * hz / rate), b2 = -r * r;
    std::vector<double> y(n);
    double y1 = 0, y2 = 0;
    for (size_t i = 0; i < n; ++i) {
      y[i] = (1 - r) * x[i] + b1 * y1 + b2 * y2;
      y2 = y1;
      y1 = y[i];
    }
    return y;
  }
  // Sum of harmonics of a time-varying f0 with 1/h^tilt amplitudes.
  std::vector<double> Harmonics(const std::function<double(double)> &f0, int count,
                                double tilt) {
    std::vector<double> y(n, 0.0);
    double phase = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      phase += kTwoPi * f0(t) / rate;
      for (int h = 1; h <= count; ++h) {
        if (f0(t) * h >= 0.45 * rate) break;
        y[i] += std::sin(h * phase) / std::pow(h, tilt);
      }
    }
    return y;
  }
  // Repeating events: env(t_since_onset) gates `x` every `period` seconds.
  std::vector<double> Gate(std::vector<double> x, double period, double jitter,
                           const std::function<double(double)> &env) {
    std::vector<double> g(n, 0.0);
    double onset = Uni(0.0, std::min(period, 0.5 * static_cast<double>(n) / rate));
    std::vector<double> onsets;
    while (onset < static_cast<double>(n) / rate) {
      onsets.push_back(onset);
      onset += period * (1.0 + Uni(-jitter, jitter));
    }
    for (double o : onsets)
      for (size_t i = static_cast<size_t>(o * rate); i < n; ++i) {
        const double v = env(static_cast<double>(i) / rate - o);
        if (v < 1e-4 && static_cast<double>(i) / rate - o > 1.0) break;
        g[i] += v;
      }
    for (size_t i = 0; i < n; ++i) x[i] *= g[i];
    return x;
  }
  std::vector<double> Am(std::vector<double> x, double hz, double depth) {
    const double ph = Uni(0, kTwoPi);
    for (size_t i = 0; i < n; ++i)
      x[i] *= 1.0 - depth + depth * 0.5 * (1 + std::sin(kTwoPi * hz * i / rate + ph));
    return x;
  }
  static std::vector<double> Add(std::vector<double> a, const std::vector<double> &b,
                                 double gb) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += gb * b[i];
    return a;
  }
  static std::function<double(double)> Decay(double attack, double tau) {
    return [=](double t) {
      if (t < 0) return 0.0;
      return (t < attack ? t / attack : 1.0) * std::exp(-t / tau);
    };
  }
  static std::function<double(double)> Burst(double len) {
    return [=](double t) {
      return t < 0 || t > len ? 0.0 : std::sin(std::numbers::pi * t / len);
    };
  }
  // Karplus-Strong plucked string.
  std::vector<double> Pluck(double f0, double period) {
    std::vector<double> y(n, 0.0);
    const size_t delay = static_cast<size_t>(rate / f0);
    for (size_t start = 0; start < n; start += static_cast<size_t>(period * rate)) {
      std::vector<double> buf(delay);
      std::uniform_real_distribution<double> u(-1, 1);
      for (double &b : buf) b = u(*rng);
      for (size_t i = start, k = 0; i < n; ++i, ++k) {
        const size_t idx = k % delay;
        const double v = buf[idx];
        buf[idx] = 0.996 * 0.5 * (v + buf[(idx + 1) % delay]);
        y[i] += v;
      }
    }
    return y;
  }
};

using Recipe = std::function<std::vector<double>(Synth &)>;

struct NamedRecipe {
  const char *name;
  const char *category;
  Recipe make;
};

const std::vector<NamedRecipe> &Recipes() {
  static const std::vector<NamedRecipe> recipes = {
      // natural
      {"wind", "natural", [](Synth &s) { return s.Am(s.Lowpass(s.Noise(), s.Uni(200, 600)), s.Uni(0.2, 0.6), 0.7); }},
      {"sea-waves", "natural", [](Synth &s) { return s.Am(s.Lowpass(s.Noise(), s.Uni(800, 1500)), s.Uni(0.3, 0.7), 0.9); }},
      {"rain", "natural", [](Synth &s) {
         auto drops = s.Gate(s.Highpass(s.Noise(), 2000), s.Uni(0.02, 0.05), 0.8, Synth::Decay(0.001, 0.004));
         return Synth::Add(drops, s.Highpass(s.Noise(), 3000), 0.1); }},
      {"stream", "natural", [](Synth &s) { return s.Am(s.Bandpass(s.Noise(), s.Uni(1200, 2500), 800), s.Uni(3, 8), 0.4); }},
      {"thunder", "natural", [](Synth &s) { return s.Gate(s.Lowpass(s.Noise(), 150), 1.5, 0.2, Synth::Decay(0.05, 0.5)); }},
      {"fire", "natural", [](Synth &s) {
         auto crackle = s.Gate(s.Highpass(s.Noise(), 1500), s.Uni(0.05, 0.12), 0.9, Synth::Decay(0.0005, 0.003));
         return Synth::Add(crackle, s.Lowpass(s.Noise(), 300), 0.3); }},
      // things
      {"engine", "things", [](Synth &s) {
         const double f = s.Uni(30, 60);
         return Synth::Add(s.Harmonics([f](double) { return f; }, 40, 0.8), s.Lowpass(s.Noise(), 400), 0.3); }},
      {"kettle-whistle", "things", [](Synth &s) {
         const double f = s.Uni(1800, 3200);
         return Synth::Add(s.Harmonics([f](double t) { return f * (1 + 0.01 * std::sin(kTwoPi * 5 * t)); }, 2, 2.0),
                           s.Bandpass(s.Noise(), f, 300), 0.2); }},
      {"bell", "things", [](Synth &s) {
         const double f = s.Uni(300, 900);
         std::vector<double> y(s.n, 0.0);
         const double partials[] = {1.0, 2.0, 2.4, 3.0, 4.5, 5.33};
         for (double p : partials) y = Synth::Add(y, s.Harmonics([=](double) { return f * p; }, 1, 1), 1.0 / p);
         return s.Gate(y, 1.0, 0.0, Synth::Decay(0.002, 0.4)); }},
      {"clock", "things", [](Synth &s) { return s.Gate(s.Bandpass(s.Noise(), s.Uni(2000, 4000), 400), 0.5, 0.0, Synth::Decay(0.0005, 0.01)); }},
      {"siren", "things", [](Synth &s) {
         const double lo = s.Uni(500, 700), hi = lo * 1.5, rate = s.Uni(0.3, 0.8);
         return s.Harmonics([=](double t) { return lo + (hi - lo) * 0.5 * (1 + std::sin(kTwoPi * rate * t)); }, 5, 1.5); }},
      {"fan-hum", "things", [](Synth &s) {
         return Synth::Add(s.Harmonics([](double) { return 50.0; }, 20, 1.0), s.Lowpass(s.Noise(), 1000), 0.5); }},
      // human
      {"applause", "human", [](Synth &s) { return s.Gate(s.Bandpass(s.Noise(), 1500, 2000), 0.01, 0.9, Synth::Decay(0.0005, 0.005)); }},
      {"footsteps", "human", [](Synth &s) { return s.Gate(s.Lowpass(s.Noise(), 500), s.Uni(0.45, 0.6), 0.05, Synth::Decay(0.002, 0.04)); }},
      {"laughter", "human", [](Synth &s) {
         const double f = s.Uni(180, 280);
         auto v = s.Bandpass(s.Harmonics([f](double) { return f; }, 20, 1.0), 700, 300);
         return s.Gate(v, 0.18, 0.1, Synth::Burst(0.1)); }},
      {"cough", "human", [](Synth &s) { return s.Gate(s.Bandpass(s.Noise(), s.Uni(500, 900), 600), 0.7, 0.2, Synth::Decay(0.01, 0.08)); }},
      {"whistling", "human", [](Synth &s) {
         const double f = s.Uni(900, 1600);
         return s.Harmonics([f](double t) { return f * (1 + 0.08 * std::sin(kTwoPi * 1.5 * t)); }, 1, 1); }},
      {"humming", "human", [](Synth &s) {
         const double f = s.Uni(100, 220);
         return s.Bandpass(s.Harmonics([f](double t) { return f * (1 + 0.03 * std::sin(kTwoPi * 0.5 * t)); }, 30, 1.2), 300, 200); }},
      // animal
      {"bird", "animal", [](Synth &s) {
         const double f = s.Uni(2500, 4500);
         auto chirp = s.Harmonics([f](double t) { return f * (1 + 0.3 * std::sin(kTwoPi * 12 * t)); }, 2, 2);
         return s.Gate(chirp, s.Uni(0.15, 0.3), 0.3, Synth::Burst(0.08)); }},
      {"dog-bark", "animal", [](Synth &s) {
         const double f = s.Uni(300, 500);
         auto v = s.Bandpass(s.Harmonics([f](double) { return f; }, 15, 0.8), 1000, 500);
         return s.Gate(Synth::Add(v, s.Noise(), 0.05), 0.5, 0.2, Synth::Decay(0.005, 0.06)); }},
      {"cat-meow", "animal", [](Synth &s) {
         const double f = s.Uni(450, 700);
         return s.Bandpass(s.Harmonics([f](double t) { return f * (1 + 0.3 * std::sin(kTwoPi * 0.5 * t)); }, 10, 1.0), 1500, 800); }},
      {"cricket", "animal", [](Synth &s) {
         const double f = s.Uni(4000, 5000);
         return s.Gate(s.Harmonics([f](double) { return f; }, 1, 1), 0.05, 0.05, Synth::Burst(0.02)); }},
      {"frog", "animal", [](Synth &s) {
         const double f = s.Uni(80, 150);
         return s.Gate(s.Harmonics([f](double) { return f; }, 20, 0.7), 0.35, 0.1, Synth::Burst(0.15)); }},
      {"cow", "animal", [](Synth &s) {
         const double f = s.Uni(90, 140);
         return s.Bandpass(s.Harmonics([f](double t) { return f * (1 - 0.1 * t); }, 25, 1.0), 500, 400); }},
      // music
      {"chord", "music", [](Synth &s) {
         const double f = s.Uni(180, 300);
         std::vector<double> y(s.n, 0.0);
         for (double ratio : {1.0, 1.26, 1.5}) y = Synth::Add(y, s.Harmonics([=](double) { return f * ratio; }, 6, 1.5), 1.0);
         return y; }},
      {"piano-arpeggio", "music", [](Synth &s) {
         const double f = s.Uni(200, 400);
         std::vector<double> y(s.n, 0.0);
         const double steps[] = {1.0, 1.26, 1.5, 2.0};
         for (int k = 0; k < 4; ++k) {
           auto note = s.Harmonics([=](double) { return f * steps[k]; }, 8, 1.5);
           y = Synth::Add(y, s.Gate(note, 1.0, 0.0, [k](double t) { return Synth::Decay(0.005, 0.3)(t - 0.25 * k); }), 1.0);
         }
         return y; }},
      {"flute", "music", [](Synth &s) {
         const double f = s.Uni(500, 900);
         auto tone = s.Harmonics([f](double t) { return f * (1 + 0.01 * std::sin(kTwoPi * 5 * t)); }, 3, 2.5);
         return Synth::Add(tone, s.Bandpass(s.Noise(), f, 200), 0.1); }},
      {"drums", "music", [](Synth &s) {
         auto kick = s.Gate(s.Harmonics([](double) { return 60.0; }, 1, 1), 0.5, 0.0, Synth::Decay(0.002, 0.08));
         auto snare = s.Gate(s.Highpass(s.Noise(), 1000), 0.5, 0.0, [](double t) { return Synth::Decay(0.001, 0.05)(t - 0.25); });
         return Synth::Add(kick, snare, 0.6); }},
      {"strings", "music", [](Synth &s) {
         const double f = s.Uni(150, 300);
         auto a = s.Harmonics([f](double) { return f; }, 20, 1.0);
         return s.Lowpass(Synth::Add(a, s.Harmonics([f](double) { return f * 1.004; }, 20, 1.0), 1.0), 3000); }},
      {"guitar", "music", [](Synth &s) { return s.Pluck(s.Uni(110, 330), s.Uni(0.4, 0.7)); }},
  };
  return recipes;
}

}  // namespace

CarrierLibrary SynthesizeEnvironmentalLibrary(int count, uint64_t seed, double seconds,
                                              int sample_rate) {
  if (count < 1) throw ConfigError("library size must be positive");
  const auto &recipes = Recipes();
  // Recipes grouped per category so ids rotate through categories.
  std::vector<std::vector<const NamedRecipe *>> by_cat(CarrierCategories().size());
  for (const auto &r : recipes) {
    const auto &cats = CarrierCategories();
    by_cat[std::find(cats.begin(), cats.end(), r.category) - cats.begin()].push_back(&r);
  }
  CarrierLibrary lib;
  const size_t n = static_cast<size_t>(std::lround(seconds * sample_rate));
  for (int i = 0; i < count; ++i) {
    const auto &group = by_cat[i % by_cat.size()];
    const int round = i / static_cast<int>(by_cat.size());
    const NamedRecipe &r = *group[round % group.size()];
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(i)));
    Synth synth{sample_rate, n, &rng};
    Carrier c;
    c.kind = CarrierKind::kEnvironmental;
    char id[64];
    std::snprintf(id, sizeof(id), "env%03d-%s", i, r.name);
    c.id = id;
    c.category = r.category;
    c.waveform = AudioClip(r.make(synth), sample_rate);
    NormalizeUnitPower(&c.waveform);
    lib.carriers.push_back(std::move(c));
  }
  return lib;
}

Carrier PitchTwistCarrier(const Carrier &c, double semitones) {
  if (std::abs(semitones) > kMaxTwistSemitones)
    throw ConfigError("pitch twist beyond +/-25 semitones");
  Carrier out = c;
  out.kind = CarrierKind::kPitchTwisted;
  out.semitones = c.semitones + semitones;
  if (std::abs(out.semitones) > kMaxTwistSemitones)
    throw ConfigError("accumulated pitch twist beyond +/-25 semitones");
  if (semitones != 0.0) out.waveform = ShiftPitch(c.waveform, semitones);
  NormalizeUnitPower(&out.waveform);
  return out;
}

}  // namespace parrot
