// src/corpus.cc

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

#include "parrot/corpus.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace parrot {

namespace {

enum class Kind { kVowel, kNasal, kFricative };

struct PhonemeSpec {
  const char *name;
  Kind kind;
  std::array<double, 3> formants;  // F1-F3 (vowel/nasal) or {centre, bw, 0}
  double amp;
};

// Male reference formants; scaled per speaker.
constexpr PhonemeSpec kPhonemes[] = {
    {"IY", Kind::kVowel, {270, 2290, 3010}, 1.0},
    {"IH", Kind::kVowel, {390, 1990, 2550}, 1.0},
    {"EH", Kind::kVowel, {530, 1840, 2480}, 1.0},
    {"AE", Kind::kVowel, {660, 1720, 2410}, 1.0},
    {"AH", Kind::kVowel, {520, 1190, 2390}, 1.0},
    {"AA", Kind::kVowel, {730, 1090, 2440}, 1.0},
    {"AO", Kind::kVowel, {570, 840, 2410}, 1.0},
    {"UH", Kind::kVowel, {440, 1020, 2240}, 1.0},
    {"UW", Kind::kVowel, {300, 870, 2240}, 1.0},
    {"ER", Kind::kVowel, {490, 1350, 1690}, 1.0},
    {"EY", Kind::kVowel, {480, 2100, 2600}, 1.0},
    {"OW", Kind::kVowel, {450, 900, 2300}, 1.0},
    {"AY", Kind::kVowel, {700, 1200, 2500}, 1.0},
    {"M", Kind::kNasal, {280, 900, 2200}, 0.35},
    {"N", Kind::kNasal, {280, 1700, 2600}, 0.35},
    {"NG", Kind::kNasal, {280, 2000, 2700}, 0.3},
    {"S", Kind::kFricative, {6000, 2000, 0}, 0.25},
    {"SH", Kind::kFricative, {3000, 1500, 0}, 0.3},
    {"F", Kind::kFricative, {4500, 5000, 0}, 0.12},
    {"TH", Kind::kFricative, {5000, 4000, 0}, 0.1},
    {"HH", Kind::kFricative, {1500, 3000, 0}, 0.15},
};

const PhonemeSpec &FindPhoneme(const std::string &name) {
  for (const auto &p : kPhonemes)
    if (name == p.name) return p;
  throw ConfigError("unknown phoneme: " + name);
}

// Two-pole resonator with unity DC gain (Klatt form).
struct Resonator {
  double a = 1, b = 0, c = 0, y1 = 0, y2 = 0;
  void Set(double freq, double bw, int rate) {
    const double nyq = 0.5 * rate;
    freq = std::clamp(freq, 50.0, nyq * 0.95);
    const double r = std::exp(-std::numbers::pi * bw / rate);
    b = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / rate);
    c = -r * r;
    a = 1.0 - b - c;
  }
  double Step(double x) {
    const double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Segment {
  const PhonemeSpec *spec;  // nullptr for silence
  size_t start, len;
};

}  // namespace

const std::vector<std::string> &PhonemeAlphabet() {
  static const std::vector<std::string> alphabet = [] {
    std::vector<std::string> a;
    for (const auto &p : kPhonemes) a.push_back(p.name);
    return a;
  }();
  return alphabet;
}

SpeakerVoice RandomVoice(const std::string &id, const std::string &gender,
                         Rng &rng) {
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  SpeakerVoice v;
  v.id = id;
  v.gender = gender;
  if (gender == "m") {
    v.f0_hz = uni(95, 145);
    v.formant_scale = uni(0.88, 1.02);
  } else if (gender == "f") {
    v.f0_hz = uni(180, 250);
    v.formant_scale = uni(1.06, 1.22);
  } else {
    throw ConfigError("gender must be m or f");
  }
  v.f4_hz = uni(3200, 3900) * v.formant_scale;
  v.tilt = uni(0.88, 0.97);
  v.bandwidth_scale = uni(0.8, 1.4);
  v.breathiness = uni(0.02, 0.15);
  return v;
}

Utterance SynthesizeUtterance(const SpeakerVoice &voice, double seconds,
                              Rng &rng, int rate,
                              const std::vector<std::string> &phoneme_pool) {
  const size_t n = static_cast<size_t>(std::lround(seconds * rate));
  if (n == 0) throw ConfigError("utterance duration must be positive");
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::vector<const PhonemeSpec *> pool;
  if (phoneme_pool.empty()) {
    for (const auto &p : kPhonemes) pool.push_back(&p);
  } else {
    for (const auto &name : phoneme_pool) pool.push_back(&FindPhoneme(name));
  }

  // Segment plan: vowels dominate; short pauses between some segments.
  Utterance utt;
  std::vector<Segment> segs;
  size_t pos = 0;
  while (pos < n) {
    if (!segs.empty() && uni(0, 1) < 0.12) {
      const size_t len = static_cast<size_t>(uni(0.02, 0.06) * rate);
      segs.push_back({nullptr, pos, len});
      pos += len;
      continue;
    }
    const PhonemeSpec *p = pool[std::uniform_int_distribution<size_t>(
        0, pool.size() - 1)(rng)];
    if (p->kind != Kind::kVowel && uni(0, 1) < 0.4) {
      // Bias toward vowels when drawing from the full inventory.
      std::vector<const PhonemeSpec *> vowels;
      for (auto *q : pool)
        if (q->kind == Kind::kVowel) vowels.push_back(q);
      if (!vowels.empty())
        p = vowels[std::uniform_int_distribution<size_t>(0, vowels.size() - 1)(rng)];
    }
    double dur = p->kind == Kind::kVowel    ? uni(0.08, 0.2)
                 : p->kind == Kind::kNasal ? uni(0.05, 0.09)
                                           : uni(0.06, 0.12);
    const size_t len = static_cast<size_t>(dur * rate);
    segs.push_back({p, pos, len});
    utt.phonemes.push_back(p->name);
    pos += len;
  }

  const double f0_offset = uni(0.95, 1.05);
  const double vib_phase = uni(0, 2 * std::numbers::pi);
  const double vib_rate = uni(0.5, 1.2);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> out(n, 0.0);
  std::array<Resonator, 4> tract;
  Resonator fric;
  double src_lp1 = 0.0, src_lp2 = 0.0, phase = 0.0;
  double cur_f[3] = {500 * voice.formant_scale, 1500 * voice.formant_scale,
                     2500 * voice.formant_scale};
  const double bws[4] = {80, 100, 150, 250};
  size_t seg_idx = 0;
  double voiced_gain = 0.0, fric_gain = 0.0;
  double period_jitter = 1.0;
  constexpr int kUpdate = 32;

  for (size_t i = 0; i < n; ++i) {
    while (seg_idx + 1 < segs.size() && i >= segs[seg_idx].start + segs[seg_idx].len)
      ++seg_idx;
    const Segment &seg = segs[seg_idx];
    const PhonemeSpec *p = seg.spec;
    const bool voiced = p && p->kind != Kind::kFricative;
    const double target_voiced = voiced ? p->amp : 0.0;
    const double target_fric = (p && p->kind == Kind::kFricative) ? p->amp : 0.0;
    // ~5 ms amplitude smoothing.
    const double k_amp = 1.0 / (0.005 * rate);
    voiced_gain += (target_voiced - voiced_gain) * k_amp;
    fric_gain += (target_fric - fric_gain) * k_amp;

    if (i % kUpdate == 0) {
      if (voiced) {
        const double k = std::min(1.0, kUpdate / (0.015 * rate));
        for (int f = 0; f < 3; ++f)
          cur_f[f] += (p->formants[f] * voice.formant_scale - cur_f[f]) * k;
      }
      for (int f = 0; f < 3; ++f)
        tract[f].Set(cur_f[f], bws[f] * voice.bandwidth_scale, rate);
      tract[3].Set(voice.f4_hz, bws[3] * voice.bandwidth_scale, rate);
      if (p && p->kind == Kind::kFricative)
        fric.Set(p->formants[0] * std::sqrt(voice.formant_scale), p->formants[1], rate);
    }

    const double t = static_cast<double>(i) / rate;
    const double f0 = voice.f0_hz * f0_offset *
                      (1.0 + 0.06 * std::sin(2 * std::numbers::pi * vib_rate * t + vib_phase)) *
                      (1.0 - 0.04 * t / seconds);
    phase += f0 * period_jitter / rate;
    double pulse = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
      period_jitter = 1.0 + 0.01 * gauss(rng);
    }
    const double noise = gauss(rng);
    src_lp1 = pulse + voice.tilt * src_lp1;
    src_lp2 = src_lp1 + voice.tilt * src_lp2;
    double src = (src_lp2 * (1.0 - voice.tilt) + voice.breathiness * noise * 0.3) *
                 voiced_gain;
    double y = src;
    for (auto &r : tract) y = r.Step(y);
    double f = fric.Step(noise) * fric_gain;
    out[i] = y + f;
  }

  // Remove DC and normalize loudness.
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= n;
  for (double &v : out) v -= mean;
  const double rms = std::sqrt(MeanPower(out));
  const double target = 0.1 * std::pow(10.0, uni(-2.0, 2.0) / 20.0);
  if (rms > 0)
    for (double &v : out) v *= target / rms;
  utt.clip = AudioClip(std::move(out), rate);
  return utt;
}

std::string RoleName(SpeakerRole role) {
  switch (role) {
    case SpeakerRole::kEnrolled: return "enrolled";
    case SpeakerRole::kSource: return "source";
    case SpeakerRole::kOther: return "other";
    case SpeakerRole::kImpostor: return "impostor";
  }
  return "?";
}

SpeakerRole ParseRole(const std::string &name) {
  if (name == "enrolled" || name == "target") return SpeakerRole::kEnrolled;
  if (name == "source" || name == "source-pool") return SpeakerRole::kSource;
  if (name == "other") return SpeakerRole::kOther;
  if (name == "impostor") return SpeakerRole::kImpostor;
  throw ConfigError("unknown speaker role: " + name);
}

std::vector<std::string> DeskCorpus::IdsWithRole(SpeakerRole role) const {
  std::vector<std::string> ids;
  for (const auto &[id, s] : speakers)
    if (s.role == role) ids.push_back(id);
  return ids;
}

DeskCorpus BuildDeskCorpus(const DeskCorpusConfig &config, uint64_t seed) {
  DeskCorpus corpus;
  corpus.config = config;
  uint64_t stream = 0;
  auto add_group = [&](const char *prefix, SpeakerRole role, int count, int clips) {
    for (int s = 0; s < count; ++s) {
      char id[16];
      std::snprintf(id, sizeof(id), "%s%02d", prefix, s);
      Rng rng(DeriveSeed(seed, stream++));
      CorpusSpeaker sp;
      sp.voice = RandomVoice(id, s % 2 == 0 ? "m" : "f", rng);
      sp.role = role;
      for (int c = 0; c < clips; ++c)
        sp.utterances.push_back(
            SynthesizeUtterance(sp.voice, config.clip_seconds, rng, config.sample_rate));
      corpus.speakers.emplace(id, std::move(sp));
    }
  };
  add_group("enr", SpeakerRole::kEnrolled, config.enrolled_speakers,
            config.train_clips + config.test_clips);
  add_group("src", SpeakerRole::kSource, config.source_speakers, config.source_clips);
  add_group("oth", SpeakerRole::kOther, config.other_speakers, config.other_clips);
  add_group("imp", SpeakerRole::kImpostor, config.impostor_speakers,
            config.impostor_clips);
  if (config.enrolled_speakers < 1) throw ConfigError("corpus needs enrolled speakers");
  corpus.target_id = "enr00";
  Rng rng(DeriveSeed(seed, 10000));
  corpus.knowledge = SynthesizeUtterance(corpus.speakers.at("enr00").voice,
                                         config.knowledge_seconds, rng,
                                         config.sample_rate);
  return corpus;
}

void to_json(Json &j, const DeskCorpusConfig &c) {
  j = Json{{"enrolled_speakers", c.enrolled_speakers},
           {"train_clips", c.train_clips},
           {"test_clips", c.test_clips},
           {"source_speakers", c.source_speakers},
           {"source_clips", c.source_clips},
           {"other_speakers", c.other_speakers},
           {"other_clips", c.other_clips},
           {"impostor_speakers", c.impostor_speakers},
           {"impostor_clips", c.impostor_clips},
           {"clip_seconds", c.clip_seconds},
           {"knowledge_seconds", c.knowledge_seconds},
           {"sample_rate", c.sample_rate}};
}

void from_json(const Json &j, DeskCorpusConfig &c) {
  c.enrolled_speakers = j.value("enrolled_speakers", c.enrolled_speakers);
  c.train_clips = j.value("train_clips", c.train_clips);
  c.test_clips = j.value("test_clips", c.test_clips);
  c.source_speakers = j.value("source_speakers", c.source_speakers);
  c.source_clips = j.value("source_clips", c.source_clips);
  c.other_speakers = j.value("other_speakers", c.other_speakers);
  c.other_clips = j.value("other_clips", c.other_clips);
  c.impostor_speakers = j.value("impostor_speakers", c.impostor_speakers);
  c.impostor_clips = j.value("impostor_clips", c.impostor_clips);
  c.clip_seconds = j.value("clip_seconds", c.clip_seconds);
  c.knowledge_seconds = j.value("knowledge_seconds", c.knowledge_seconds);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
}

void SaveDeskCorpus(const std::filesystem::path &dir, const DeskCorpus &corpus) {
  Json speakers = Json::object();
  for (const auto &[id, sp] : corpus.speakers) {
    Json clips = Json::array(), transcripts = Json::array();
    for (size_t i = 0; i < sp.utterances.size(); ++i) {
      char name[16];
      std::snprintf(name, sizeof(name), "%03zu.wav", i);
      const std::string rel = id + "/" + name;
      WriteWav(dir / rel, sp.utterances[i].clip);
      clips.push_back(rel);
      transcripts.push_back(sp.utterances[i].phonemes);
    }
    speakers[id] = Json{{"role", RoleName(sp.role)},
                        {"gender", sp.voice.gender},
                        {"clips", clips},
                        {"transcripts", transcripts}};
  }
  WriteWav(dir / "knowledge.wav", corpus.knowledge.clip);
  SaveJson(dir / "manifest.json",
           Json{{"config", corpus.config},
                {"target", corpus.target_id},
                {"knowledge", {{"path", "knowledge.wav"},
                               {"transcript", corpus.knowledge.phonemes}}},
                {"speakers", speakers}});
}

namespace {

AudioClip LoadAt(const std::filesystem::path &path, int sample_rate) {
  AudioClip c = LoadWav(path);
  return c.sample_rate == sample_rate ? c : Resample(c, sample_rate);
}

}  // namespace

DeskCorpus LoadDeskCorpus(const std::filesystem::path &manifest, int sample_rate) {
  const Json j = LoadJson(manifest);
  const std::filesystem::path base = manifest.parent_path();
  DeskCorpus corpus;
  try {
    corpus.config = j.at("config").get<DeskCorpusConfig>();
    corpus.config.sample_rate = sample_rate;
    corpus.target_id = j.at("target").get<std::string>();
    for (const auto &[id, e] : j.at("speakers").items()) {
      CorpusSpeaker sp;
      sp.voice.id = id;
      sp.voice.gender = e.at("gender").get<std::string>();
      sp.role = ParseRole(e.at("role").get<std::string>());
      const Json &clips = e.at("clips");
      const Json transcripts = e.value("transcripts", Json::array());
      for (size_t i = 0; i < clips.size(); ++i) {
        Utterance u;
        u.clip = LoadAt(ResolvePath(base, clips[i].get<std::string>()), sample_rate);
        if (i < transcripts.size()) u.phonemes = transcripts[i].get<std::vector<std::string>>();
        sp.utterances.push_back(std::move(u));
      }
      if (sp.utterances.empty()) throw ConfigError("speaker without clips: " + id);
      corpus.speakers.emplace(id, std::move(sp));
    }
    const Json &k = j.at("knowledge");
    corpus.knowledge.clip = LoadAt(ResolvePath(base, k.at("path").get<std::string>()), sample_rate);
    corpus.knowledge.phonemes = k.value("transcript", std::vector<std::string>{});
  } catch (const Json::exception &e) {
    throw ConfigError("malformed corpus manifest " + manifest.string() + ": " + e.what());
  }
  if (!corpus.speakers.count(corpus.target_id))
    throw ConfigError("corpus target is not a listed speaker: " + corpus.target_id);
  return corpus;
}

}  // namespace parrot
