// tests/parrot_gen_test.cc

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
#include <random>
#include <set>

#include "doctest.h"
#include "parrot/corpus.h"
#include "parrot/parrot_gen.h"
#include "parrot/pitch.h"
#include "test_util.h"

using namespace parrot;

namespace {

// Voiced harmonic tone with a few partials.
AudioClip Harmonic(double f0, double seconds, double amp = 0.2) {
  AudioClip c = testing::Sine(f0, seconds, amp);
  for (int h = 2; h <= 4; ++h) {
    AudioClip p = testing::Sine(f0 * h, seconds, amp / h);
    for (size_t i = 0; i < c.size(); ++i) c.samples[i] += p.samples[i];
  }
  return c;
}

SpeakerVoice VoiceWithF0(const std::string &id, double f0, double formant_scale) {
  SpeakerVoice v;
  v.id = id;
  v.gender = f0 > 160 ? "f" : "m";
  v.f0_hz = f0;
  v.formant_scale = formant_scale;
  v.f4_hz = 3500 * formant_scale;
  return v;
}

const DeskCorpus &SmallCorpus() {
  static const DeskCorpus corpus = [] {
    DeskCorpusConfig c;
    c.enrolled_speakers = 3;
    c.train_clips = 2;
    c.test_clips = 0;
    c.source_speakers = 8;
    c.source_clips = 4;
    c.other_speakers = 0;
    c.impostor_speakers = 0;
    c.knowledge_seconds = 8.0;
    return BuildDeskCorpus(c, 17);
  }();
  return corpus;
}

double Distance(const AudioClip &a, const AudioClip &b) {
  return PitchDistance(EstimatePitch(a), EstimatePitch(b));
}

// Scores derived from the first sample: the model "hears" label index
// round(100 * x[0]).
class StubModel : public SpeakerModel {
 public:
  explicit StubModel(std::vector<std::string> labels)
      : SpeakerModel(std::move(labels), MfccConfig{}) {}
  ModelFamily family() const override { return ModelFamily::kNeural; }
  std::vector<double> Scores(const AudioClip &clip) const override {
    std::vector<double> s(labels_.size(), 0.0);
    const long idx = std::lround(clip.samples.at(0) * 100.0);
    s.at(idx) = 1.0;
    return s;
  }
  Json ToJson() const override { return Json::object(); }
};

AudioClip Coded(int idx) {
  return AudioClip(std::vector<double>{idx / 100.0, 0.0}, 16000);
}

}  // namespace

TEST_CASE("select_source_speaker picks the nearest mean pitch") {
  SpeakerPool pool;
  const double f0s[] = {180.0, 220.0, 300.0};
  const char *ids[] = {"a", "b", "c"};
  for (int i = 0; i < 3; ++i)
    pool.speakers[ids[i]] = PoolSpeaker{PoolRole::kSource, {Harmonic(f0s[i], 0.5)}, {}};
  CHECK(SelectSourceSpeaker(Harmonic(210.0, 0.5), pool) == "b");
  // Non-source speakers never qualify.
  pool.speakers["t"] = PoolSpeaker{PoolRole::kTarget, {Harmonic(210.0, 0.5)}, {}};
  CHECK(SelectSourceSpeaker(Harmonic(210.0, 0.5), pool) == "b");
  CHECK_THROWS_AS(SelectSourceSpeaker(AudioClip(std::vector<double>(8000, 0.0), 16000), pool),
                  ConfigError);
}

TEST_CASE("select_source_speaker finds the speaker a clip came from") {
  SpeakerPool pool = PoolFromCorpus(SmallCorpus());
  for (const auto &id : pool.IdsWithRole(PoolRole::kSource)) {
    const AudioClip &clip = pool.speakers.at(id).clips.front();
    // Pitch distance of a speaker's own clip is near zero but other clips
    // of the same speaker vary; use a single-clip pool entry as reference.
    SpeakerPool single;
    for (const auto &[sid, s] : pool.speakers)
      if (s.role == PoolRole::kSource)
        single.speakers[sid] = PoolSpeaker{PoolRole::kSource, {s.clips.front()}, {}};
    CHECK(SelectSourceSpeaker(clip, single) == id);
  }
}

TEST_CASE("source ranking matches an exhaustive sort over 110 speakers") {
  Rng rng(110);
  std::uniform_real_distribution<double> f(90.0, 320.0);
  SpeakerPool pool;
  std::vector<std::vector<double>> f0s;
  for (int s = 0; s < 110; ++s) {
    char id[8];
    std::snprintf(id, sizeof(id), "s%03d", s);
    PoolSpeaker ps;
    for (int c = 0; c < 2; ++c) ps.clips.push_back(Harmonic(f(rng), 0.3));
    pool.speakers[id] = ps;
  }
  const AudioClip target = Harmonic(171.0, 0.5);
  // Oracle: per-clip means from the tracker, distances and sort done here.
  const double tf = EstimatePitch(target).MeanVoicedF0();
  std::vector<std::pair<double, std::string>> oracle;
  for (const auto &[id, s] : pool.speakers) {
    double d = 0.0;
    for (const auto &c : s.clips)
      d += std::abs(12.0 * std::log2(EstimatePitch(c).MeanVoicedF0() / tf));
    oracle.push_back({d / s.clips.size(), id});
  }
  std::sort(oracle.begin(), oracle.end());
  const auto ranked = RankSourceSpeakers(target, pool);
  REQUIRE(ranked.size() == 110);
  for (size_t i = 0; i < ranked.size(); ++i) {
    CHECK(ranked[i].id == oracle[i].second);
    CHECK(ranked[i].distance == doctest::Approx(oracle[i].first).epsilon(1e-12));
  }
}

TEST_CASE("select_source_speaker ignores pool insertion order") {
  const DeskCorpus &corpus = SmallCorpus();
  SpeakerPool forward = PoolFromCorpus(corpus), backward;
  std::vector<std::string> ids;
  for (const auto &[id, s] : forward.speakers) ids.push_back(id);
  std::reverse(ids.begin(), ids.end());
  for (const auto &id : ids) backward.speakers.emplace(id, forward.speakers.at(id));
  CHECK(SelectSourceSpeaker(corpus.knowledge.clip, forward) ==
        SelectSourceSpeaker(corpus.knowledge.clip, backward));
}

TEST_CASE("convert_once with source equal to target keeps the pitch") {
  Rng rng(2);
  const AudioClip clip = SynthesizeUtterance(VoiceWithF0("x", 140, 1.0), 1.0, rng).clip;
  const AudioClip out = ConvertOnce(clip, clip);
  const double before = EstimatePitch(clip).MeanVoicedF0();
  const double after = EstimatePitch(out).MeanVoicedF0();
  CHECK(std::abs(after / before - 1.0) < 0.02);
  CHECK(out.size() == clip.size());
}

TEST_CASE("convert_once moves 150 Hz speech onto a 300 Hz target") {
  Rng rng(3);
  const AudioClip src = SynthesizeUtterance(VoiceWithF0("s", 150, 0.95), 1.0, rng).clip;
  const AudioClip tgt = SynthesizeUtterance(VoiceWithF0("t", 300, 1.15), 2.0, rng).clip;
  const double tf = EstimatePitch(tgt).MeanVoicedF0();
  const AudioClip out = ConvertOnce(src, tgt);
  const double of = EstimatePitch(out).MeanVoicedF0();
  MESSAGE("target " << tf << " Hz, output " << of << " Hz");
  CHECK(std::abs(of / tf - 1.0) < 0.03);
  CHECK(out.size() == src.size());
  // Steady tones at exactly 150 and 300 Hz.
  const AudioClip tone_out = ConvertOnce(Harmonic(150.0, 1.0), Harmonic(300.0, 1.0));
  CHECK(std::abs(EstimatePitch(tone_out).MeanVoicedF0() / 300.0 - 1.0) < 0.03);
  CHECK_THROWS_AS(ConvertOnce(AudioClip(std::vector<double>(16000, 0.0), 16000), tgt),
                  ConfigError);
}

TEST_CASE("convert_once reduces pitch distance on desk corpus pairs") {
  const DeskCorpus &corpus = SmallCorpus();
  const AudioClip &target = corpus.knowledge.clip;
  int pairs = 0, closer = 0;
  for (const auto &id : corpus.IdsWithRole(SpeakerRole::kSource))
    for (const auto &u : corpus.speakers.at(id).utterances) {
      ++pairs;
      closer += Distance(ConvertOnce(u.clip, target), target) < Distance(u.clip, target);
    }
  MESSAGE(closer << " of " << pairs << " pairs closer");
  CHECK(closer >= 0.95 * pairs);
}

TEST_CASE("generate_parrot_set base case equals one conversion") {
  const DeskCorpus &corpus = SmallCorpus();
  SpeakerPool pool = PoolFromCorpus(corpus);
  const AudioClip &target = corpus.knowledge.clip;
  ParrotSet set = GenerateParrotSet("enr00", target, pool, 1, 1);
  REQUIRE(set.clips.size() == 1);
  const std::string best = SelectSourceSpeaker(target, pool);
  CHECK(set.source_ids[0] == best);
  CHECK(set.clips[0].samples == ConvertOnce(pool.speakers.at(best).clips[0], target).samples);
  CHECK(set.provenance == Provenance::kStandIn);
}

TEST_CASE("more iterations never move parrots away from the target") {
  const DeskCorpus &corpus = SmallCorpus();
  SpeakerPool pool = PoolFromCorpus(corpus);
  const AudioClip &target = corpus.knowledge.clip;
  // 24 chains followed step by step.
  std::vector<AudioClip> chain;
  for (const auto &id : pool.IdsWithRole(PoolRole::kSource))
    for (int c = 0; c < 3; ++c) chain.push_back(pool.speakers.at(id).clips[c]);
  REQUIRE(chain.size() >= 20);
  std::vector<double> mean_dist;
  int steps = 0, ok = 0;
  std::vector<double> prev(chain.size());
  for (size_t i = 0; i < chain.size(); ++i) prev[i] = Distance(chain[i], target);
  for (int it = 1; it <= 5; ++it) {
    double sum = 0.0;
    for (size_t i = 0; i < chain.size(); ++i) {
      chain[i] = ConvertOnce(chain[i], target);
      const double d = Distance(chain[i], target);
      if (it >= 2) {
        ++steps;
        ok += d <= prev[i] + kPitchDeadbandSemitones;
      }
      prev[i] = d;
      sum += d;
    }
    mean_dist.push_back(sum / chain.size());
  }
  MESSAGE("mean distance per iteration: " << mean_dist[0] << " " << mean_dist[4]);
  CHECK(mean_dist[4] <= mean_dist[0]);
  for (int it = 1; it < 5; ++it)
    CHECK(mean_dist[it] <= mean_dist[it - 1] + kPitchDeadbandSemitones);
  CHECK(ok >= 0.95 * steps);
}

TEST_CASE("parrot sets with more iterations are no farther from the target") {
  const DeskCorpus &corpus = SmallCorpus();
  const SpeakerPool pool = PoolFromCorpus(corpus);
  const AudioClip &target = corpus.knowledge.clip;
  std::vector<double> prev;
  for (int it = 1; it <= 5; ++it) {
    const ParrotSet set = GenerateParrotSet(corpus.target_id, target, pool, it, 8);
    for (size_t i = 0; i < set.clips.size(); ++i) {
      const double d = Distance(set.clips[i], target);
      if (it > 1) CHECK(d <= prev[i]);
      if (it == 1) prev.push_back(d); else prev[i] = d;
    }
  }
}

TEST_CASE("generate_parrot_set yields 12 distinct clips and reports exhaustion") {
  const DeskCorpus &corpus = SmallCorpus();
  SpeakerPool pool = PoolFromCorpus(corpus);
  ParrotSet set = GenerateParrotSet("enr00", corpus.knowledge.clip, pool, 2, 12);
  REQUIRE(set.clips.size() == 12);
  for (size_t i = 0; i < set.clips.size(); ++i)
    for (size_t j = i + 1; j < set.clips.size(); ++j)
      CHECK(set.clips[i].samples != set.clips[j].samples);
  // Only 4 clips per speaker: the next-ranked speakers fill the rest.
  CHECK(std::set<std::string>(set.source_ids.begin(), set.source_ids.end()).size() >= 3);
  CHECK_THROWS_AS(GenerateParrotSet("enr00", corpus.knowledge.clip, pool, 1, 1000),
                  ConfigError);
}

TEST_CASE("ingest_external_parrots loads and resamples manifests") {
  auto dir = testing::ScratchDir("ingest");
  SpeakerPool pool;
  PoolSpeaker ps;
  for (int i = 0; i < 12; ++i) {
    AudioClip c = Harmonic(150.0 + 10 * i, 0.5);
    if (i % 2) c = Resample(c, 8000);
    ps.clips.push_back(c);
  }
  pool.speakers["enr00"] = ps;
  SavePoolManifest(dir, pool);
  ParrotSet set = IngestExternalParrots(dir / "manifest.json", "enr00");
  REQUIRE(set.clips.size() == 12);
  for (const auto &c : set.clips) {
    CHECK(c.sample_rate == 16000);
    CHECK(std::abs(static_cast<double>(c.size()) - 8000.0) <= 1.0);
  }
  CHECK(set.provenance == Provenance::kExternal);

  SaveJson(dir / "empty.json", Json{{"speakers", {{"enr00", {{"role", "target"}, {"clips", Json::array()}}}}}});
  CHECK_THROWS_AS(IngestExternalParrots(dir / "empty.json", "enr00"), DataError);
  SaveJson(dir / "missing.json", Json{{"speakers", {{"enr00", {{"clips", {"nope.wav"}}}}}}});
  CHECK_THROWS_AS(IngestExternalParrots(dir / "missing.json", "enr00"), DataError);
  WriteFileAtomic(dir / "junk.wav", "not audio at all");
  SaveJson(dir / "junk.json", Json{{"speakers", {{"enr00", {{"clips", {"junk.wav"}}}}}}});
  CHECK_THROWS_AS(IngestExternalParrots(dir / "junk.json", "enr00"), DataError);
}

TEST_CASE("evaluate_fpr counts classified parrots") {
  StubModel model({"enr00", "b", "c"});
  ParrotSet all;
  for (int i = 0; i < 5; ++i) all.clips.push_back(Coded(0));
  CHECK(EvaluateFpr(model, all, "enr00") == 1.0);
  CHECK(FalsePositiveRate(66, 6) == doctest::Approx(0.9167).epsilon(1e-4));
  ParrotSet none;
  for (int i = 0; i < 30; ++i) none.clips.push_back(Coded(1 + i % 2));
  CHECK(EvaluateFpr(model, none, "enr00") == 0.0);
  CHECK_THROWS_AS(EvaluateFpr(model, ParrotSet{}, "enr00"), ConfigError);
  CHECK_THROWS_AS(EvaluateFpr(model, all, "zzz"), ConfigError);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ParrotSet s;
    long fp = 0;
    const int n = 1 + trial;
    for (int i = 0; i < n; ++i) {
      const int idx = std::uniform_int_distribution<int>(0, 2)(rng);
      fp += idx == 0;
      s.clips.push_back(Coded(idx));
    }
    const double fpr = EvaluateFpr(model, s, "enr00");
    CHECK(fpr >= 0.0);
    CHECK(fpr <= 1.0);
    CHECK(fpr == static_cast<double>(fp) / n);
  }
}

TEST_CASE("compare_pt_gt metrics") {
  StubModel model({"t", "x", "y"});
  std::vector<LabeledClip> test;
  for (int i = 0; i < 10; ++i) test.push_back({Coded(0), "t"});
  for (int i = 0; i < 30; ++i) test.push_back({Coded(1 + i % 2), i % 2 ? "y" : "x"});
  BinaryMetrics perfect = TargetVsRest(model, test, "t");
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.f1 == 1.0);

  CHECK(F1Score(0.93, 0.96) == doctest::Approx(0.9448).epsilon(1e-4));

  std::vector<LabeledClip> always;
  for (int i = 0; i < 10; ++i) always.push_back({Coded(0), "t"});
  for (int i = 0; i < 30; ++i) always.push_back({Coded(0), "x"});
  PtGtComparison cmp = ComparePtGt(model, model, always, "t");
  CHECK(cmp.pt.recall == 1.0);
  CHECK(cmp.pt.precision == doctest::Approx(0.25));
  CHECK(cmp.gt.f1 == cmp.pt.f1);

  std::vector<LabeledClip> no_target(test.begin() + 10, test.end());
  CHECK_THROWS_AS(TargetVsRest(model, no_target, "t"), ConfigError);
}
