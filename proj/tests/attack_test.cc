// tests/attack_test.cc

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
#include <random>
#include <set>

#include "doctest.h"
#include "parrot/attack.h"
#include "parrot/common.h"
#include "parrot/corpus.h"
#include "parrot/pitch.h"
#include "test_util.h"

using namespace parrot;

namespace {

struct Desk {
  std::vector<LabeledClip> train, test;
  std::unique_ptr<NeuralSpeakerModel> net;
  std::unique_ptr<GmmSpeakerModel> gmm;
};

const Desk &SmallDesk() {
  static const Desk desk = [] {
    DeskCorpusConfig cfg;
    cfg.train_clips = 30;
    cfg.test_clips = 6;
    cfg.source_speakers = 0;
    cfg.other_speakers = 0;
    cfg.impostor_speakers = 0;
    cfg.knowledge_seconds = 1.0;
    DeskCorpus corpus = BuildDeskCorpus(cfg, 7);
    Desk d;
    for (auto &[id, sp] : corpus.speakers)
      for (size_t i = 0; i < sp.utterances.size(); ++i)
        (i < 30 ? d.train : d.test).push_back({sp.utterances[i].clip, id});
    d.net = TrainNeuralSpeakerModel(d.train, MlpConfig{});
    GmmTrainConfig gc;
    gc.components = 16;
    d.gmm = TrainGmmSpeakerModel(d.train, gc);
    return d;
  }();
  return desk;
}

std::string OtherLabel(const std::string &label) {
  return label == "enr00" ? "enr01" : "enr00";
}

// Two labels {"a", "b"}; p(a) comes from a user function of the clip.
class FunctionModel : public SpeakerModel {
 public:
  explicit FunctionModel(std::function<double(const AudioClip &)> p_a)
      : SpeakerModel({"a", "b"}, MfccConfig{}), p_a_(std::move(p_a)) {}
  ModelFamily family() const override { return ModelFamily::kNeural; }
  std::vector<double> Scores(const AudioClip &clip) const override {
    const double p = p_a_(clip);
    return {p, 1.0 - p};
  }
  std::vector<double> Posteriors(const AudioClip &clip) const override {
    return Scores(clip);
  }
  Json ToJson() const override { return Json::object(); }

 private:
  std::function<double(const AudioClip &)> p_a_;
};

double Mean(const AudioClip &c) {
  double s = 0.0;
  for (double v : c.samples) s += v;
  return s / c.size();
}

// SRS = 7 - L2 distance, floored at 1.
class L2Scorer : public SrsScorer {
 public:
  double ScoreFeatures(std::span<const double> f) const override {
    return std::max(1.0, 7.0 - f[1]);
  }
  std::string Provenance() const override { return "test-l2"; }
};

class FixedScorer : public SrsScorer {
 public:
  explicit FixedScorer(double s) : s_(s) {}
  double ScoreFeatures(std::span<const double>) const override { return s_; }
  std::string Provenance() const override { return "test-fixed"; }

 private:
  double s_;
};

Carrier ConstantCarrier(const std::string &id, double value, size_t n) {
  Carrier c;
  c.kind = CarrierKind::kEnvironmental;
  c.id = id;
  c.category = "things";
  c.waveform.samples.assign(n, value);
  return c;
}

double ToneStatistic(const AudioClip &clip, double hz) {
  double re = 0.0, im = 0.0, pow = 0.0;
  for (size_t i = 0; i < clip.size(); ++i) {
    const double ph = 2.0 * std::numbers::pi * hz * i / clip.sample_rate;
    re += clip.samples[i] * std::cos(ph);
    im += clip.samples[i] * std::sin(ph);
    pow += clip.samples[i] * clip.samples[i];
  }
  const double n = static_cast<double>(clip.size());
  return (re * re + im * im) / (n * pow);
}

}  // namespace

TEST_CASE("weight projection examples") {
  std::vector<double> feasible = {0.01, 0.02, 0.03};
  CHECK(ProjectWeights(feasible, 0.08) == feasible);
  auto p = ProjectWeights(std::vector<double>{0.1, 0.1}, 0.08);
  CHECK(p[0] == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.04).epsilon(1e-12));
  p = ProjectWeights(std::vector<double>{-0.5, 0.03}, 0.08);
  CHECK(p == std::vector<double>{0.0, 0.03});
  p = ProjectWeights(std::vector<double>{0.1, 0.05}, 0.08);
  CHECK(p[0] == doctest::Approx(0.065).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.015).epsilon(1e-12));
}

TEST_CASE("weight projection is an idempotent Euclidean projection") {
  Rng rng(1);
  std::normal_distribution<double> g(0.02, 0.06);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<double> v(k);
    for (double &x : v) x = g(rng);
    const auto p = ProjectWeights(v, 0.08);
    REQUIRE(WeightsFeasible(p, 0.08));
    const auto pp = ProjectWeights(p, 0.08);
    for (int i = 0; i < k; ++i) CHECK(std::abs(pp[i] - p[i]) < 1e-12);
    // Variational inequality: (v - p) . (q - p) <= 0 for feasible q.
    for (int s = 0; s < 20; ++s) {
      std::vector<double> q(k);
      double total = 0.0;
      for (double &x : q) total += (x = u(rng));
      const double scale = (s == 0 ? 0.0 : u(rng)) * 0.08 / total;
      double dot = 0.0;
      for (int i = 0; i < k; ++i) dot += (v[i] - p[i]) * (q[i] * scale - p[i]);
      CHECK(dot <= 1e-12);
    }
  }
}

TEST_CASE("weight grid enumeration") {
  CHECK(WeightGrid(1, 0.08).size() == 11);
  CHECK(WeightGrid(2, 0.08).size() == 66);
  CHECK(WeightGrid(3, 0.08).size() == 286);
  std::set<std::vector<long>> seen;
  for (const auto &g : WeightGrid(3, 0.08)) {
    CHECK(WeightsFeasible(g, 0.08));
    std::vector<long> steps;
    for (double v : g) steps.push_back(std::lround(v / 0.008));
    seen.insert(steps);
  }
  CHECK(seen.size() == 286);
}

TEST_CASE("ensemble loss formula") {
  AudioClip x = testing::Sine(100.0, 1.0, 0.1);
  FunctionModel a([](const AudioClip &c) { return std::clamp(0.5 + Mean(c), 0.0, 1.0); });
  FunctionModel b([](const AudioClip &c) { return std::clamp(0.2 + 2.0 * Mean(c), 0.0, 1.0); });
  SurrogateEnsemble ens({&a, &b});
  std::vector<Carrier> carriers = {ConstantCarrier("up", 1.0, 500),
                                   ConstantCarrier("down", -1.0, 700)};
  L2Scorer l2;
  // Hand calculation: mean shift 0.02, p = (0.52, 0.24), L2 = 0.02 sqrt(16000).
  const std::vector<double> gamma = {0.03, 0.01};
  const double expect =
      0.5 * (1 - 0.52) + 0.5 * (1 - 0.24) + 0.1 * (8 - (7 - 0.02 * std::sqrt(16000.0)));
  CHECK(std::abs(EnsembleLoss(ens, x, gamma, carriers, "a", 0.1, &l2, 0.08) - expect) < 1e-9);

  // Zero perturbation.
  const std::vector<double> zero = {0.0, 0.0};
  const double p0a = a.Posteriors(x)[0], p0b = b.Posteriors(x)[0];
  CHECK(EnsembleLoss(ens, x, zero, carriers, "a", 0.1, &l2, 0.08) ==
        doctest::Approx(0.5 * (1 - p0a) + 0.5 * (1 - p0b) + 0.1 * 1.0).epsilon(1e-12));

  // Certain surrogates and SRS 7 leave only the perception floor.
  FunctionModel sure([](const AudioClip &) { return 1.0; });
  SurrogateEnsemble certain({&sure, &sure});
  FixedScorer seven(7.0);
  CHECK(EnsembleLoss(certain, x, gamma, carriers, "a", 0.1, &seven, 0.08) ==
        doctest::Approx(0.1).epsilon(1e-12));

  const std::vector<double> over = {0.05, 0.04};
  CHECK_THROWS_AS(EnsembleLoss(ens, x, over, carriers, "a", 0.1, &l2, 0.08), ConfigError);
  const std::vector<double> neg = {-0.01, 0.0};
  CHECK_THROWS_AS(EnsembleLoss(ens, x, neg, carriers, "a", 0.1, &l2, 0.08), ConfigError);
  CHECK_THROWS_AS(EnsembleLoss(ens, x, gamma, carriers, "zzz", 0.1, &l2, 0.08), ConfigError);
}

TEST_CASE("identical surrogates reduce to the single-model loss") {
  const Desk &d = SmallDesk();
  CarrierLibrary lib = SynthesizeEnvironmentalLibrary(2, 3, 1.0);
  const AudioClip &x = d.test[0].clip;
  const std::vector<double> gamma = {0.03, 0.02};
  HeuristicSrs h;
  for (const SpeakerModel *m : {static_cast<const SpeakerModel *>(d.net.get()),
                                static_cast<const SpeakerModel *>(d.gmm.get())}) {
    SurrogateEnsemble one({m}), three({m, m, m});
    const double l1 = EnsembleLoss(one, x, gamma, lib.carriers, "enr02", 0.1, &h, 0.08);
    const double l3 = EnsembleLoss(three, x, gamma, lib.carriers, "enr02", 0.1, &h, 0.08);
    CHECK(l3 == doctest::Approx(l1).epsilon(1e-12));
    CHECK(l1 >= 0.1);
    CHECK(l1 <= 1.0 + 0.7);
  }
}

TEST_CASE("PGD with zero steps returns the clipped initial noise") {
  const Desk &d = SmallDesk();
  const AudioClip &x = d.test[1].clip;
  PgdOptions o;
  o.steps = 0;
  o.init_stddev = 0.2;  // most draws exceed the budget
  AeResult r = PgdAttack(*d.net, x, "enr03", o);
  double linf = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    linf = std::max(linf, std::abs(r.waveform.samples[i] - x.samples[i]));
  CHECK(linf <= 0.05);
  CHECK(linf > 0.04);
  CHECK(r.evaluations == 1);
  CHECK_THROWS_AS(PgdAttack(*d.gmm, x, "enr03", o), ConfigError);
}

TEST_CASE("PGD descends and succeeds on its own surrogate") {
  const Desk &d = SmallDesk();
  int success = 0, steps = 0, nonincreasing = 0;
  HeuristicSrs h;
  for (size_t i = 0; i < 12; ++i) {
    const auto &lc = d.test[i * 3];
    PgdOptions o;
    o.seed = i;
    o.steps = 60;
    std::vector<double> trace;
    AeResult r = PgdAttack(*d.net, lc.clip, OtherLabel(lc.label), o, &h, &trace);
    CHECK_NOTHROW(VerifyLinfBudget(lc.clip, r.waveform, 0.05));
    REQUIRE(trace.size() == 61);
    for (size_t t = 0; t + 1 < trace.size(); ++t) {
      ++steps;
      nonincreasing += trace[t + 1] <= trace[t];
    }
    success += r.fooled[0];
    CHECK(r.srs >= 1.0);
    CHECK(r.srs_provenance == "heuristic-SRS");
  }
  MESSAGE("PGD success " << success << "/12, descent " << nonincreasing << "/" << steps);
  CHECK(nonincreasing >= 0.9 * steps);
  CHECK(success >= 11);
}

TEST_CASE("feature twist grid attack visits every point") {
  const Desk &d = SmallDesk();
  // Target = current prediction on a confidently classified clip.
  const LabeledClip *pick = nullptr;
  for (const auto &lc : d.test)
    if (d.net->Posteriors(lc.clip)[d.net->LabelIndex(lc.label)] > 0.95) {
      pick = &lc;
      break;
    }
  REQUIRE(pick != nullptr);
  HeuristicSrs h;
  int visited = 0;
  AeResult r = GridFeatureTwistAttack(*d.net, pick->clip, d.net->Predict(pick->clip), 0.1,
                                      &h, &visited);
  CHECK(visited == 510);
  CHECK(r.semitones == 0);
  CHECK(r.rate == 1.0);
  CHECK(r.fooled[0]);
}

TEST_CASE("feature twist grid attack finds a planted optimum") {
  // Steady harmonic tone: the measured pitch depends on the shift only.
  AudioClip x = testing::Sine(150.0, 1.0, 0.05);
  for (int h = 2; h <= 5; ++h) {
    AudioClip p = testing::Sine(150.0 * h, 1.0, 0.05 / h);
    for (size_t i = 0; i < x.size(); ++i) x.samples[i] += p.samples[i];
  }
  const double base = EstimatePitch(x).MeanVoicedF0();
  REQUIRE(base > 0);
  FunctionModel rigged([base](const AudioClip &c) {
    const PitchTrack t = EstimatePitch(c);
    if (t.NumVoiced() == 0) return 0.0;
    return std::max(0.0, 1.0 - 2.0 * std::abs(Semitones(base, t.MeanVoicedF0()) - 5.0));
  });
  HeuristicSrs h;
  AeResult r = GridFeatureTwistAttack(rigged, x, "a", 0.1, &h);
  CHECK(r.semitones == 5);
  CHECK(r.fooled[0]);
}

TEST_CASE("exhaustive weight attack counts and limits") {
  AudioClip x = testing::Sine(100.0, 1.0, 0.1);
  FunctionModel a([](const AudioClip &c) { return std::clamp(0.5 + 5.0 * Mean(c), 0.0, 1.0); });
  SurrogateEnsemble ens({&a});
  std::vector<Carrier> carriers = {ConstantCarrier("up", 1.0, 100),
                                   ConstantCarrier("down", -1.0, 100),
                                   ConstantCarrier("up2", 1.0, 50),
                                   ConstantCarrier("up3", 1.0, 70)};
  AeResult r1 = GridEnvWeightAttack(ens, x, "a", std::span(carriers).first(1), 0.08, 0.0, nullptr);
  CHECK(r1.evaluations == 11);
  CHECK(r1.gamma[0] == doctest::Approx(0.08));
  AeResult r2 = GridEnvWeightAttack(ens, x, "a", std::span(carriers).first(2), 0.08, 0.0, nullptr);
  CHECK(r2.evaluations == 66);
  CHECK(r2.gamma[0] == doctest::Approx(0.08));
  CHECK(r2.gamma[1] == 0.0);
  CHECK_NOTHROW(VerifyWeightBudget(x, r2, std::span(carriers).first(2), 0.08));
  CHECK_THROWS_AS(GridEnvWeightAttack(ens, x, "a", carriers, 0.08, 0.0, nullptr), ConfigError);
}

TEST_CASE("SPSA finds the optimum of a convex quadratic on the simplex") {
  for (const auto &star : {std::vector<double>{0.02, 0.03, 0.01},
                           std::vector<double>{0.1, 0.05},
                           std::vector<double>{-0.02, 0.04, 0.0, 0.01}}) {
    auto f = [&](std::span<const double> g) {
      double s = 0.0;
      for (size_t i = 0; i < g.size(); ++i) s += (g[i] - star[i]) * (g[i] - star[i]);
      return s;
    };
    SpsaOptions o;
    o.restarts = 1;
    o.steps = 500;
    o.seed = 3;
    SpsaResult r = SpsaMinimize(f, static_cast<int>(star.size()), o);
    const auto opt = ProjectWeights(star, 0.08);
    double dist = 0.0;
    for (size_t i = 0; i < star.size(); ++i) dist += std::pow(r.gamma[i] - opt[i], 2);
    MESSAGE("distance to optimum " << std::sqrt(dist));
    CHECK(std::sqrt(dist) < 1e-2);
    CHECK(WeightsFeasible(r.gamma, 0.08));
    CHECK(r.evaluations == 2 * 500 + 1);
  }
}

TEST_CASE("SPSA restarts have the prefix property and respect the budget") {
  Rng noise(4);
  std::vector<double> w(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double &v : w) v = g(noise);
  auto f = [&](std::span<const double> x) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += std::sin(40.0 * w[i] * x[i]) + w[i] * x[i];
    return s;
  };
  SpsaOptions o;
  o.steps = 40;
  o.restarts = 6;
  SpsaResult full = SpsaMinimize(f, 5, o);
  CHECK(full.evaluations <= 2L * o.steps * o.restarts + o.restarts);
  CHECK(WeightsFeasible(full.gamma, 0.08));
  double best = 1e300;
  for (int r = 1; r <= 6; ++r) {
    SpsaOptions p = o;
    p.restarts = r;
    SpsaResult part = SpsaMinimize(f, 5, p);
    CHECK(std::equal(part.restart_losses.begin(), part.restart_losses.end(),
                     full.restart_losses.begin()));
    CHECK(part.loss <= best);
    best = part.loss;
    CHECK(WeightsFeasible(part.gamma, 0.08));
  }
  CHECK(best == full.loss);
}

TEST_CASE("SPSA attack matches the exhaustive weight grid") {
  const Desk &d = SmallDesk();
  CarrierLibrary lib = SynthesizeEnvironmentalLibrary(6, 11, 1.0);
  HeuristicSrs h;
  SurrogateEnsemble ens({d.net.get(), d.gmm.get()});
  for (int inst = 0; inst < 3; ++inst) {
    const auto &lc = d.test[inst * 7 + 2];
    std::vector<Carrier> pair = {lib.carriers[2 * inst], lib.carriers[2 * inst + 1]};
    const std::string tgt = OtherLabel(lc.label);
    AeResult grid = GridEnvWeightAttack(ens, lc.clip, tgt, pair, 0.08, 0.1, &h);
    SpsaOptions o;
    o.steps = 100;
    o.restarts = 3;
    o.seed = inst;
    AeResult spsa = SpsaAttack(ens, lc.clip, tgt, pair, 0.1, &h, o);
    MESSAGE("grid " << grid.loss << " spsa " << spsa.loss);
    CHECK(spsa.loss <= 1.05 * grid.loss);
    CHECK_NOTHROW(VerifyWeightBudget(lc.clip, spsa, pair, 0.08));
    CHECK(spsa.evaluations <= 2L * 100 * 3 + 3);
    CHECK(spsa.fooled.size() == 2);
    CHECK(spsa.carrier_ids == std::vector<std::string>{pair[0].id, pair[1].id});
  }
  CHECK_THROWS_AS(SpsaAttack(ens, d.test[0].clip, "enr01", {}, 0.1, &h, SpsaOptions{}),
                  ConfigError);
}

TEST_CASE("stage one ranks a planted carrier first") {
  std::vector<AudioClip> eval;
  for (uint64_t s = 0; s < 2; ++s) {
    Rng rng(100 + s);
    SpeakerVoice v = RandomVoice("e", s ? "f" : "m", rng);
    eval.push_back(SynthesizeUtterance(v, 1.0, rng).clip);
  }
  FunctionModel detector([](const AudioClip &c) {
    return ToneStatistic(c, 3000.0) > 0.1 ? 0.9 : 0.1;
  });
  REQUIRE(detector.Predict(eval[0]) == "b");
  CarrierLibrary lib = SynthesizeEnvironmentalLibrary(6, 2, 1.0);
  Carrier tone;
  tone.kind = CarrierKind::kEnvironmental;
  tone.id = "planted";
  tone.category = "music";
  tone.waveform = testing::Sine(3000.0, 1.0, 1.0);
  NormalizeUnitPower(&tone.waveform);
  lib.carriers.insert(lib.carriers.begin() + 3, tone);
  FixedScorer perfect(7.0);

  auto ranked = StageOneSelectCandidates(detector, lib, eval, "a", 7, 0.08, perfect, 5);
  REQUIRE(ranked.size() == 7);
  CHECK(ranked[0].carrier.id == "planted");
  CHECK(ranked[0].match_rate == 1.0);
  CHECK(ranked[0].carrier.semitones == 0);
  CHECK(ranked[0].tpr == doctest::Approx(1.0));
  for (const auto &e : ranked) CHECK(e.carrier.kind == CarrierKind::kPitchTwisted);
  std::set<std::string> ids;
  for (const auto &e : ranked) ids.insert(e.carrier.id);
  CHECK(ids.size() == 7);

  CarrierLibrary shuffled = lib;
  std::reverse(shuffled.carriers.begin(), shuffled.carriers.end());
  auto again = StageOneSelectCandidates(detector, shuffled, eval, "a", 7, 0.08, perfect, 5);
  for (size_t i = 0; i < ranked.size(); ++i) CHECK(again[i].carrier.id == ranked[i].carrier.id);

  CHECK_THROWS_AS(StageOneSelectCandidates(detector, lib, eval, "a", 8, 0.08, perfect, 5),
                  ConfigError);
}

TEST_CASE("attack config round trip keeps defaults") {
  AttackConfig c;
  CHECK(c.pgd_epsilon == 0.05);
  CHECK(c.spsa_epsilon == 0.08);
  CHECK(c.spsa_steps == 500);
  CHECK(c.spsa_restarts == 50);
  CHECK(c.num_candidates == 50);
  c.target = "enr00";
  c.task = Task::kOsi;
  c.seed = 99;
  Json j = c;
  AttackConfig back = j.get<AttackConfig>();
  CHECK(Json(back) == j);
  Json partial = {{"target", "x"}};
  CHECK(partial.get<AttackConfig>().spsa_steps == 500);
  Json bad = {{"task", "nope"}};
  CHECK_THROWS_AS(bad.get<AttackConfig>(), ConfigError);
}
