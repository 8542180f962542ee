// tests/eval_test.cc

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
#include <functional>
#include <random>

#include "doctest.h"
#include "parrot/common.h"
#include "parrot/corpus.h"
#include "parrot/eval.h"
#include "test_util.h"

namespace parrot {
namespace {

// Labels {"a", "b", "c"}; the predicted index is a user function of the
// clip and the scores are one-hot.
class LookupModel : public SpeakerModel {
 public:
  explicit LookupModel(std::function<int(const AudioClip &)> pick)
      : SpeakerModel({"a", "b", "c"}, MfccConfig{}), pick_(std::move(pick)) {}
  ModelFamily family() const override { return ModelFamily::kNeural; }
  std::vector<double> Scores(const AudioClip &clip) const override {
    std::vector<double> s(3, 0.0);
    s[pick_(clip)] = 1.0;
    return s;
  }
  Json ToJson() const override { return Json::object(); }

 private:
  std::function<int(const AudioClip &)> pick_;
};

// Clip whose first sample encodes an integer tag.
AudioClip Tagged(int tag) {
  AudioClip c;
  c.samples = {static_cast<double>(tag), 0.0};
  return c;
}
int Tag(const AudioClip &c) { return static_cast<int>(c.samples[0]); }

TEST_CASE("match count equals a hand count on ten AEs") {
  // Rows: surrogate on AE, target on AE, surrogate on clean.
  const std::vector<std::string> sa = {"t", "t", "x", "t", "y", "t", "t", "z", "t", "q"};
  const std::vector<std::string> ta = {"t", "u", "x", "t", "y", "v", "t", "z", "t", "q"};
  const std::vector<std::string> sc = {"a", "a", "a", "t", "b", "a", "b", "z", "c", "c"};
  // Matched: 0, 2, 4, 6, 8, 9 (3 agrees but equals clean, 7 equals clean).
  const MatchCount c = CountMatches(sa, ta, sc);
  CHECK(c.matched == 6);
  CHECK(c.total == 10);
  CHECK(c.rate() == doctest::Approx(0.6));
  CHECK_THROWS_AS(CountMatches({}, {}, {}), ConfigError);
  CHECK_THROWS_AS(CountMatches(sa, std::vector<std::string>(9, "t"), sc), ConfigError);
}

TEST_CASE("match rate with a copied target equals the surrogate error rate") {
  // Surrogate predicts tag % 3; AEs carry tags shifted by one on every
  // third clip.
  LookupModel sur([](const AudioClip &c) { return Tag(c) % 3; });
  std::vector<AudioClip> orig, aes;
  int changed = 0;
  for (int i = 0; i < 12; ++i) {
    orig.push_back(Tagged(i));
    const bool flip = i % 3 == 0;
    aes.push_back(Tagged(flip ? i + 1 : i));
    changed += flip;
  }
  CHECK(MatchRate(sur, sur, aes, orig) == doctest::Approx(changed / 12.0));
  CHECK(MatchRate(sur, sur, orig, orig) == 0.0);
  // A target that always answers "c" only matches AEs the surrogate sends to "c".
  LookupModel always_c([](const AudioClip &) { return 2; });
  long expect = 0;
  for (int i = 0; i < 12; ++i)
    expect += (Tag(aes[i]) % 3 == 2) && (Tag(aes[i]) % 3 != Tag(orig[i]) % 3);
  CHECK(MatchRate(sur, always_c, aes, orig) == doctest::Approx(expect / 12.0));
  CHECK_THROWS_AS(MatchRate(sur, sur, std::vector<AudioClip>{}, std::vector<AudioClip>{}),
                  ConfigError);
}

TEST_CASE("tpr formula, range checks and monotonicity") {
  CHECK(Tpr(0.25, 4.0) == 0.0625);
  CHECK(Tpr(0.0, 1.0) == 0.0);
  CHECK(Tpr(0.0, 6.5) == 0.0);
  CHECK(Tpr(1.0, 7.0) == 1.0);
  CHECK_THROWS_AS(Tpr(0.5, 0.9), ConfigError);
  CHECK_THROWS_AS(Tpr(0.5, 7.1), ConfigError);
  CHECK_THROWS_AS(Tpr(-0.1, 4.0), ConfigError);
  CHECK_THROWS_AS(Tpr(1.1, 4.0), ConfigError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> um(0.01, 0.99), us(1.0, 6.99);
  for (int i = 0; i < 200; ++i) {
    const double m = um(rng), s = us(rng);
    CHECK(Tpr(m + 0.005, s) > Tpr(m, s));
    CHECK(Tpr(m, s + 0.005) > Tpr(m, s));
    CHECK(Tpr(m, s) >= 0.0);
    CHECK(Tpr(m, s) <= 1.0);
  }
  const TprReport r = MakeTprReport(CarrierKind::kEnvironmental, 0.25, 4.0);
  CHECK(r.tpr == 0.0625);
  CHECK(r.carrier == CarrierKind::kEnvironmental);
}

TEST_CASE("transfer matrix averages over surrogates then targets") {
  TransferMatrix m(CarrierKind::kNoise, {"s1", "s2", "s3"}, {"t1", "t2"});
  const double r[3][2] = {{0.1, 0.4}, {0.2, 0.0}, {0.6, 0.5}};
  const char *s[] = {"s1", "s2", "s3"}, *t[] = {"t1", "t2"};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) m.Set(s[i], t[j], r[i][j]);
  CHECK(m.At("s3", "t1") == 0.6);
  const auto tm = m.TargetMeans();
  CHECK(tm[0] == doctest::Approx(0.3));
  CHECK(tm[1] == doctest::Approx(0.3));
  CHECK(m.MeanRate() == doctest::Approx(0.3));
  CHECK_THROWS_AS(m.Set("s4", "t1", 0.1), ConfigError);
  CHECK_THROWS_AS(m.Set("s1", "t1", 1.5), ConfigError);
  CHECK_THROWS_AS(m.At("s1", "t9"), ConfigError);
  const Json j = m.ToJson();
  CHECK(j.at("carrier") == "noise");
  CHECK(j.at("match_rates")[2][1].get<double>() == 0.5);
  CHECK_THROWS_AS(TransferMatrix(CarrierKind::kNoise, {}, {"t"}), ConfigError);
}

TEST_CASE("attack success rate per task") {
  // Scores: "a" = tag / 10, "b" = 0.5, "c" = 0.
  class Graded : public SpeakerModel {
   public:
    Graded() : SpeakerModel({"a", "b", "c"}, MfccConfig{}) {}
    ModelFamily family() const override { return ModelFamily::kNeural; }
    std::vector<double> Scores(const AudioClip &c) const override {
      return {Tag(c) / 10.0, 0.5, 0.0};
    }
    Json ToJson() const override { return Json::object(); }
  } model;
  std::vector<AudioClip> aes;
  for (int tag : {9, 8, 7, 6, 3, 2, 1, 9, 9, 8, 0, 1}) aes.push_back(Tagged(tag));
  // CSI: "a" wins for tags >= 6: seven of twelve.
  Thresholds thr;
  const double csi = AttackSuccessRate(model, aes, "a", Task::kCsi, thr);
  CHECK(csi == doctest::Approx(7.0 / 12.0));
  CHECK(csi == doctest::Approx(0.583).epsilon(1e-3));
  // OSI above every score rejects all.
  thr.osi = 2.0;
  CHECK(AttackSuccessRate(model, aes, "a", Task::kOsi, thr) == 0.0);
  thr.osi = 0.85;  // tags 9, 9, 9
  CHECK(AttackSuccessRate(model, aes, "a", Task::kOsi, thr) == doctest::Approx(3.0 / 12.0));
  // SV against the claimed label with a threshold of 0.15: every tag >= 2.
  thr.sv = 0.15;
  long accepted = 0;
  for (const auto &c : aes) accepted += Tag(c) / 10.0 >= 0.15;
  CHECK(AttackSuccessRate(model, aes, "a", Task::kSv, thr) ==
        doctest::Approx(static_cast<double>(accepted) / 12.0));
  // Everything accepted.
  thr.sv = -1.0;
  CHECK(AttackSuccessRate(model, aes, "a", Task::kSv, thr) == 1.0);
  CHECK_THROWS_AS(AttackSuccessRate(model, std::vector<AudioClip>{}, "a", Task::kCsi, thr),
                  ConfigError);
}

TEST_CASE("phoneme diversity counts each token once") {
  const auto &alpha = PhonemeAlphabet();
  const std::vector<std::string> aaa = {"AA", "AA", "AA"};
  CHECK(PhonemeDiversity(aaa, alpha) == 1);
  CHECK(PhonemeDiversity(std::vector<std::string>{}, alpha) == 0);
  const std::vector<std::string> mixed = {"AA", "S", "IY", "S", "AA", "M"};
  CHECK(PhonemeDiversity(mixed, alpha) == 4);
  const std::vector<std::string> bad = {"AA", "XX"};
  CHECK_THROWS_AS(PhonemeDiversity(bad, alpha), ConfigError);
  CHECK(PhonemeDiversity(bad, alpha, false) == 2);
}

TEST_CASE("diversity split ranks synthetic transcripts") {
  // Segments drawn from phoneme pools of growing size.
  const auto &alpha = PhonemeAlphabet();
  Rng rng(5);
  SpeakerVoice v = RandomVoice("x", "m", rng);
  std::vector<int> div;
  for (int k = 0; k < 8; ++k) {
    const size_t pool_size = 3 + 2 * k;
    std::vector<std::string> pool(alpha.begin(), alpha.begin() + pool_size);
    Utterance u = SynthesizeUtterance(v, 8.0, rng, kDefaultSampleRate, pool);
    div.push_back(PhonemeDiversity(u.phonemes, alpha));
    CHECK(div.back() <= static_cast<int>(pool_size));
  }
  const DiversitySplit s = SplitByDiversity(div);
  REQUIRE(s.low.size() == 4);
  REQUIRE(s.high.size() == 4);
  // Oracle: sort indices by (diversity, index).
  std::vector<int> order(div.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return div[a] != div[b] ? div[a] < div[b] : a < b; });
  CHECK(std::vector<int>(order.begin(), order.begin() + 4) == s.low);
  CHECK(std::vector<int>(order.begin() + 4, order.end()) == s.high);
  CHECK(s.high_mean > s.low_mean);
  for (int i : s.low)
    for (int j : s.high) CHECK(div[i] <= div[j]);
  const std::vector<int> odd = {5, 1, 3};
  const DiversitySplit o = SplitByDiversity(odd);
  CHECK(o.low == std::vector<int>{1, 2});
  CHECK(o.high == std::vector<int>{0});
  CHECK_THROWS_AS(SplitByDiversity(std::vector<int>{1}), ConfigError);
}

TEST_CASE("reports round-trip through JSON and TSV") {
  Table t;
  t.columns = {"carrier", "match_rate"};
  t.AddRow({"noise", FormatNumber(0.1375)});
  t.AddRow({"environmental", FormatNumber(0.2353)});
  CHECK_THROWS_AS(t.AddRow({"only-one"}), InvariantError);
  CHECK(FormatNumber(-0.0) == "0.000000");
  CHECK(t.ToTsv() == "carrier\tmatch_rate\nnoise\t0.137500\nenvironmental\t0.235300\n");

  ReportHeader h;
  h.kind = "transfer";
  h.config_hash = "00ff";
  h.seed = 9;
  h.srs_provenance = "heuristic-SRS";
  h.metadata = Json{{"averaging", "per-surrogate then across surrogates"}};
  const auto dir = testing::ScratchDir("eval_report");
  WriteReport(dir, "transfer", h, t);
  const Json j = LoadReport(dir / "transfer.json");
  CHECK(j.at("config_hash") == "00ff");
  CHECK(j.at("seed") == 9);
  CHECK(j.at("srs_provenance") == "heuristic-SRS");
  const Table back = Table::FromJson(j.at("table"));
  CHECK(back.rows == t.rows);
  const std::string tsv = ReadFile(dir / "transfer.tsv");
  CHECK(tsv.find("# config_hash: 00ff\n") != std::string::npos);
  CHECK(tsv.substr(tsv.size() - t.ToTsv().size()) == t.ToTsv());

  SaveJson(dir / "other.json", Json{{"schema_version", 99}, {"config_hash", "x"},
                                    {"table", Json::object()}});
  CHECK_THROWS_AS(LoadReport(dir / "other.json"), DataError);
  SaveJson(dir / "plain.json", Json{{"a", 1}});
  CHECK_THROWS_AS(LoadReport(dir / "plain.json"), DataError);
  CHECK_THROWS_AS(LoadReport(dir / "missing.json"), DataError);
}

TEST_CASE("fpr counts pool over parrot sets") {
  LookupModel m([](const AudioClip &c) { return Tag(c) % 3; });
  ParrotSet p;
  for (int i = 0; i < 9; ++i) p.clips.push_back(Tagged(i));
  const FprCount a = CountFpr(m, p, "a");  // tags 0, 3, 6
  CHECK(a.fp == 3);
  CHECK(a.tn == 6);
  // 66 of 72 parrots accepted across six sets of twelve.
  std::vector<FprCount> sets(6, FprCount{11, 1});
  CHECK(PooledFpr(sets) == doctest::Approx(0.9167).epsilon(1e-4));
  CHECK(std::abs(PooledFpr(sets) - 66.0 / 72.0) < 1e-15);
  CHECK_THROWS_AS(CountFpr(m, p, "zz"), ConfigError);
  CHECK_THROWS_AS(PooledFpr(std::vector<FprCount>{}), ConfigError);
}

}  // namespace
}  // namespace parrot
