// src/pipeline.cc

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

#include "parrot/pipeline.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "parrot/common.h"
#include "parrot/gmm.h"

namespace parrot {

namespace {

// Stream ids for DeriveSeed.
constexpr uint64_t kCorpusStream = 1;
constexpr uint64_t kLibraryStream = 2;
constexpr uint64_t kTargetStream = 0x100;
constexpr uint64_t kSurrogatePickStream = 0x200;
constexpr uint64_t kSurrogateTrainStream = 0x300;
constexpr uint64_t kPgdStream = 0x400;
constexpr uint64_t kSpsaStream = 0x500;
constexpr uint64_t kNoiseCarrierStream = 0x600;

void CheckKeys(const Json &j, const Json &reference, const std::string &path) {
  if (!j.is_object()) throw ConfigError("config " + (path.empty() ? "root" : path) +
                                        " must be an object");
  for (const auto &[key, value] : j.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key: " + where);
    if (reference.at(key).is_object()) CheckKeys(value, reference.at(key), where);
  }
}

const std::string &RequireTarget(const PipelineConfig &config) {
  if (config.attack.target.empty()) throw ConfigError("attack target is not set");
  return config.attack.target;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  corpus.train_clips = 40;
  corpus.test_clips = 8;
  corpus.other_speakers = 8;
  corpus.other_clips = 30;
  corpus.impostor_speakers = 5;
  corpus.impostor_clips = 4;
  corpus.knowledge_seconds = 16.0;
  attack.pgd_steps = 30;
  attack.spsa_steps = 40;
  attack.spsa_restarts = 2;
  attack.num_candidates = 5;
  attack.twist_step = 5;
}

void to_json(Json &j, const PipelineConfig &c) {
  j = Json{{"seed", c.seed},
           {"corpus", c.corpus},
           {"manifest", c.manifest},
           {"library_manifest", c.library_manifest},
           {"library_size", c.library_size},
           {"library_seconds", c.library_seconds},
           {"knowledge_seconds", c.knowledge_seconds},
           {"parrot_iterations", c.parrot_iterations},
           {"parrot_samples", c.parrot_samples},
           {"surrogate_archs", c.surrogate_archs},
           {"surrogate_others", c.surrogate_others},
           {"other_train_clips", c.other_train_clips},
           {"target_archs", c.target_archs},
           {"target_train_clips", c.target_train_clips},
           {"gmm_components", c.gmm_components},
           {"num_aes", c.num_aes},
           {"stage1_clips", c.stage1_clips},
           {"grid_carriers", c.grid_carriers},
           {"carriers", c.carriers},
           {"srs_ratings", c.srs_ratings},
           {"srs_forest", c.srs_forest},
           {"attack", c.attack}};
}

void from_json(const Json &j, PipelineConfig &c) {
  const PipelineConfig d;
  CheckKeys(j, Json(d), "");
  try {
    c.seed = j.value("seed", d.seed);
    // Nested keys absent from the file keep the pipeline defaults.
    Json corpus = Json(d.corpus);
    if (j.contains("corpus")) corpus.update(j.at("corpus"));
    c.corpus = corpus.get<DeskCorpusConfig>();
    c.manifest = j.value("manifest", d.manifest);
    c.library_manifest = j.value("library_manifest", d.library_manifest);
    c.library_size = j.value("library_size", d.library_size);
    c.library_seconds = j.value("library_seconds", d.library_seconds);
    c.knowledge_seconds = j.value("knowledge_seconds", d.knowledge_seconds);
    c.parrot_iterations = j.value("parrot_iterations", d.parrot_iterations);
    c.parrot_samples = j.value("parrot_samples", d.parrot_samples);
    c.surrogate_archs = j.value("surrogate_archs", d.surrogate_archs);
    c.surrogate_others = j.value("surrogate_others", d.surrogate_others);
    c.other_train_clips = j.value("other_train_clips", d.other_train_clips);
    c.target_archs = j.value("target_archs", d.target_archs);
    c.target_train_clips = j.value("target_train_clips", d.target_train_clips);
    c.gmm_components = j.value("gmm_components", d.gmm_components);
    c.num_aes = j.value("num_aes", d.num_aes);
    c.stage1_clips = j.value("stage1_clips", d.stage1_clips);
    c.grid_carriers = j.value("grid_carriers", d.grid_carriers);
    c.carriers = j.value("carriers", d.carriers);
    c.srs_ratings = j.value("srs_ratings", d.srs_ratings);
    Json forest = Json(d.srs_forest);
    if (j.contains("srs_forest")) forest.update(j.at("srs_forest"));
    c.srs_forest = forest.get<ForestConfig>();
    Json attack = Json(d.attack);
    if (j.contains("attack")) attack.update(j.at("attack"));
    c.attack = attack.get<AttackConfig>();
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (c.surrogate_archs.empty()) throw ConfigError("surrogate_archs is empty");
  if (c.target_archs.empty()) throw ConfigError("target_archs is empty");
  if (c.num_aes < 1) throw ConfigError("num_aes must be >= 1");
  for (const auto &k : c.carriers) ParseCarrierKind(k);
}

std::string ConfigHash(const PipelineConfig &config) {
  return HexDigest(Fnv1a64(Json(config).dump()));
}

DeskCorpus LoadOrBuildCorpus(const PipelineConfig &config) {
  if (!config.manifest.empty())
    return LoadDeskCorpus(config.manifest, config.corpus.sample_rate);
  return BuildDeskCorpus(config.corpus, DeriveSeed(config.seed, kCorpusStream));
}

CarrierLibrary LoadOrBuildLibrary(const PipelineConfig &config) {
  if (!config.library_manifest.empty())
    return LoadEnvironmentalLibrary(config.library_manifest, config.corpus.sample_rate);
  return SynthesizeEnvironmentalLibrary(config.library_size,
                                        DeriveSeed(config.seed, kLibraryStream),
                                        config.library_seconds, config.corpus.sample_rate);
}

DeskSplits SplitDesk(const DeskCorpus &corpus, const PipelineConfig &config) {
  DeskSplits s;
  for (const auto &id : corpus.IdsWithRole(SpeakerRole::kEnrolled)) {
    const auto &utt = corpus.speakers.at(id).utterances;
    if (utt.size() <= static_cast<size_t>(config.target_train_clips))
      throw ConfigError("speaker " + id + " has no clips beyond the training split");
    for (size_t i = 0; i < utt.size(); ++i)
      (i < static_cast<size_t>(config.target_train_clips) ? s.target_train : s.target_test)
          .push_back({utt[i].clip, id});
  }
  if (s.target_train.empty()) throw ConfigError("corpus has no enrolled speakers");
  s.dev = s.target_test;

  const auto impostors = corpus.IdsWithRole(SpeakerRole::kImpostor);
  if (impostors.empty()) throw ConfigError("corpus needs impostor speakers as attack sources");
  for (const auto &id : impostors) {
    const auto &utt = corpus.speakers.at(id).utterances;
    const size_t half = utt.size() / 2;
    if (half == 0) throw ConfigError("impostor " + id + " needs at least two clips");
    for (size_t i = 0; i < half; ++i) s.dev.push_back({utt[i].clip, id});
  }
  for (int i = 0; i < config.num_aes; ++i) {
    const std::string &id = impostors[i % impostors.size()];
    const auto &utt = corpus.speakers.at(id).utterances;
    const size_t k = utt.size() / 2 + i / impostors.size();
    if (k >= utt.size()) throw ConfigError("not enough impostor clips for num_aes");
    s.sources.push_back(utt[k].clip);
    s.source_speakers.push_back(id);
  }

  SpeakerPool pool = PoolFromCorpus(corpus);
  std::vector<RankedSpeaker> ranked = RankSourceSpeakers(corpus.knowledge.clip, pool);
  std::reverse(ranked.begin(), ranked.end());
  for (int i = 0; i < config.stage1_clips; ++i) {
    const auto &clips = pool.speakers.at(ranked[i % ranked.size()].id).clips;
    const size_t k = i / ranked.size();
    if (k >= clips.size()) throw ConfigError("not enough source clips for stage1_clips");
    s.stage1_clips.push_back(clips[k]);
  }
  if (s.stage1_clips.empty()) throw ConfigError("stage1_clips must be >= 1");
  return s;
}

std::vector<const SpeakerModel *> ModelPointers(const std::vector<NamedModel> &models) {
  std::vector<const SpeakerModel *> p;
  for (const auto &m : models) p.push_back(m.model.get());
  return p;
}

std::unique_ptr<SpeakerModel> TrainByArch(std::span<const LabeledClip> data,
                                          const std::string &arch, uint64_t seed,
                                          const PipelineConfig &config) {
  if (arch == "gmm") {
    GmmTrainConfig g;
    g.components = config.gmm_components;
    g.seed = seed;
    return TrainGmmSpeakerModel(data, g);
  }
  MlpConfig m = ArchPreset(arch);
  m.seed = DeriveSeed(m.seed, seed);
  return TrainNeuralSpeakerModel(data, m);
}

std::vector<NamedModel> TrainTargetModels(const DeskSplits &splits,
                                          const PipelineConfig &config) {
  std::vector<NamedModel> out;
  for (size_t i = 0; i < config.target_archs.size(); ++i) {
    const std::string &arch = config.target_archs[i];
    out.push_back({"T-" + arch, arch,
                   TrainByArch(splits.target_train, arch,
                               DeriveSeed(config.seed, kTargetStream + i), config)});
  }
  return out;
}

AudioClip KnowledgeClip(const DeskCorpus &corpus, double seconds) {
  if (!(seconds > 0.0)) throw ConfigError("knowledge level must be positive");
  if (corpus.knowledge.clip.Duration() + 1e-9 < seconds)
    throw ConfigError("knowledge clip is shorter than " + FormatNumber(seconds) + " s");
  return Head(corpus.knowledge.clip, seconds);
}

std::vector<AudioClip> KnowledgeSegments(const AudioClip &knowledge) {
  const size_t win = static_cast<size_t>(knowledge.sample_rate);
  const size_t hop = win / 2;
  std::vector<AudioClip> out;
  if (knowledge.size() <= win) return {knowledge};
  for (size_t start = 0; start + win <= knowledge.size(); start += hop) {
    AudioClip c;
    c.sample_rate = knowledge.sample_rate;
    c.samples.assign(knowledge.samples.begin() + start,
                     knowledge.samples.begin() + start + win);
    out.push_back(std::move(c));
  }
  return out;
}

ParrotSet MakeParrots(const DeskCorpus &corpus, const AudioClip &knowledge,
                      const PipelineConfig &config) {
  return GenerateParrotSet(corpus.target_id, knowledge, PoolFromCorpus(corpus),
                           config.parrot_iterations, config.parrot_samples);
}

std::vector<NamedModel> TrainSurrogates(const DeskCorpus &corpus,
                                        std::span<const AudioClip> target_clips,
                                        std::span<const std::string> archs,
                                        const std::string &prefix,
                                        const PipelineConfig &config) {
  const std::vector<std::string> others = corpus.IdsWithRole(SpeakerRole::kOther);
  if (others.empty()) throw ConfigError("corpus has no other-role speakers");
  std::vector<NamedModel> out;
  for (size_t n = 0; n < archs.size(); ++n) {
    std::vector<std::string> pick = others;
    Rng rng(DeriveSeed(config.seed, kSurrogatePickStream + n));
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(std::min(pick.size(), static_cast<size_t>(std::max(1, config.surrogate_others))));
    std::sort(pick.begin(), pick.end());
    std::vector<LabeledClip> data;
    for (const auto &c : target_clips) data.push_back({c, corpus.target_id});
    for (const auto &id : pick) {
      const auto &utt = corpus.speakers.at(id).utterances;
      const size_t m = std::min(utt.size(), static_cast<size_t>(config.other_train_clips));
      for (size_t i = 0; i < m; ++i) data.push_back({utt[i].clip, id});
    }
    out.push_back({prefix + "-" + archs[n] + "-" + std::to_string(n), archs[n],
                   TrainByArch(data, archs[n],
                               DeriveSeed(config.seed, kSurrogateTrainStream + n), config)});
  }
  return out;
}

std::vector<LabeledClip> SurrogateTestSet(const DeskCorpus &corpus,
                                          const SpeakerModel &surrogate,
                                          const PipelineConfig &config) {
  std::vector<LabeledClip> test;
  for (const auto &label : surrogate.labels()) {
    const auto &utt = corpus.speakers.at(label).utterances;
    const size_t from = label == corpus.target_id ? config.target_train_clips
                                                  : config.other_train_clips;
    for (size_t i = from; i < utt.size(); ++i) test.push_back({utt[i].clip, label});
  }
  return test;
}

std::vector<AeResult> GenerateCarrierAes(CarrierKind kind, const SpeakerModel &surrogate,
                                         const DeskSplits &splits,
                                         const CarrierLibrary &library,
                                         const SrsScorer &scorer,
                                         const PipelineConfig &config) {
  const std::string &target = RequireTarget(config);
  const AttackConfig &a = config.attack;
  std::vector<AeResult> out;
  switch (kind) {
    case CarrierKind::kNoise:
      for (size_t i = 0; i < splits.sources.size(); ++i) {
        PgdOptions o;
        o.epsilon = a.pgd_epsilon;
        o.steps = a.pgd_steps;
        o.step_size = a.pgd_step_size;
        o.seed = DeriveSeed(config.seed, kPgdStream + i);
        out.push_back(PgdAttack(surrogate, splits.sources[i], target, o, &scorer));
      }
      break;
    case CarrierKind::kFeatureTwisted:
      for (const auto &x : splits.sources)
        out.push_back(GridFeatureTwistAttack(surrogate, x, target, a.balance_c, &scorer));
      break;
    case CarrierKind::kEnvironmental: {
      const auto picked =
          StageOneSelectCandidates(surrogate, library, splits.stage1_clips, target,
                                   config.grid_carriers, a.pgd_epsilon, scorer, 0);
      std::vector<Carrier> cands;
      for (const auto &e : picked) cands.push_back(e.carrier);
      const SurrogateEnsemble one({&surrogate});
      for (const auto &x : splits.sources)
        out.push_back(GridEnvWeightAttack(one, x, target, cands, a.pgd_epsilon,
                                          a.balance_c, &scorer));
      break;
    }
    case CarrierKind::kPitchTwisted:
      throw ConfigError("pitch-twisted carriers belong to the two-stage attack");
  }
  return out;
}

TransferOutcome EvaluateTransfer(std::span<const AeBatch> batches,
                                 const std::vector<NamedModel> &surrogates,
                                 const std::vector<NamedModel> &targets,
                                 std::span<const AudioClip> originals) {
  auto find = [](const std::vector<NamedModel> &models, const std::string &id)
      -> const SpeakerModel & {
    for (const auto &m : models)
      if (m.id == id) return *m.model;
    throw ConfigError("unknown model id: " + id);
  };
  std::vector<std::string> target_ids;
  for (const auto &t : targets) target_ids.push_back(t.id);

  std::vector<CarrierKind> kinds;
  std::map<CarrierKind, std::vector<const AeBatch *>> by_kind;
  for (const auto &b : batches) {
    if (!by_kind.count(b.carrier)) kinds.push_back(b.carrier);
    by_kind[b.carrier].push_back(&b);
  }

  TransferOutcome out;
  out.table.columns = {"carrier", "surrogate", "target", "matched", "n", "match_rate"};
  for (CarrierKind kind : kinds) {
    std::vector<std::string> sids;
    for (const AeBatch *b : by_kind[kind]) sids.push_back(b->surrogate);
    TransferMatrix matrix(kind, sids, target_ids);
    double srs_sum = 0.0;
    long srs_n = 0;
    for (const AeBatch *b : by_kind[kind]) {
      if (b->aes.size() != originals.size())
        throw ConfigError("AE batch size differs from the number of originals");
      const SpeakerModel &sur = find(surrogates, b->surrogate);
      std::vector<std::string> sa, sc;
      for (size_t i = 0; i < b->aes.size(); ++i) {
        sa.push_back(sur.Predict(b->aes[i].waveform));
        sc.push_back(sur.Predict(originals[i]));
        srs_sum += b->aes[i].srs;
        ++srs_n;
      }
      for (const auto &t : targets) {
        std::vector<std::string> ta;
        for (const auto &ae : b->aes) ta.push_back(t.model->Predict(ae.waveform));
        const MatchCount c = CountMatches(sa, ta, sc);
        matrix.Set(b->surrogate, t.id, c.rate());
        out.table.AddRow({CarrierKindName(kind), b->surrogate, t.id, std::to_string(c.matched),
                          std::to_string(c.total), FormatNumber(c.rate())});
      }
    }
    out.tpr.push_back(MakeTprReport(kind, matrix.MeanRate(), srs_sum / srs_n));
    out.matrices.push_back(std::move(matrix));
  }
  return out;
}

TransferOutcome RunTransferExperiment(const PipelineConfig &config_in,
                                      const SrsScorer &scorer) {
  const DeskCorpus corpus = LoadOrBuildCorpus(config_in);
  PipelineConfig config = config_in;
  if (config.attack.target.empty()) config.attack.target = corpus.target_id;
  const DeskSplits splits = SplitDesk(corpus, config);
  const std::vector<NamedModel> targets = TrainTargetModels(splits, config);
  const ParrotSet parrots =
      MakeParrots(corpus, KnowledgeClip(corpus, config.knowledge_seconds), config);
  const std::vector<NamedModel> surrogates =
      TrainSurrogates(corpus, parrots.clips, config.surrogate_archs, "PT", config);
  const CarrierLibrary library = LoadOrBuildLibrary(config);
  std::vector<AeBatch> batches;
  for (const auto &name : config.carriers) {
    const CarrierKind kind = ParseCarrierKind(name);
    for (const auto &s : surrogates)
      batches.push_back({kind, s.id,
                         GenerateCarrierAes(kind, *s.model, splits, library, scorer, config)});
  }
  return EvaluateTransfer(batches, surrogates, targets, splits.sources);
}

TwoStageOutcome RunTwoStageAttack(const std::vector<NamedModel> &surrogates,
                                  const DeskSplits &splits, const CarrierLibrary &library,
                                  const SrsScorer &scorer, const PipelineConfig &config) {
  if (surrogates.empty()) throw ConfigError("two-stage attack needs surrogates");
  const std::string &target = RequireTarget(config);
  const AttackConfig &a = config.attack;
  TwoStageOutcome out;
  out.candidates = StageOneSelectCandidates(*surrogates[0].model, library, splits.stage1_clips,
                                            target, a.num_candidates, a.spsa_epsilon, scorer,
                                            a.twist_step);
  std::vector<Carrier> cands;
  for (const auto &e : out.candidates) cands.push_back(e.carrier);
  const SurrogateEnsemble ensemble(ModelPointers(surrogates));
  for (size_t i = 0; i < splits.sources.size(); ++i) {
    SpsaOptions o;
    o.epsilon = a.spsa_epsilon;
    o.steps = a.spsa_steps;
    o.restarts = a.spsa_restarts;
    o.seed = DeriveSeed(config.seed, kSpsaStream + i);
    out.aes.push_back(SpsaAttack(ensemble, splits.sources[i], target, cands, a.balance_c,
                                 &scorer, o));
  }
  return out;
}

Table AttackTableColumns() {
  Table t;
  t.columns = {"variant", "knowledge_s", "target", "group", "task", "n", "asr", "mean_srs"};
  return t;
}

void AppendSuccessRows(const DeskCorpus &corpus, const DeskSplits &splits,
                       const std::vector<NamedModel> &targets, const PipelineConfig &config,
                       double knowledge_seconds, const std::string &variant,
                       std::span<const AeResult> aes, Table *table) {
  if (aes.size() != splits.source_speakers.size())
    throw ConfigError("AE count differs from the number of attack sources");
  const std::string &target = RequireTarget(config);
  const std::string target_gender = corpus.speakers.at(target).voice.gender;
  for (const auto &t : targets) {
    Thresholds thr;
    if (config.attack.task != Task::kCsi) thr = CalibrateThresholds(*t.model, splits.dev).thresholds;
    std::vector<Decision> decisions;
    for (const auto &ae : aes)
      decisions.push_back(Decide(*t.model, ae.waveform, config.attack.task, thr, target));
    for (const std::string group : {"all", "intra", "inter"}) {
      std::vector<Decision> d;
      double srs = 0.0;
      for (size_t i = 0; i < aes.size(); ++i) {
        const bool same =
            corpus.speakers.at(splits.source_speakers[i]).voice.gender == target_gender;
        if (group == "all" || (group == "intra") == same) {
          d.push_back(decisions[i]);
          srs += aes[i].srs;
        }
      }
      const bool empty = d.empty();
      table->AddRow({variant, FormatNumber(knowledge_seconds), t.id, group,
                     TaskName(config.attack.task), std::to_string(d.size()),
                     empty ? "nan" : FormatNumber(AttackSuccessRate(d, target)),
                     empty ? "nan" : FormatNumber(srs / d.size())});
    }
  }
}

void RunAttackVariant(const AttackContext &ctx, const PipelineConfig &config_in,
                      double knowledge_seconds, const std::string &removal, Table *table) {
  if (!removal.empty() &&
      std::find(AblationTags().begin(), AblationTags().end(), removal) == AblationTags().end())
    throw ConfigError("unknown removal tag: " + removal);
  const DeskCorpus &corpus = *ctx.corpus;
  const DeskSplits &splits = *ctx.splits;
  PipelineConfig config = config_in;
  if (config.attack.target.empty()) config.attack.target = corpus.target_id;
  const std::string &target = config.attack.target;
  const AudioClip knowledge = KnowledgeClip(corpus, knowledge_seconds);

  std::vector<std::string> archs = config.surrogate_archs;
  if (removal == "single-surrogate") archs.resize(1);
  if (removal == "same-architecture") archs.assign(archs.size(), archs[0]);

  std::vector<NamedModel> surrogates;
  if (removal == "no-PT") {
    surrogates = TrainSurrogates(corpus, KnowledgeSegments(knowledge), archs, "nonPT", config);
  } else {
    const ParrotSet parrots = MakeParrots(corpus, knowledge, config);
    surrogates = TrainSurrogates(corpus, parrots.clips, archs, "PT", config);
  }

  std::vector<AeResult> aes;
  if (removal == "feature-twist-only") {
    for (const auto &x : splits.sources)
      aes.push_back(GridFeatureTwistAttack(*surrogates[0].model, x, target,
                                           config.attack.balance_c, ctx.scorer));
  } else if (removal == "noise-only") {
    const SurrogateEnsemble ensemble(ModelPointers(surrogates));
    for (size_t i = 0; i < splits.sources.size(); ++i) {
      std::vector<Carrier> noise;
      for (int k = 0; k < config.attack.num_candidates; ++k)
        noise.push_back(MakeNoiseCarrier(splits.sources[i].size(),
                                         DeriveSeed(config.seed, kNoiseCarrierStream + k),
                                         splits.sources[i].sample_rate));
      SpsaOptions o;
      o.epsilon = config.attack.spsa_epsilon;
      o.steps = config.attack.spsa_steps;
      o.restarts = config.attack.spsa_restarts;
      o.seed = DeriveSeed(config.seed, kSpsaStream + i);
      aes.push_back(SpsaAttack(ensemble, splits.sources[i], target, noise,
                               config.attack.balance_c, ctx.scorer, o));
    }
  } else {
    aes = RunTwoStageAttack(surrogates, splits, *ctx.library, *ctx.scorer, config).aes;
  }

  AppendSuccessRows(corpus, splits, *ctx.targets, config, knowledge_seconds,
                    removal.empty() ? "full" : removal, aes, table);
}

Table KnowledgeSweep(const AttackContext &ctx, const PipelineConfig &config,
                     std::vector<double> levels) {
  if (levels.empty()) throw ConfigError("knowledge sweep needs at least one level");
  std::stable_sort(levels.begin(), levels.end());
  for (double l : levels) KnowledgeClip(*ctx.corpus, l);
  Table table = AttackTableColumns();
  for (double l : levels) RunAttackVariant(ctx, config, l, "", &table);
  return table;
}

Table AblationRun(const AttackContext &ctx, const PipelineConfig &config,
                  const std::vector<std::string> &removals) {
  for (const auto &r : removals)
    if (std::find(AblationTags().begin(), AblationTags().end(), r) == AblationTags().end())
      throw ConfigError("unknown removal tag: " + r);
  Table table = AttackTableColumns();
  RunAttackVariant(ctx, config, config.knowledge_seconds, "", &table);
  for (const auto &r : removals) RunAttackVariant(ctx, config, config.knowledge_seconds, r, &table);
  return table;
}

}  // namespace parrot
