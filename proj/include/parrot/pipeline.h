// parrot/pipeline.h

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

// End-to-end experiment stages on a desk corpus: black-box target models,
// parrot-trained surrogates, carrier AEs, the two-stage attack and the
// sweeps built from them.  Every stage is deterministic in the config seed.

#ifndef PARROT_PIPELINE_H_
#define PARROT_PIPELINE_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parrot/attack.h"
#include "parrot/carriers.h"
#include "parrot/corpus.h"
#include "parrot/eval.h"
#include "parrot/parrot_gen.h"
#include "parrot/perception.h"
#include "parrot/speaker_model.h"

namespace parrot {

struct PipelineConfig {
  uint64_t seed = 1;
  DeskCorpusConfig corpus;
  std::string manifest;          // fixture manifest; empty synthesizes the corpus
  std::string library_manifest;  // environmental sounds; empty synthesizes them
  int library_size = 15;
  double library_seconds = 1.0;
  double knowledge_seconds = 8.0;
  int parrot_iterations = 5;
  int parrot_samples = 24;
  std::vector<std::string> surrogate_archs = {"cnn-a", "tdnn-a", "cnn-b"};
  int surrogate_others = 5;   // other speakers per surrogate
  int other_train_clips = 24;
  std::vector<std::string> target_archs = {"cnn-c", "gmm"};
  int target_train_clips = 40;
  int gmm_components = 16;
  int num_aes = 10;      // attack source clips
  int stage1_clips = 4;  // attacker-side clips scored in stage 1
  int grid_carriers = 3;
  std::vector<std::string> carriers = {"noise", "environmental"};
  int srs_ratings = 200;
  ForestConfig srs_forest;
  AttackConfig attack;

  PipelineConfig();
};

void to_json(Json &j, const PipelineConfig &c);
/// Unknown keys are ConfigErrors.
void from_json(const Json &j, PipelineConfig &c);

/// Fnv1a64 of the canonical JSON of the config.
std::string ConfigHash(const PipelineConfig &config);

DeskCorpus LoadOrBuildCorpus(const PipelineConfig &config);
CarrierLibrary LoadOrBuildLibrary(const PipelineConfig &config);

struct DeskSplits {
  std::vector<LabeledClip> target_train;  // enrolled speakers
  std::vector<LabeledClip> target_test;
  std::vector<LabeledClip> dev;           // threshold calibration
  std::vector<AudioClip> sources;         // attack sources, one per AE
  std::vector<std::string> source_speakers;
  std::vector<AudioClip> stage1_clips;
};

/// Impostor clips are halved: the first half joins the enrolled test
/// clips as calibration data, the second half supplies the attack sources
/// round robin over speakers.  Stage-1 clips come from the source pool,
/// farthest speakers first.  Throws ConfigError when a group is too small.
DeskSplits SplitDesk(const DeskCorpus &corpus, const PipelineConfig &config);

struct NamedModel {
  std::string id;
  std::string arch;
  std::unique_ptr<SpeakerModel> model;
};

std::vector<const SpeakerModel *> ModelPointers(const std::vector<NamedModel> &models);

/// Architecture "gmm" trains a GMM-UBM, any other name a neural preset.
std::unique_ptr<SpeakerModel> TrainByArch(std::span<const LabeledClip> data,
                                          const std::string &arch, uint64_t seed,
                                          const PipelineConfig &config);

/// One black-box model per target architecture, ids "T-<arch>".
std::vector<NamedModel> TrainTargetModels(const DeskSplits &splits,
                                          const PipelineConfig &config);

/// First `seconds` of the knowledge clip.  Throws ConfigError when it is
/// shorter.
AudioClip KnowledgeClip(const DeskCorpus &corpus, double seconds);
/// 1 s windows with 0.5 s hop over the knowledge clip.
std::vector<AudioClip> KnowledgeSegments(const AudioClip &knowledge);

ParrotSet MakeParrots(const DeskCorpus &corpus, const AudioClip &knowledge,
                      const PipelineConfig &config);

/// Surrogate n trains `target_clips` under the target label next to
/// `surrogate_others` other-role speakers drawn with DeriveSeed(seed, n).
/// Ids are "<prefix>-<arch>-<n>".
std::vector<NamedModel> TrainSurrogates(const DeskCorpus &corpus,
                                        std::span<const AudioClip> target_clips,
                                        std::span<const std::string> archs,
                                        const std::string &prefix,
                                        const PipelineConfig &config);

/// Held-out target clips plus held-out clips of the surrogate's other
/// speakers.
std::vector<LabeledClip> SurrogateTestSet(const DeskCorpus &corpus,
                                          const SpeakerModel &surrogate,
                                          const PipelineConfig &config);

/// One AE per attack source from a single surrogate.  Noise: PGD.
/// Feature-twisted: the 510-point grid.  Environmental: the weight grid over
/// the surrogate's best `grid_carriers` unshifted sounds by stage-1 TPR,
/// within the PGD budget.
std::vector<AeResult> GenerateCarrierAes(CarrierKind kind, const SpeakerModel &surrogate,
                                         const DeskSplits &splits,
                                         const CarrierLibrary &library,
                                         const SrsScorer &scorer,
                                         const PipelineConfig &config);

struct AeBatch {
  CarrierKind carrier = CarrierKind::kNoise;
  std::string surrogate;
  std::vector<AeResult> aes;
};

struct TransferOutcome {
  std::vector<TransferMatrix> matrices;  // one per carrier, in batch order
  std::vector<TprReport> tpr;
  Table table;
};

/// Match rates of every batch against every target; per carrier the rate
/// is averaged over surrogates, then targets.
TransferOutcome EvaluateTransfer(std::span<const AeBatch> batches,
                                 const std::vector<NamedModel> &surrogates,
                                 const std::vector<NamedModel> &targets,
                                 std::span<const AudioClip> originals);

/// Builds everything from the config seed and evaluates the configured
/// carriers with PT surrogates.
TransferOutcome RunTransferExperiment(const PipelineConfig &config, const SrsScorer &scorer);

struct TwoStageOutcome {
  std::vector<StageOneEntry> candidates;
  std::vector<AeResult> aes;
};

/// Stage 1 on the first surrogate, then SPSA over the candidate weights on
/// the whole ensemble for every attack source.
TwoStageOutcome RunTwoStageAttack(const std::vector<NamedModel> &surrogates,
                                  const DeskSplits &splits, const CarrierLibrary &library,
                                  const SrsScorer &scorer, const PipelineConfig &config);

/// Component removals of the ablation harness.
inline const std::vector<std::string> &AblationTags() {
  static const std::vector<std::string> t = {"no-PT", "noise-only", "feature-twist-only",
                                             "single-surrogate", "same-architecture"};
  return t;
}

/// Success of one attack run against every target model.  Columns:
/// variant, knowledge_s, target, group, task, n, asr, mean_srs.  Groups are
/// all, intra (source gender = target gender) and inter.
Table AttackTableColumns();

/// Appends the success rows of `aes` (one per attack source) against every
/// target.  OSI and SV thresholds are calibrated on the dev split.
void AppendSuccessRows(const DeskCorpus &corpus, const DeskSplits &splits,
                       const std::vector<NamedModel> &targets, const PipelineConfig &config,
                       double knowledge_seconds, const std::string &variant,
                       std::span<const AeResult> aes, Table *table);

struct AttackContext {
  const DeskCorpus *corpus = nullptr;
  const DeskSplits *splits = nullptr;
  const std::vector<NamedModel> *targets = nullptr;
  const CarrierLibrary *library = nullptr;
  const SrsScorer *scorer = nullptr;
};

/// Runs parrot generation, surrogate training and the attack for one
/// knowledge level with `removal` applied ("" for the full pipeline), and
/// appends its rows to `table`.  Unknown tags are ConfigErrors.
void RunAttackVariant(const AttackContext &ctx, const PipelineConfig &config,
                      double knowledge_seconds, const std::string &removal,
                      Table *table);

/// One attack run per level, rows in ascending level order (repeats kept).
/// Throws ConfigError when a level exceeds the knowledge clip.
Table KnowledgeSweep(const AttackContext &ctx, const PipelineConfig &config,
                     std::vector<double> levels);

/// The full pipeline followed by each removal, identical seeds throughout.
Table AblationRun(const AttackContext &ctx, const PipelineConfig &config,
                  const std::vector<std::string> &removals);

}  // namespace parrot

#endif  // PARROT_PIPELINE_H_
