// parrot/parrot_gen.h

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

// Parrot speech: clips that imitate a target speaker, produced from a
// single short target sample by converting source-speaker utterances.

#ifndef PARROT_PARROT_GEN_H_
#define PARROT_PARROT_GEN_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/corpus.h"
#include "parrot/pitch.h"
#include "parrot/speaker_model.h"

namespace parrot {

enum class PoolRole { kSource, kTarget, kOther };
std::string PoolRoleName(PoolRole role);
PoolRole ParsePoolRole(const std::string &name);

struct PoolSpeaker {
  PoolRole role = PoolRole::kSource;
  std::vector<AudioClip> clips;
  std::vector<std::vector<std::string>> transcripts;  // optional, per clip
};

/// Speaker id -> clips.  Iteration order is by id.
struct SpeakerPool {
  std::map<std::string, PoolSpeaker> speakers;

  std::vector<std::string> IdsWithRole(PoolRole role) const;
  /// Throws ConfigError on a speaker without clips.
  void Validate() const;
};

/// Corpus source speakers as the source pool, the target as kTarget, the
/// rest as kOther.
SpeakerPool PoolFromCorpus(const DeskCorpus &corpus);

/// Manifest: {"speakers": {id: {"role": r, "clips": [paths],
/// "transcript": path?}}}.  Relative paths resolve against the manifest's
/// directory; clips are resampled to `sample_rate`.
SpeakerPool LoadPoolManifest(const std::filesystem::path &manifest,
                             int sample_rate = kDefaultSampleRate);
/// Writes clips as WAV files under `dir` plus dir/manifest.json.
void SavePoolManifest(const std::filesystem::path &dir, const SpeakerPool &pool);

struct RankedSpeaker {
  std::string id;
  double distance = 0.0;  // mean pitch distance in semitones
};

/// Source speakers sorted by mean pitch distance to the target (ties by
/// id).  Speakers without a voiced clip are left out.  Throws ConfigError
/// if the target is unvoiced or no source speaker is voiced.
std::vector<RankedSpeaker> RankSourceSpeakers(const AudioClip &target,
                                              const SpeakerPool &pool);
std::string SelectSourceSpeaker(const AudioClip &target, const SpeakerPool &pool);

/// Pitch residuals below this are not corrected by ConvertOnce, so repeated
/// conversion settles instead of dithering around the target.
inline constexpr double kPitchDeadbandSemitones = 0.05;

/// One conversion step: full pitch shift of the source's mean f0 onto the
/// target's, then a smooth spectral-envelope correction toward the target.
/// Duration and rhythm of the source are kept.  Throws ConfigError on an
/// unvoiced input.
AudioClip ConvertOnce(const AudioClip &source, const AudioClip &target);

/// Cepstrally smoothed average log-power spectrum over the voiced-energy
/// frames, excluding the zeroth quefrency; fft_size/2+1 values.
std::vector<double> SpectralEnvelope(const AudioClip &clip, int fft_size = 512,
                                     int num_quefrencies = 12);

enum class Provenance { kStandIn, kExternal };

struct ParrotSet {
  std::string target;
  std::vector<AudioClip> clips;
  Provenance provenance = Provenance::kStandIn;
  int iterations = 0;
  std::vector<std::string> source_ids;  // per clip
};

/// n_samples source utterances, best-ranked speaker first, each converted
/// `iterations` times with the output fed back as the source and the target
/// fixed.  Passes after the first are kept only when they leave the mean
/// f0 no farther from the target's.  iterations = 0 returns the raw source
/// utterances.  Throws
/// ConfigError when the pool cannot supply n_samples voiced utterances.
ParrotSet GenerateParrotSet(const std::string &target_label,
                            const AudioClip &target_clip, const SpeakerPool &pool,
                            int iterations, int n_samples);

/// Clips listed for `target_label` in a pool manifest, tagged external.
/// Throws DataError when the entry is missing or empty.
ParrotSet IngestExternalParrots(const std::filesystem::path &manifest,
                                const std::string &target_label,
                                int sample_rate = kDefaultSampleRate);

/// FP / (FP + TN).  Throws ConfigError when both are zero.
double FalsePositiveRate(long fp, long tn);

/// CSI over every parrot clip: predicted target counts as FP, any other
/// label as TN.  Throws ConfigError on an empty set or unknown target.
double EvaluateFpr(const SpeakerModel &model, const ParrotSet &parrots,
                   const std::string &target);

struct BinaryMetrics {
  double recall = 0.0;
  double precision = 0.0;  // 0 when the target is never predicted
  double f1 = 0.0;
};

/// Harmonic mean of recall and precision (0 when both are 0).
double F1Score(double recall, double precision);

/// Target-vs-rest metrics of the CSI prediction.  Throws ConfigError if no
/// test clip carries the target label.
BinaryMetrics TargetVsRest(const SpeakerModel &model,
                           std::span<const LabeledClip> test,
                           const std::string &target);

struct PtGtComparison {
  BinaryMetrics pt;
  BinaryMetrics gt;
};

PtGtComparison ComparePtGt(const SpeakerModel &pt_model,
                           const SpeakerModel &gt_model,
                           std::span<const LabeledClip> test,
                           const std::string &target);

}  // namespace parrot

#endif  // PARROT_PARROT_GEN_H_
