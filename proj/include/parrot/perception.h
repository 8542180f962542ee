// parrot/perception.h

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

// Perceptual quality of a perturbed clip relative to its original: a fixed
// feature front-end, a random-forest regressor onto a 1-7 opinion scale
// (the speech regression score, SRS) and correlation checks against human
// ratings.

#ifndef PARROT_PERCEPTION_H_
#define PARROT_PERCEPTION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/carriers.h"
#include "parrot/io.h"
#include "parrot/mfcc.h"
#include "parrot/pitch.h"

namespace parrot {

inline constexpr int kNumQualityFeatures = 8;
inline constexpr double kMinSrs = 1.0;
inline constexpr double kMaxSrs = 7.0;
/// SCR feature ceiling; identical clips report this instead of +inf.
inline constexpr double kScrFeatureCapDb = 60.0;

/// Feature order of ExtractQualityFeatures.
const std::array<std::string, kNumQualityFeatures> &QualityFeatureNames();

/// Analysis of an original clip, computed once and reused for every
/// perturbed version of it.
class QualityReference {
 public:
  explicit QualityReference(const AudioClip &original);

  const AudioClip &clip() const { return clip_; }
  const MfccMatrix &mfcc() const { return mfcc_; }
  const PitchTrack &pitch() const { return pitch_; }
  double hnr_db() const { return hnr_db_; }
  const MfccComputer &mfcc_computer() const { return *computer_; }

 private:
  AudioClip clip_;
  std::shared_ptr<const MfccComputer> computer_;
  MfccMatrix mfcc_;
  PitchTrack pitch_;
  double hnr_db_ = 0.0;
};

/// {SCR dB (capped), L2, Linf, HNR delta (perturbed - original),
///  MFCC frame distance mean, max, pitch RMS deviation (semitones),
///  duration ratio}.  A shorter perturbed clip is zero-padded; a longer one
/// counts its tail as perturbation.  Frame features compare the common
/// frames.  Throws ConfigError on a rate mismatch or a duration ratio
/// outside [0.5, 2].
std::vector<double> ExtractQualityFeatures(const QualityReference &ref,
                                           const AudioClip &perturbed);
std::vector<double> ExtractQualityFeatures(const AudioClip &original,
                                           const AudioClip &perturbed);

/// Anything that rates a perturbed clip on the 1-7 scale.
class SrsScorer {
 public:
  virtual ~SrsScorer() = default;
  virtual double ScoreFeatures(std::span<const double> features) const = 0;
  /// Short tag recorded next to every SRS-derived number.
  virtual std::string Provenance() const = 0;

  double Score(const QualityReference &ref, const AudioClip &perturbed) const;
  double Score(const AudioClip &original, const AudioClip &perturbed) const;
};

/// Monotone map from a weighted feature distance D >= 0 to
/// 1 + 6 exp(-D).  Stands in for human raters when none are available.
class HeuristicSrs : public SrsScorer {
 public:
  double ScoreFeatures(std::span<const double> features) const override;
  std::string Provenance() const override { return "heuristic-SRS"; }
  /// The distance D itself.
  static double Degradation(std::span<const double> features);
};

struct SrsExample {
  std::vector<double> features;
  double score = 0.0;
};

struct ForestConfig {
  int num_trees = 100;
  int max_depth = 8;
  int min_samples_leaf = 1;
  int max_features = 0;  // candidate features per split; <= 0 means all
  uint64_t seed = 1;
  int min_records = 30;
};

void to_json(Json &j, const ForestConfig &c);
void from_json(const Json &j, ForestConfig &c);

/// Random-forest regressor over quality features.  Predictions are the
/// tree mean clamped to [1, 7].  Immutable after training.
class SrsModel : public SrsScorer {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  double ScoreFeatures(std::span<const double> features) const override;
  std::string Provenance() const override { return provenance_; }

  /// Unclamped forest mean.
  double RawPredict(std::span<const double> features) const;

  const std::vector<Tree> &trees() const { return trees_; }
  const ForestConfig &config() const { return config_; }
  double oob_mse() const { return oob_mse_; }
  double oob_r2() const { return oob_r2_; }
  int num_oob() const { return num_oob_; }

  Json ToJson() const;
  static SrsModel FromJson(const Json &j);
  void Save(const std::filesystem::path &path) const;
  static SrsModel Load(const std::filesystem::path &path);

 private:
  friend SrsModel TrainSrs(std::span<const SrsExample>, const ForestConfig &,
                           const std::string &);
  ForestConfig config_;
  std::vector<Tree> trees_;
  std::string provenance_ = "human-SRS";
  double oob_mse_ = 0.0;
  double oob_r2_ = 0.0;
  int num_oob_ = 0;
};

/// Bagged regression trees with variance-reduction splits.  Examples are
/// put in a canonical order first, so the model does not depend on input
/// order.  Throws ConfigError below config.min_records examples, on a
/// feature-length mismatch or on a score outside [1, 7].
SrsModel TrainSrs(std::span<const SrsExample> examples,
                  const ForestConfig &config = {},
                  const std::string &provenance = "human-SRS");

struct RatingRecord {
  std::filesystem::path original;
  std::filesystem::path perturbed;
  double score = 0.0;
};

/// One record per line: original path, perturbed path, score, separated by
/// tabs or commas.  Blank lines and lines starting with '#' are skipped.
/// Relative paths resolve against the file's directory.  Throws DataError
/// on a malformed line or a score outside [1, 7].
std::vector<RatingRecord> ParseRatingFile(const std::filesystem::path &path);

/// Loads both clips of every record and extracts their features.
std::vector<SrsExample> ExamplesFromRatings(std::span<const RatingRecord> records,
                                            int sample_rate = kDefaultSampleRate);

/// `count` perturbed versions of `originals`, mixing noise, feature-twisted,
/// environmental and pitch-twisted carriers at SCRs in [scr_lo, scr_hi] dB,
/// each labeled by `labeler`.
std::vector<SrsExample> SynthesizeRatings(std::span<const AudioClip> originals,
                                          const CarrierLibrary &library,
                                          const SrsScorer &labeler, int count,
                                          uint64_t seed, double scr_lo = -5.0,
                                          double scr_hi = 40.0);

/// Forest trained on synthetic ratings from HeuristicSrs.
SrsModel TrainHeuristicSrs(std::span<const AudioClip> originals,
                           const CarrierLibrary &library, int count,
                           const ForestConfig &config = {});

struct MetricCorrelation {
  double pearson = 0.0;
  double spearman = 0.0;
};

/// 1-based ranks; ties share their average rank.
std::vector<double> AverageRanks(std::span<const double> x);
/// Throw ConfigError on unequal lengths, n < 3 or a zero-variance input.
double PearsonCorrelation(std::span<const double> x, std::span<const double> y);
double SpearmanCorrelation(std::span<const double> x, std::span<const double> y);
MetricCorrelation ValidateMetric(std::span<const double> metric,
                                 std::span<const double> human);

}  // namespace parrot

#endif  // PARROT_PERCEPTION_H_
