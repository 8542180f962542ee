// parrot/speaker_model.h

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

#ifndef PARROT_SPEAKER_MODEL_H_
#define PARROT_SPEAKER_MODEL_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/gmm.h"
#include "parrot/io.h"
#include "parrot/mfcc.h"
#include "parrot/mlp.h"

namespace parrot {

enum class ModelFamily { kGmmUbm, kNeural };

struct LabeledClip {
  AudioClip clip;
  std::string label;
};

/// Scoring model over an ordered set of enrolled speaker labels.
/// Trained models are immutable; all const methods are thread-safe.
class SpeakerModel {
 public:
  virtual ~SpeakerModel() = default;

  virtual ModelFamily family() const = 0;
  const std::vector<std::string> &labels() const { return labels_; }
  const MfccConfig &mfcc_config() const { return mfcc_; }

  /// Index of `label`; throws ConfigError if it is not enrolled.
  int LabelIndex(const std::string &label) const;
  bool HasLabel(const std::string &label) const;

  /// Similarity score S(x, y_i) for every enrolled label, in label order.
  virtual std::vector<double> Scores(const AudioClip &clip) const = 0;
  double Score(const AudioClip &clip, const std::string &label) const;

  /// Probability over labels: softmax of the scores for the GMM family,
  /// the scores themselves for the neural family.
  virtual std::vector<double> Posteriors(const AudioClip &clip) const;

  /// Closed-set argmax, ties to the lowest label index.
  std::string Predict(const AudioClip &clip) const;

  virtual Json ToJson() const = 0;

 protected:
  SpeakerModel(std::vector<std::string> labels, MfccConfig mfcc);

  std::vector<std::string> labels_;
  MfccConfig mfcc_;
};

/// GMM-UBM: score = average per-frame log-likelihood ratio of the MAP-adapted
/// speaker mixture against the UBM.
class GmmSpeakerModel : public SpeakerModel {
 public:
  GmmSpeakerModel(DiagGmm ubm, std::vector<std::string> labels,
                  std::vector<DiagGmm> speakers, MfccConfig mfcc);

  ModelFamily family() const override { return ModelFamily::kGmmUbm; }
  std::vector<double> Scores(const AudioClip &clip) const override;
  /// Scores from precomputed MFCC frames.
  std::vector<double> ScoreFrames(const FrameSet &frames) const;

  const DiagGmm &ubm() const { return ubm_; }
  const DiagGmm &speaker(int i) const { return speakers_[i]; }

  Json ToJson() const override;
  static std::unique_ptr<GmmSpeakerModel> FromJson(const Json &j);

 private:
  DiagGmm ubm_;
  std::vector<DiagGmm> speakers_;
};

struct GmmTrainConfig {
  int components = 32;
  int em_iterations = 10;
  double relevance = kDefaultRelevanceFactor;
  uint64_t seed = 1;
};

/// MFCC frames of one clip as a FrameSet.
FrameSet ClipFrames(const AudioClip &clip, const MfccConfig &mfcc);

/// MAP-enrolls one speaker against a UBM.  Throws ConfigError if `clips` is
/// empty.
DiagGmm EnrollSpeaker(const DiagGmm &ubm, std::span<const AudioClip> clips,
                      const MfccConfig &mfcc,
                      double relevance = kDefaultRelevanceFactor);

/// Trains a UBM on the pooled frames of all clips, then enrolls every label.
std::unique_ptr<GmmSpeakerModel> TrainGmmSpeakerModel(
    std::span<const LabeledClip> data, const GmmTrainConfig &config,
    const MfccConfig &mfcc = {});

/// Pooled-MFCC MLP: score = softmax probability.
class NeuralSpeakerModel : public SpeakerModel {
 public:
  NeuralSpeakerModel(Mlp net, std::vector<std::string> labels,
                     MfccConfig mfcc);

  ModelFamily family() const override { return ModelFamily::kNeural; }
  std::vector<double> Scores(const AudioClip &clip) const override;
  std::vector<double> Posteriors(const AudioClip &clip) const override {
    return Scores(clip);
  }

  /// Pooled mean+std MFCC vector used as the network input.
  std::vector<double> Features(const AudioClip &clip) const;
  const Mlp &net() const { return net_; }

  struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad;
  };
  /// Cross-entropy -log p(target | x) and its gradient w.r.t. the pooled
  /// feature vector.
  LossGradient FeatureLossGradient(std::span<const double> features,
                                   int target) const;
  /// Cross-entropy and its gradient w.r.t. the waveform samples.
  LossGradient WaveformLossGradient(const AudioClip &clip, int target) const;

  Json ToJson() const override;
  static std::unique_ptr<NeuralSpeakerModel> FromJson(const Json &j);

 private:
  Mlp net_;
};

/// Named hidden-layer/seed presets standing in for distinct architectures:
/// "default", "cnn-a", "cnn-b", "cnn-c", "tdnn-a", "tdnn-b", "tdnn-c".
MlpConfig ArchPreset(const std::string &name);
std::vector<std::string> ArchPresetNames();

/// Requires >= 2 labels with >= 10 clips each (ConfigError otherwise).
std::unique_ptr<NeuralSpeakerModel> TrainNeuralSpeakerModel(
    std::span<const LabeledClip> data, const MlpConfig &config,
    const MfccConfig &mfcc = {}, std::vector<double> *epoch_losses = nullptr);

void SaveSpeakerModel(const std::filesystem::path &path,
                      const SpeakerModel &model);
std::unique_ptr<SpeakerModel> LoadSpeakerModel(const std::filesystem::path &path);
std::unique_ptr<SpeakerModel> SpeakerModelFromJson(const Json &j);

// ---------------------------------------------------------------------------
// Decisions.

enum class Task { kCsi, kOsi, kSv };

Task ParseTask(const std::string &name);
std::string TaskName(Task task);

struct Thresholds {
  double osi = 0.0;
  double sv = 0.0;
};

struct Decision {
  Task task = Task::kCsi;
  /// Identified label (CSI always; OSI when accepted; SV: the claimed label
  /// when accepted).
  std::optional<std::string> label;
  bool accepted = false;
  std::vector<double> scores;
};

/// CSI: argmax.  OSI: argmax when the max score >= thresholds.osi, else
/// reject.  SV: accept iff scores[claimed] >= thresholds.sv.
Decision Decide(std::span<const double> scores,
                const std::vector<std::string> &labels, Task task,
                const Thresholds &thresholds, int claimed = 0);

Decision Decide(const SpeakerModel &model, const AudioClip &clip, Task task,
                const Thresholds &thresholds, const std::string &claimed = "");

/// Index of the maximum, lowest index on ties.
int ArgMax(std::span<const double> v);

// ---------------------------------------------------------------------------
// Threshold calibration.

/// Fraction of impostor scores >= threshold.
double FalseAcceptanceRate(std::span<const double> impostor, double threshold);
/// Fraction of genuine scores < threshold.
double FalseRejectionRate(std::span<const double> genuine, double threshold);

struct EqualErrorPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double eer = 0.0;
};

/// Threshold where the false-acceptance and false-rejection curves cross,
/// linearly interpolated between candidate thresholds; the middle of a
/// zero-difference plateau when one exists.
EqualErrorPoint FindEqualErrorPoint(std::span<const double> genuine,
                                    std::span<const double> impostor);

struct CalibrationReport {
  Thresholds thresholds;
  double far = 0.0;    // SV false acceptance at thresholds.sv
  double frr = 0.0;    // SV false rejection at thresholds.sv
  double osier = 0.0;  // open-set identification equal error rate
};

/// Dev clips whose label is enrolled are genuine; all others are impostors.
/// SV trials pair genuine clips with their own label and impostor clips with
/// every enrolled label.  OSI false acceptance counts impostor clips whose
/// best score passes; OSI false rejection counts enrolled clips that are
/// rejected or misidentified.  Throws ConfigError if either class is absent.
CalibrationReport CalibrateThresholds(const SpeakerModel &model,
                                      std::span<const LabeledClip> dev);

}  // namespace parrot

#endif  // PARROT_SPEAKER_MODEL_H_
