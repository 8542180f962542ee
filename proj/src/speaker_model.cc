// src/speaker_model.cc

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

#include "parrot/speaker_model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "parrot/common.h"

namespace parrot {

namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char *kModelFormat = "parrotlab-speaker-model";

void CheckUniqueLabels(const std::vector<std::string> &labels) {
  if (labels.empty()) throw ConfigError("speaker model needs at least one label");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw ConfigError("duplicate speaker label");
}

// Ordered unique labels in first-appearance order.
std::vector<std::string> CollectLabels(std::span<const LabeledClip> data) {
  std::vector<std::string> labels;
  for (const auto &d : data)
    if (std::find(labels.begin(), labels.end(), d.label) == labels.end())
      labels.push_back(d.label);
  return labels;
}

// Crossing of a nonincreasing false-accept curve and a nondecreasing
// false-reject curve over the given candidate scores.
EqualErrorPoint Crossing(const std::function<double(double)> &fa,
                         const std::function<double(double)> &fr,
                         std::vector<double> scores) {
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> cand;
  cand.push_back(scores.front() - 1.0);
  for (size_t i = 0; i + 1 < scores.size(); ++i)
    cand.push_back(0.5 * (scores[i] + scores[i + 1]));
  cand.push_back(scores.back() + 1.0);
  std::vector<double> diff(cand.size());
  for (size_t i = 0; i < cand.size(); ++i) diff[i] = fa(cand[i]) - fr(cand[i]);

  double theta = cand.back();
  for (size_t i = 0; i < cand.size(); ++i) {
    if (diff[i] > 0.0) continue;
    if (diff[i] == 0.0) {
      size_t j = i;
      while (j + 1 < cand.size() && diff[j + 1] == 0.0) ++j;
      theta = 0.5 * (cand[i] + cand[j]);
    } else if (i == 0) {
      theta = cand[0];
    } else {
      const double frac = diff[i - 1] / (diff[i - 1] - diff[i]);
      theta = cand[i - 1] + frac * (cand[i] - cand[i - 1]);
    }
    break;
  }
  EqualErrorPoint p;
  p.threshold = theta;
  p.far = fa(theta);
  p.frr = fr(theta);
  p.eer = 0.5 * (p.far + p.frr);
  return p;
}

}  // namespace

SpeakerModel::SpeakerModel(std::vector<std::string> labels, MfccConfig mfcc)
    : labels_(std::move(labels)), mfcc_(mfcc) {
  CheckUniqueLabels(labels_);
}

int SpeakerModel::LabelIndex(const std::string &label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("label not enrolled: " + label);
  return static_cast<int>(it - labels_.begin());
}

bool SpeakerModel::HasLabel(const std::string &label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

double SpeakerModel::Score(const AudioClip &clip,
                           const std::string &label) const {
  const int idx = LabelIndex(label);
  return Scores(clip)[idx];
}

std::vector<double> SpeakerModel::Posteriors(const AudioClip &clip) const {
  return Softmax(Scores(clip));
}

std::string SpeakerModel::Predict(const AudioClip &clip) const {
  return labels_[ArgMax(Scores(clip))];
}

// ---------------------------------------------------------------------------

GmmSpeakerModel::GmmSpeakerModel(DiagGmm ubm, std::vector<std::string> labels,
                                 std::vector<DiagGmm> speakers, MfccConfig mfcc)
    : SpeakerModel(std::move(labels), mfcc),
      ubm_(std::move(ubm)),
      speakers_(std::move(speakers)) {
  if (speakers_.size() != labels_.size())
    throw ConfigError("GMM speaker count differs from label count");
  for (const auto &s : speakers_)
    if (s.dim() != ubm_.dim() || s.num_components() != ubm_.num_components())
      throw ConfigError("speaker GMM shape differs from UBM");
}

FrameSet ClipFrames(const AudioClip &clip, const MfccConfig &mfcc) {
  MfccMatrix m = ComputeMfcc(clip, mfcc);
  FrameSet f;
  f.dim = m.cols;
  f.data = std::move(m.data);
  return f;
}

std::vector<double> GmmSpeakerModel::ScoreFrames(const FrameSet &frames) const {
  const double ubm_ll = ubm_.AverageLogLikelihood(frames);
  std::vector<double> scores(speakers_.size());
  for (size_t i = 0; i < speakers_.size(); ++i)
    scores[i] = speakers_[i].AverageLogLikelihood(frames) - ubm_ll;
  return scores;
}

std::vector<double> GmmSpeakerModel::Scores(const AudioClip &clip) const {
  return ScoreFrames(ClipFrames(clip, mfcc_));
}

Json GmmSpeakerModel::ToJson() const {
  Json speakers = Json::array();
  for (const auto &s : speakers_) speakers.push_back(s.ToJson());
  return Json{{"format", kModelFormat},   {"version", kModelFormatVersion},
              {"family", "gmm-ubm"},      {"mfcc", mfcc_},
              {"labels", labels_},        {"ubm", ubm_.ToJson()},
              {"speakers", speakers}};
}

std::unique_ptr<GmmSpeakerModel> GmmSpeakerModel::FromJson(const Json &j) {
  std::vector<DiagGmm> speakers;
  for (const auto &s : j.at("speakers")) speakers.push_back(DiagGmm::FromJson(s));
  return std::make_unique<GmmSpeakerModel>(
      DiagGmm::FromJson(j.at("ubm")),
      j.at("labels").get<std::vector<std::string>>(), std::move(speakers),
      j.at("mfcc").get<MfccConfig>());
}

DiagGmm EnrollSpeaker(const DiagGmm &ubm, std::span<const AudioClip> clips,
                      const MfccConfig &mfcc, double relevance) {
  if (clips.empty()) throw ConfigError("enrollment needs at least one clip");
  FrameSet frames;
  for (const auto &c : clips) {
    FrameSet f = ClipFrames(c, mfcc);
    frames.dim = f.dim;
    frames.data.insert(frames.data.end(), f.data.begin(), f.data.end());
  }
  return MapAdaptMeans(ubm, frames, relevance);
}

std::unique_ptr<GmmSpeakerModel> TrainGmmSpeakerModel(
    std::span<const LabeledClip> data, const GmmTrainConfig &config,
    const MfccConfig &mfcc) {
  const std::vector<std::string> labels = CollectLabels(data);
  if (labels.empty()) throw ConfigError("GMM training set is empty");
  FrameSet pooled;
  for (const auto &d : data) {
    FrameSet f = ClipFrames(d.clip, mfcc);
    pooled.dim = f.dim;
    pooled.data.insert(pooled.data.end(), f.data.begin(), f.data.end());
  }
  DiagGmm ubm =
      TrainUbm(pooled, config.components, config.em_iterations, config.seed).model;
  std::vector<DiagGmm> speakers;
  for (const auto &label : labels) {
    std::vector<AudioClip> clips;
    for (const auto &d : data)
      if (d.label == label) clips.push_back(d.clip);
    speakers.push_back(EnrollSpeaker(ubm, clips, mfcc, config.relevance));
  }
  return std::make_unique<GmmSpeakerModel>(std::move(ubm), labels,
                                           std::move(speakers), mfcc);
}

// ---------------------------------------------------------------------------

NeuralSpeakerModel::NeuralSpeakerModel(Mlp net, std::vector<std::string> labels,
                                       MfccConfig mfcc)
    : SpeakerModel(std::move(labels), mfcc), net_(std::move(net)) {
  if (net_.num_classes() != static_cast<int>(labels_.size()))
    throw ConfigError("network class count differs from label count");
  if (net_.input_dim() != 2 * mfcc_.num_ceps)
    throw ConfigError("network input dim differs from pooled MFCC size");
}

std::vector<double> NeuralSpeakerModel::Features(const AudioClip &clip) const {
  return PoolMeanStd(ComputeMfcc(clip, mfcc_));
}

std::vector<double> NeuralSpeakerModel::Scores(const AudioClip &clip) const {
  return net_.Probabilities(Features(clip));
}

NeuralSpeakerModel::LossGradient NeuralSpeakerModel::FeatureLossGradient(
    std::span<const double> features, int target) const {
  if (target < 0 || target >= net_.num_classes())
    throw ConfigError("target label index out of range");
  std::vector<double> p = Softmax(net_.Logits(features));
  LossGradient out;
  out.loss = -std::log(std::max(p[target], 1e-300));
  p[target] -= 1.0;  // d CE / d logits
  out.grad = net_.InputGradient(features, p);
  return out;
}

NeuralSpeakerModel::LossGradient NeuralSpeakerModel::WaveformLossGradient(
    const AudioClip &clip, int target) const {
  MfccComputer computer(mfcc_, clip.sample_rate);
  MfccMatrix m = computer.Compute(clip);
  std::vector<double> pooled = PoolMeanStd(m);
  LossGradient fg = FeatureLossGradient(pooled, target);
  LossGradient out;
  out.loss = fg.loss;
  out.grad = computer.Backward(clip, PoolMeanStdBackward(m, fg.grad));
  return out;
}

Json NeuralSpeakerModel::ToJson() const {
  return Json{{"format", kModelFormat}, {"version", kModelFormatVersion},
              {"family", "neural"},     {"mfcc", mfcc_},
              {"labels", labels_},      {"net", net_.ToJson()}};
}

std::unique_ptr<NeuralSpeakerModel> NeuralSpeakerModel::FromJson(const Json &j) {
  return std::make_unique<NeuralSpeakerModel>(
      Mlp::FromJson(j.at("net")), j.at("labels").get<std::vector<std::string>>(),
      j.at("mfcc").get<MfccConfig>());
}

MlpConfig ArchPreset(const std::string &name) {
  MlpConfig c;
  if (name == "default") return c;
  if (name == "cnn-a") { c.hidden = {64, 32}; c.seed = 11; return c; }
  if (name == "cnn-b") { c.hidden = {96, 48}; c.seed = 12; return c; }
  if (name == "cnn-c") { c.hidden = {48, 24}; c.seed = 13; return c; }
  if (name == "tdnn-a") { c.hidden = {128, 32}; c.seed = 21; return c; }
  if (name == "tdnn-b") { c.hidden = {64, 64}; c.seed = 22; return c; }
  if (name == "tdnn-c") { c.hidden = {32, 32}; c.seed = 23; return c; }
  throw ConfigError("unknown architecture preset: " + name);
}

std::vector<std::string> ArchPresetNames() {
  return {"cnn-a", "cnn-b", "cnn-c", "tdnn-a", "tdnn-b", "tdnn-c"};
}

std::unique_ptr<NeuralSpeakerModel> TrainNeuralSpeakerModel(
    std::span<const LabeledClip> data, const MlpConfig &config,
    const MfccConfig &mfcc, std::vector<double> *epoch_losses) {
  const std::vector<std::string> labels = CollectLabels(data);
  if (labels.size() < 2) throw ConfigError("neural training needs >= 2 speakers");
  std::vector<std::vector<double>> inputs;
  std::vector<int> targets;
  std::vector<int> counts(labels.size(), 0);
  for (const auto &d : data) {
    const int idx = static_cast<int>(
        std::find(labels.begin(), labels.end(), d.label) - labels.begin());
    ++counts[idx];
    inputs.push_back(PoolMeanStd(ComputeMfcc(d.clip, mfcc)));
    targets.push_back(idx);
  }
  for (size_t i = 0; i < labels.size(); ++i)
    if (counts[i] < 10)
      throw ConfigError("neural training needs >= 10 clips for " + labels[i]);
  Mlp net = Mlp::Train(inputs, targets, static_cast<int>(labels.size()), config,
                       epoch_losses);
  return std::make_unique<NeuralSpeakerModel>(std::move(net), labels, mfcc);
}

void SaveSpeakerModel(const std::filesystem::path &path,
                      const SpeakerModel &model) {
  SaveJson(path, model.ToJson());
}

std::unique_ptr<SpeakerModel> SpeakerModelFromJson(const Json &j) {
  try {
    if (j.value("format", "") != kModelFormat)
      throw ConfigError("not a speaker model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ConfigError("unsupported speaker model version");
    const std::string family = j.at("family").get<std::string>();
    if (family == "gmm-ubm") return GmmSpeakerModel::FromJson(j);
    if (family == "neural") return NeuralSpeakerModel::FromJson(j);
    throw ConfigError("unknown model family: " + family);
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("malformed speaker model: ") + e.what());
  }
}

std::unique_ptr<SpeakerModel> LoadSpeakerModel(const std::filesystem::path &path) {
  return SpeakerModelFromJson(LoadJson(path));
}

// ---------------------------------------------------------------------------

Task ParseTask(const std::string &name) {
  if (name == "csi" || name == "CSI") return Task::kCsi;
  if (name == "osi" || name == "OSI") return Task::kOsi;
  if (name == "sv" || name == "SV") return Task::kSv;
  throw ConfigError("unknown task: " + name);
}

std::string TaskName(Task task) {
  switch (task) {
    case Task::kCsi: return "csi";
    case Task::kOsi: return "osi";
    case Task::kSv: return "sv";
  }
  return "?";
}

int ArgMax(std::span<const double> v) {
  if (v.empty()) throw ConfigError("argmax of empty scores");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Decision Decide(std::span<const double> scores,
                const std::vector<std::string> &labels, Task task,
                const Thresholds &thresholds, int claimed) {
  if (scores.size() != labels.size())
    throw ConfigError("score count differs from label count");
  Decision d;
  d.task = task;
  d.scores.assign(scores.begin(), scores.end());
  const int best = ArgMax(scores);
  switch (task) {
    case Task::kCsi:
      d.label = labels[best];
      d.accepted = true;
      break;
    case Task::kOsi:
      d.accepted = scores[best] >= thresholds.osi;
      if (d.accepted) d.label = labels[best];
      break;
    case Task::kSv:
      if (claimed < 0 || claimed >= static_cast<int>(labels.size()))
        throw ConfigError("claimed speaker index out of range");
      d.accepted = scores[claimed] >= thresholds.sv;
      if (d.accepted) d.label = labels[claimed];
      break;
  }
  return d;
}

Decision Decide(const SpeakerModel &model, const AudioClip &clip, Task task,
                const Thresholds &thresholds, const std::string &claimed) {
  const int idx = claimed.empty() ? 0 : model.LabelIndex(claimed);
  return Decide(model.Scores(clip), model.labels(), task, thresholds, idx);
}

double FalseAcceptanceRate(std::span<const double> impostor, double threshold) {
  if (impostor.empty()) throw ConfigError("no impostor scores");
  size_t n = 0;
  for (double s : impostor) n += s >= threshold;
  return static_cast<double>(n) / impostor.size();
}

double FalseRejectionRate(std::span<const double> genuine, double threshold) {
  if (genuine.empty()) throw ConfigError("no genuine scores");
  size_t n = 0;
  for (double s : genuine) n += s < threshold;
  return static_cast<double>(n) / genuine.size();
}

EqualErrorPoint FindEqualErrorPoint(std::span<const double> genuine,
                                    std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw ConfigError("equal error point needs both score classes");
  std::vector<double> all(genuine.begin(), genuine.end());
  all.insert(all.end(), impostor.begin(), impostor.end());
  return Crossing([&](double t) { return FalseAcceptanceRate(impostor, t); },
                  [&](double t) { return FalseRejectionRate(genuine, t); }, all);
}

CalibrationReport CalibrateThresholds(const SpeakerModel &model,
                                      std::span<const LabeledClip> dev) {
  std::vector<double> sv_genuine, sv_impostor, osi_impostor_max;
  struct Enrolled {
    double max;
    bool correct;
  };
  std::vector<Enrolled> osi_enrolled;
  for (const auto &d : dev) {
    const std::vector<double> s = model.Scores(d.clip);
    const int best = ArgMax(s);
    if (model.HasLabel(d.label)) {
      const int idx = model.LabelIndex(d.label);
      sv_genuine.push_back(s[idx]);
      osi_enrolled.push_back({s[best], best == idx});
    } else {
      sv_impostor.insert(sv_impostor.end(), s.begin(), s.end());
      osi_impostor_max.push_back(s[best]);
    }
  }
  if (sv_genuine.empty() || sv_impostor.empty())
    throw ConfigError("calibration set needs enrolled and impostor clips");

  CalibrationReport report;
  EqualErrorPoint sv = FindEqualErrorPoint(sv_genuine, sv_impostor);
  report.thresholds.sv = sv.threshold;
  report.far = sv.far;
  report.frr = sv.frr;

  std::vector<double> osi_scores = osi_impostor_max;
  for (const auto &e : osi_enrolled) osi_scores.push_back(e.max);
  auto osi_fa = [&](double t) { return FalseAcceptanceRate(osi_impostor_max, t); };
  auto osi_fr = [&](double t) {
    size_t n = 0;
    for (const auto &e : osi_enrolled) n += (!e.correct || e.max < t);
    return static_cast<double>(n) / osi_enrolled.size();
  };
  EqualErrorPoint osi = Crossing(osi_fa, osi_fr, osi_scores);
  report.thresholds.osi = osi.threshold;
  report.osier = osi.eer;
  return report;
}

}  // namespace parrot
