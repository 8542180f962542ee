// src/parrot_gen.cc

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

#include "parrot/parrot_gen.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "parrot/dsp.h"
#include "parrot/fft.h"
#include "parrot/io.h"

namespace parrot {

namespace {

constexpr double kMaxEnvelopeCutDb = 24.0;
constexpr double kMaxEnvelopeBoostDb = 12.0;
// Bands this far below the source envelope peak carry no speech to reshape.
constexpr double kEnvelopeFloorDb = 50.0;
constexpr double kEnvelopeDeadbandDb = 0.5;
constexpr int kEnvelopeQuefrencies = 20;

// Mean pitch of a clip; 0 when unvoiced or too short to analyse.
double MeanF0(const AudioClip &clip) {
  try {
    return EstimatePitch(clip).MeanVoicedF0();
  } catch (const ConfigError &) {
    return 0.0;
  }
}

std::vector<std::string> SplitWords(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::string PoolRoleName(PoolRole role) {
  switch (role) {
    case PoolRole::kSource: return "source-pool";
    case PoolRole::kTarget: return "target";
    case PoolRole::kOther: return "other";
  }
  return "?";
}

PoolRole ParsePoolRole(const std::string &name) {
  if (name == "source-pool" || name == "source") return PoolRole::kSource;
  if (name == "target") return PoolRole::kTarget;
  if (name == "other") return PoolRole::kOther;
  throw ConfigError("unknown pool role: " + name);
}

std::vector<std::string> SpeakerPool::IdsWithRole(PoolRole role) const {
  std::vector<std::string> ids;
  for (const auto &[id, s] : speakers)
    if (s.role == role) ids.push_back(id);
  return ids;
}

void SpeakerPool::Validate() const {
  for (const auto &[id, s] : speakers)
    if (s.clips.empty()) throw ConfigError("pool speaker without clips: " + id);
}

SpeakerPool PoolFromCorpus(const DeskCorpus &corpus) {
  SpeakerPool pool;
  for (const auto &[id, s] : corpus.speakers) {
    PoolSpeaker ps;
    ps.role = s.role == SpeakerRole::kSource ? PoolRole::kSource
              : id == corpus.target_id       ? PoolRole::kTarget
                                             : PoolRole::kOther;
    for (const auto &u : s.utterances) {
      ps.clips.push_back(u.clip);
      ps.transcripts.push_back(u.phonemes);
    }
    if (!ps.clips.empty()) pool.speakers.emplace(id, std::move(ps));
  }
  return pool;
}

SpeakerPool LoadPoolManifest(const std::filesystem::path &manifest, int sample_rate) {
  const Json j = LoadJson(manifest);
  const auto base = manifest.parent_path();
  SpeakerPool pool;
  try {
    for (const auto &[id, entry] : j.at("speakers").items()) {
      PoolSpeaker ps;
      ps.role = ParsePoolRole(entry.value("role", "source-pool"));
      for (const auto &p : entry.at("clips")) {
        AudioClip c = LoadWav(ResolvePath(base, p.get<std::string>()));
        ps.clips.push_back(c.sample_rate == sample_rate ? c : Resample(c, sample_rate));
      }
      if (entry.contains("transcript")) {
        std::istringstream in(ReadFile(ResolvePath(base, entry["transcript"].get<std::string>())));
        for (std::string line; std::getline(in, line);) ps.transcripts.push_back(SplitWords(line));
        ps.transcripts.resize(ps.clips.size());
      }
      pool.speakers.emplace(id, std::move(ps));
    }
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return pool;
}

void SavePoolManifest(const std::filesystem::path &dir, const SpeakerPool &pool) {
  Json speakers = Json::object();
  for (const auto &[id, s] : pool.speakers) {
    Json clips = Json::array();
    for (size_t i = 0; i < s.clips.size(); ++i) {
      const std::string rel = id + "/" + std::to_string(i) + ".wav";
      WriteWav(dir / rel, s.clips[i]);
      clips.push_back(rel);
    }
    Json entry = {{"role", PoolRoleName(s.role)}, {"clips", clips}};
    if (!s.transcripts.empty()) {
      std::string text;
      for (const auto &t : s.transcripts) {
        for (size_t k = 0; k < t.size(); ++k) text += (k ? " " : "") + t[k];
        text += "\n";
      }
      WriteFileAtomic(dir / (id + "/transcript.txt"), text);
      entry["transcript"] = id + "/transcript.txt";
    }
    speakers[id] = entry;
  }
  SaveJson(dir / "manifest.json", Json{{"speakers", speakers}});
}

std::vector<RankedSpeaker> RankSourceSpeakers(const AudioClip &target,
                                              const SpeakerPool &pool) {
  const PitchTrack target_track = EstimatePitch(target);
  if (target_track.NumVoiced() == 0) throw ConfigError("target clip is unvoiced");
  std::vector<RankedSpeaker> ranked;
  for (const auto &[id, s] : pool.speakers) {
    if (s.role != PoolRole::kSource) continue;
    double sum = 0.0;
    int count = 0;
    for (const auto &c : s.clips) {
      PitchTrack t;
      try {
        t = EstimatePitch(c);
      } catch (const ConfigError &) {
        continue;
      }
      if (t.NumVoiced() == 0) continue;
      sum += PitchDistance(t, target_track);
      ++count;
    }
    if (count > 0) ranked.push_back({id, sum / count});
  }
  if (ranked.empty()) throw ConfigError("no voiced source speaker in the pool");
  std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return ranked;
}

std::string SelectSourceSpeaker(const AudioClip &target, const SpeakerPool &pool) {
  return RankSourceSpeakers(target, pool).front().id;
}

std::vector<double> SpectralEnvelope(const AudioClip &clip, int fft_size,
                                     int num_quefrencies) {
  const int bins = fft_size / 2 + 1;
  const int hop = fft_size / 2;
  if (clip.size() < static_cast<size_t>(fft_size))
    throw ConfigError("clip shorter than one envelope frame");
  std::vector<double> window(fft_size);
  for (int i = 0; i < fft_size; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / fft_size);
  RealFft &fft = RealFft::ForSize(fft_size);
  std::vector<double> frame(fft_size);
  std::vector<std::complex<double>> spec;
  std::vector<std::vector<double>> powers;
  std::vector<double> energies;
  for (size_t start = 0; start + fft_size <= clip.size(); start += hop) {
    double e = 0.0;
    for (int i = 0; i < fft_size; ++i) {
      frame[i] = clip.samples[start + i] * window[i];
      e += frame[i] * frame[i];
    }
    fft.Forward(frame, &spec);
    std::vector<double> p(bins);
    for (int k = 0; k < bins; ++k) p[k] = std::norm(spec[k]);
    powers.push_back(std::move(p));
    energies.push_back(e);
  }
  const double emax = *std::max_element(energies.begin(), energies.end());
  std::vector<double> logspec(bins, 0.0);
  int used = 0;
  for (size_t f = 0; f < powers.size(); ++f) {
    if (energies[f] < 0.01 * emax || energies[f] <= 0.0) continue;
    for (int k = 0; k < bins; ++k) logspec[k] += std::log(powers[f][k] + 1e-12);
    ++used;
  }
  if (used == 0) throw ConfigError("clip is silent");
  for (double &v : logspec) v /= used;

  // Even real cepstrum of the log spectrum, liftered to quefrencies 1..Q-1.
  std::vector<double> env(bins, 0.0);
  for (int q = 1; q < num_quefrencies; ++q) {
    double c = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double wk = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
      c += wk * logspec[k] * std::cos(2.0 * std::numbers::pi * k * q / fft_size);
    }
    c /= fft_size;
    for (int k = 0; k < bins; ++k)
      env[k] += 2.0 * c * std::cos(2.0 * std::numbers::pi * k * q / fft_size);
  }
  return env;
}

AudioClip ConvertOnce(const AudioClip &source, const AudioClip &target) {
  if (source.sample_rate != target.sample_rate)
    throw ConfigError("source and target sample rates differ");
  const double fs = EstimatePitch(source).MeanVoicedF0();
  const double ft = EstimatePitch(target).MeanVoicedF0();
  if (fs <= 0.0) throw ConfigError("source clip is unvoiced");
  if (ft <= 0.0) throw ConfigError("target clip is unvoiced");
  const double shift = Semitones(fs, ft);
  AudioClip shifted =
      std::abs(shift) < kPitchDeadbandSemitones ? source : ShiftPitch(source, shift);

  constexpr int kFft = 512;
  const std::vector<double> es = SpectralEnvelope(shifted, kFft, kEnvelopeQuefrencies);
  const std::vector<double> et = SpectralEnvelope(target, kFft, kEnvelopeQuefrencies);
  std::vector<double> gain(es.size());
  const double to_log = std::log(10.0) / 10.0;
  const double src_peak = *std::max_element(es.begin(), es.end());
  double largest = 0.0;
  for (size_t k = 0; k < gain.size(); ++k) {
    double d = std::clamp(et[k] - es[k], -kMaxEnvelopeCutDb * to_log,
                          kMaxEnvelopeBoostDb * to_log);
    if (es[k] < src_peak - kEnvelopeFloorDb * to_log) d = std::min(d, 0.0);
    gain[k] = std::exp(0.5 * d);
    largest = std::max(largest, std::abs(d));
  }
  if (largest < kEnvelopeDeadbandDb * to_log) return shifted;
  shifted.samples = StftFilter(shifted.samples, gain, kFft);
  return shifted;
}

ParrotSet GenerateParrotSet(const std::string &target_label,
                            const AudioClip &target_clip, const SpeakerPool &pool,
                            int iterations, int n_samples) {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  ParrotSet set;
  set.target = target_label;
  set.iterations = iterations;
  set.provenance = Provenance::kStandIn;
  const double target_f0 = MeanF0(target_clip);
  if (target_f0 <= 0.0) throw ConfigError("target clip is unvoiced");
  for (const RankedSpeaker &r : RankSourceSpeakers(target_clip, pool)) {
    for (const AudioClip &c : pool.speakers.at(r.id).clips) {
      if (static_cast<int>(set.clips.size()) == n_samples) break;
      if (MeanF0(c) <= 0.0) continue;
      AudioClip out = c;
      double dist = std::numeric_limits<double>::infinity();
      for (int it = 0; it < iterations; ++it) {
        AudioClip next = ConvertOnce(out, target_clip);
        const double f0 = MeanF0(next);
        const double d = f0 > 0.0 ? std::abs(Semitones(f0, target_f0))
                                 : std::numeric_limits<double>::infinity();
        // Refinement passes are kept only if they do not move f0 away from
        // the target.  ConvertOnce is deterministic, so a rejected pass ends
        // the loop.
        if (it > 0 && !(d <= dist)) break;
        out = std::move(next);
        dist = d;
      }
      set.clips.push_back(std::move(out));
      set.source_ids.push_back(r.id);
    }
    if (static_cast<int>(set.clips.size()) == n_samples) break;
  }
  if (static_cast<int>(set.clips.size()) < n_samples)
    throw ConfigError("source pool exhausted before n_samples utterances");
  return set;
}

ParrotSet IngestExternalParrots(const std::filesystem::path &manifest,
                                const std::string &target_label, int sample_rate) {
  SpeakerPool pool = LoadPoolManifest(manifest, sample_rate);
  auto it = pool.speakers.find(target_label);
  if (it == pool.speakers.end() || it->second.clips.empty())
    throw DataError("manifest has no parrot clips for " + target_label);
  ParrotSet set;
  set.target = target_label;
  set.clips = std::move(it->second.clips);
  set.provenance = Provenance::kExternal;
  set.source_ids.assign(set.clips.size(), "external");
  return set;
}

double FalsePositiveRate(long fp, long tn) {
  if (fp < 0 || tn < 0 || fp + tn == 0) throw ConfigError("FPR needs FP + TN > 0");
  return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double EvaluateFpr(const SpeakerModel &model, const ParrotSet &parrots,
                   const std::string &target) {
  if (parrots.clips.empty()) throw ConfigError("parrot set is empty");
  const int idx = model.LabelIndex(target);
  long fp = 0, tn = 0;
  for (const auto &c : parrots.clips) {
    if (ArgMax(model.Scores(c)) == idx)
      ++fp;
    else
      ++tn;
  }
  return FalsePositiveRate(fp, tn);
}

double F1Score(double recall, double precision) {
  return recall + precision > 0.0 ? 2.0 * recall * precision / (recall + precision)
                                  : 0.0;
}

BinaryMetrics TargetVsRest(const SpeakerModel &model,
                           std::span<const LabeledClip> test,
                           const std::string &target) {
  const int idx = model.LabelIndex(target);
  long tp = 0, fp = 0, fn = 0;
  for (const auto &d : test) {
    const bool predicted = ArgMax(model.Scores(d.clip)) == idx;
    const bool actual = d.label == target;
    tp += predicted && actual;
    fp += predicted && !actual;
    fn += !predicted && actual;
  }
  if (tp + fn == 0) throw ConfigError("test set has no clip of " + target);
  BinaryMetrics m;
  m.recall = static_cast<double>(tp) / (tp + fn);
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.f1 = F1Score(m.recall, m.precision);
  return m;
}

PtGtComparison ComparePtGt(const SpeakerModel &pt_model,
                           const SpeakerModel &gt_model,
                           std::span<const LabeledClip> test,
                           const std::string &target) {
  return {TargetVsRest(pt_model, test, target), TargetVsRest(gt_model, test, target)};
}

}  // namespace parrot
