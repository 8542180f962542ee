// parrot/corpus.h

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

// Synthetic "desk corpus": formant-synthesized speakers so that every
// experiment in the repository runs without external datasets.

#ifndef PARROT_CORPUS_H_
#define PARROT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/common.h"
#include "parrot/io.h"

namespace parrot {

/// Glottal-source / vocal-tract parameters of one synthetic speaker.
struct SpeakerVoice {
  std::string id;
  std::string gender;          // "m" or "f"
  double f0_hz = 120.0;        // mean fundamental
  double formant_scale = 1.0;  // vocal-tract length factor on F1-F3
  double f4_hz = 3500.0;
  double tilt = 0.95;          // one-pole source lowpass coefficient
  double bandwidth_scale = 1.0;
  double breathiness = 0.05;   // aspiration noise relative to pulses
};

struct Utterance {
  AudioClip clip;
  std::vector<std::string> phonemes;
};

/// Phoneme alphabet used in transcripts (ARPAbet subset).
const std::vector<std::string> &PhonemeAlphabet();

/// Random voice for the given gender ("m"/"f").
SpeakerVoice RandomVoice(const std::string &id, const std::string &gender,
                         Rng &rng);

/// Synthesizes `seconds` of babble.  With `phoneme_pool` non-empty only
/// those phonemes are drawn.  Output RMS is 0.1 times a per-utterance gain
/// within +/- 2 dB.
Utterance SynthesizeUtterance(const SpeakerVoice &voice, double seconds,
                              Rng &rng, int sample_rate = kDefaultSampleRate,
                              const std::vector<std::string> &phoneme_pool = {});

enum class SpeakerRole { kEnrolled, kSource, kOther, kImpostor };
std::string RoleName(SpeakerRole role);
SpeakerRole ParseRole(const std::string &name);

struct CorpusSpeaker {
  SpeakerVoice voice;
  SpeakerRole role = SpeakerRole::kEnrolled;
  std::vector<Utterance> utterances;
};

struct DeskCorpusConfig {
  int enrolled_speakers = 6;
  int train_clips = 90;
  int test_clips = 30;
  int source_speakers = 12;
  int source_clips = 12;
  int other_speakers = 8;
  int other_clips = 30;
  int impostor_speakers = 4;
  int impostor_clips = 10;
  double clip_seconds = 1.0;
  double knowledge_seconds = 16.0;
  int sample_rate = kDefaultSampleRate;
};

/// Speakers keyed by id ("enr00", "src03", ...).  The first enrolled speaker
/// is the attack target; its knowledge clip is separate from its utterances.
struct DeskCorpus {
  DeskCorpusConfig config;
  std::map<std::string, CorpusSpeaker> speakers;
  std::string target_id;
  Utterance knowledge;

  std::vector<std::string> IdsWithRole(SpeakerRole role) const;
};

DeskCorpus BuildDeskCorpus(const DeskCorpusConfig &config, uint64_t seed);

void to_json(Json &j, const DeskCorpusConfig &c);
void from_json(const Json &j, DeskCorpusConfig &c);

/// Writes <dir>/<speaker>/<nnn>.wav, <dir>/knowledge.wav and
/// <dir>/manifest.json holding roles, genders and transcripts.
void SaveDeskCorpus(const std::filesystem::path &dir, const DeskCorpus &corpus);
/// Reads a manifest written by SaveDeskCorpus; clips are resampled to
/// `sample_rate`.  Voices keep only their id and gender.  Missing audio is
/// a DataError, a malformed manifest a ConfigError.
DeskCorpus LoadDeskCorpus(const std::filesystem::path &manifest,
                          int sample_rate = kDefaultSampleRate);

}  // namespace parrot

#endif  // PARROT_CORPUS_H_
