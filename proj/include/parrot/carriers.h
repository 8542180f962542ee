// parrot/carriers.h

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

#ifndef PARROT_CARRIERS_H_
#define PARROT_CARRIERS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "parrot/audio.h"

namespace parrot {

enum class CarrierKind { kNoise, kFeatureTwisted, kEnvironmental, kPitchTwisted };

std::string CarrierKindName(CarrierKind kind);
CarrierKind ParseCarrierKind(const std::string &name);

/// A perturbation waveform.  Environmental and pitch-twisted carriers have
/// unit mean power; noise carriers unit variance; feature-twisted carriers
/// are a difference signal and keep whatever energy the twist produced.
struct Carrier {
  CarrierKind kind = CarrierKind::kNoise;
  std::string id;
  std::string category;
  AudioClip waveform;
  double semitones = 0.0;
  double rate = 1.0;
};

/// Checks finiteness, nonzero energy and the twist bounds (ConfigError).
void ValidateCarrier(const Carrier &c);

/// Scales to unit mean power.  Throws ConfigError on a silent clip.
void NormalizeUnitPower(AudioClip *clip);

/// N(0, 1) samples from a seeded Mersenne twister.
Carrier MakeNoiseCarrier(size_t length, uint64_t seed,
                         int sample_rate = kDefaultSampleRate);

inline constexpr int kMaxTwistSemitones = 25;
inline constexpr double kRateStep = 0.2;

/// Integer semitones in [-25, 25] crossed with rates 0.2, 0.4, ..., 2.0.
std::vector<std::pair<int, double>> FeatureTwistGrid();
bool OnTwistGrid(double semitones, double rate);

/// (shift_pitch then time_stretch of base) - base, the twisted signal padded
/// or truncated to the base length.  Throws ConfigError off the grid.
Carrier MakeFeatureTwisted(const AudioClip &base, double semitones, double rate);

inline const std::vector<std::string> &CarrierCategories() {
  static const std::vector<std::string> c = {"natural", "things", "human",
                                             "animal", "music"};
  return c;
}

struct CarrierLibrary {
  std::vector<Carrier> carriers;

  size_t size() const { return carriers.size(); }
  /// Throws ConfigError when the id is absent.
  const Carrier &Find(const std::string &id) const;
};

/// Manifest: {"sounds": [{"id": s, "path": p, "category": c}, ...]}.
/// Entries keep manifest order; clips are resampled and normalized to unit
/// mean power.  Duplicate ids and unknown categories are ConfigErrors,
/// missing or unreadable audio DataErrors.
CarrierLibrary LoadEnvironmentalLibrary(const std::filesystem::path &manifest,
                                        int sample_rate = kDefaultSampleRate);
/// Writes dir/<id>.wav plus dir/manifest.json.
void SaveEnvironmentalLibrary(const std::filesystem::path &dir,
                              const CarrierLibrary &library);

/// Deterministic synthetic environmental sounds, categories in rotation
/// (natural, things, human, animal, music); recipes repeat with new
/// parameters past the first 30.
CarrierLibrary SynthesizeEnvironmentalLibrary(int count, uint64_t seed,
                                              double seconds = 2.0,
                                              int sample_rate = kDefaultSampleRate);

/// Pitch-shifted copy renormalized to unit mean power, kind kPitchTwisted.
/// |semitones| <= 25.
Carrier PitchTwistCarrier(const Carrier &c, double semitones);

}  // namespace parrot

#endif  // PARROT_CARRIERS_H_
