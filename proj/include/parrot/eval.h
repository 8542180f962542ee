// parrot/eval.h

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

// Transfer and success metrics plus the tabular report format shared by
// every experiment.

#ifndef PARROT_EVAL_H_
#define PARROT_EVAL_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/carriers.h"
#include "parrot/io.h"
#include "parrot/parrot_gen.h"
#include "parrot/speaker_model.h"

namespace parrot {

struct MatchCount {
  long matched = 0;
  long total = 0;
  double rate() const { return static_cast<double>(matched) / total; }
};

/// An AE is matched when the surrogate and target predictions agree on it
/// and differ from the surrogate's prediction on the clean clip.  Labels
/// are compared by name.  Throws ConfigError on an empty or ragged input.
MatchCount CountMatches(std::span<const std::string> surrogate_adv,
                        std::span<const std::string> target_adv,
                        std::span<const std::string> surrogate_clean);

double MatchRate(const SpeakerModel &surrogate, const SpeakerModel &target,
                 std::span<const AudioClip> aes, std::span<const AudioClip> originals);

/// m / (8 - srs).  Throws ConfigError unless m is in [0, 1] and srs in
/// [1, 7].
double Tpr(double match_rate, double srs);

struct TprReport {
  CarrierKind carrier = CarrierKind::kNoise;
  double match_rate = 0.0;
  double mean_srs = 0.0;
  double tpr = 0.0;
};

TprReport MakeTprReport(CarrierKind carrier, double match_rate, double mean_srs);

/// Match rates of one carrier type, surrogates by row and targets by
/// column.
class TransferMatrix {
 public:
  TransferMatrix(CarrierKind carrier, std::vector<std::string> surrogates,
                 std::vector<std::string> targets);

  CarrierKind carrier() const { return carrier_; }
  const std::vector<std::string> &surrogates() const { return surrogates_; }
  const std::vector<std::string> &targets() const { return targets_; }

  /// Throws ConfigError on an unknown id or a rate outside [0, 1].
  void Set(const std::string &surrogate, const std::string &target, double rate);
  double At(const std::string &surrogate, const std::string &target) const;

  /// Mean over surrogates for each target, then over targets.
  double MeanRate() const;
  std::vector<double> TargetMeans() const;

  Json ToJson() const;

 private:
  size_t Row(const std::string &id) const;
  size_t Col(const std::string &id) const;

  CarrierKind carrier_;
  std::vector<std::string> surrogates_;
  std::vector<std::string> targets_;
  std::vector<double> rates_;
};

/// Fraction of AEs the model decides for `target`: CSI argmax, OSI argmax
/// at or above the open-set threshold, SV accepted as the target.  Throws
/// ConfigError on an empty set.
double AttackSuccessRate(const SpeakerModel &model, std::span<const AudioClip> aes,
                         const std::string &target, Task task,
                         const Thresholds &thresholds);
/// Same count from decisions already made.
double AttackSuccessRate(std::span<const Decision> decisions, const std::string &target);

struct FprCount {
  long fp = 0;  // parrot clips identified as the target
  long tn = 0;  // parrot clips identified as anyone else
};

/// CSI counts over a parrot set.  Throws ConfigError on an unknown target.
FprCount CountFpr(const SpeakerModel &model, const ParrotSet &parrots,
                  const std::string &target);
/// FPR of the summed counts, e.g. over targets or parrot sets.
double PooledFpr(std::span<const FprCount> counts);

/// Number of distinct tokens.  In strict mode a token outside `alphabet`
/// throws ConfigError; otherwise unknown tokens are counted like any other.
int PhonemeDiversity(std::span<const std::string> transcript,
                     std::span<const std::string> alphabet, bool strict = true);

struct DiversitySplit {
  std::vector<int> low;   // segment indices, bottom half by diversity
  std::vector<int> high;  // top half
  double low_mean = 0.0;
  double high_mean = 0.0;
};

/// Ranks segments by diversity (ties by index) and splits them in half;
/// an odd middle element goes to the low group.  Throws ConfigError for
/// fewer than two segments.
DiversitySplit SplitByDiversity(std::span<const int> diversity);

// ---------------------------------------------------------------------------
// Reports.

inline constexpr int kReportSchemaVersion = 1;

/// Rows of string cells under named columns.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws InvariantError when the row width differs from the columns.
  void AddRow(std::vector<std::string> row);
  std::string ToTsv() const;
  Json ToJson() const;
  static Table FromJson(const Json &j);
};

/// Fixed-precision rendering used in every table cell.
std::string FormatNumber(double v);

struct ReportHeader {
  std::string kind;
  std::string config_hash;
  uint64_t seed = 0;
  std::string srs_provenance;
  Json metadata = Json::object();
};

Json MakeReport(const ReportHeader &header, const Table &table);
/// Writes <stem>.json and <stem>.tsv under `dir`.  The TSV starts with
/// '#' comment lines carrying the header fields.
void WriteReport(const std::filesystem::path &dir, const std::string &stem,
                 const ReportHeader &header, const Table &table);
/// Throws DataError for a file that is missing or not a report of the
/// current schema.
Json LoadReport(const std::filesystem::path &path);

}  // namespace parrot

#endif  // PARROT_EVAL_H_
