// src/eval.cc

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

#include "parrot/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "parrot/common.h"

namespace parrot {

MatchCount CountMatches(std::span<const std::string> surrogate_adv,
                        std::span<const std::string> target_adv,
                        std::span<const std::string> surrogate_clean) {
  if (surrogate_adv.empty()) throw ConfigError("match rate needs at least one AE");
  if (target_adv.size() != surrogate_adv.size() ||
      surrogate_clean.size() != surrogate_adv.size())
    throw ConfigError("match rate inputs differ in length");
  MatchCount c;
  c.total = static_cast<long>(surrogate_adv.size());
  for (size_t i = 0; i < surrogate_adv.size(); ++i)
    c.matched += surrogate_adv[i] == target_adv[i] && surrogate_adv[i] != surrogate_clean[i];
  return c;
}

double MatchRate(const SpeakerModel &surrogate, const SpeakerModel &target,
                 std::span<const AudioClip> aes, std::span<const AudioClip> originals) {
  if (aes.size() != originals.size())
    throw ConfigError("every AE needs its original clip");
  std::vector<std::string> sa, ta, sc;
  for (size_t i = 0; i < aes.size(); ++i) {
    sa.push_back(surrogate.Predict(aes[i]));
    ta.push_back(target.Predict(aes[i]));
    sc.push_back(surrogate.Predict(originals[i]));
  }
  return CountMatches(sa, ta, sc).rate();
}

double Tpr(double match_rate, double srs) {
  if (!(match_rate >= 0.0 && match_rate <= 1.0))
    throw ConfigError("match rate outside [0, 1]");
  if (!(srs >= 1.0 && srs <= 7.0)) throw ConfigError("SRS outside [1, 7]");
  return match_rate / (8.0 - srs);
}

TprReport MakeTprReport(CarrierKind carrier, double match_rate, double mean_srs) {
  TprReport r;
  r.carrier = carrier;
  r.match_rate = match_rate;
  r.mean_srs = mean_srs;
  r.tpr = Tpr(match_rate, mean_srs);
  return r;
}

TransferMatrix::TransferMatrix(CarrierKind carrier, std::vector<std::string> surrogates,
                               std::vector<std::string> targets)
    : carrier_(carrier),
      surrogates_(std::move(surrogates)),
      targets_(std::move(targets)),
      rates_(surrogates_.size() * targets_.size(), 0.0) {
  if (surrogates_.empty() || targets_.empty())
    throw ConfigError("transfer matrix needs surrogates and targets");
}

size_t TransferMatrix::Row(const std::string &id) const {
  auto it = std::find(surrogates_.begin(), surrogates_.end(), id);
  if (it == surrogates_.end()) throw ConfigError("unknown surrogate: " + id);
  return it - surrogates_.begin();
}

size_t TransferMatrix::Col(const std::string &id) const {
  auto it = std::find(targets_.begin(), targets_.end(), id);
  if (it == targets_.end()) throw ConfigError("unknown target model: " + id);
  return it - targets_.begin();
}

void TransferMatrix::Set(const std::string &surrogate, const std::string &target,
                         double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("match rate outside [0, 1]");
  rates_[Row(surrogate) * targets_.size() + Col(target)] = rate;
}

double TransferMatrix::At(const std::string &surrogate, const std::string &target) const {
  return rates_[Row(surrogate) * targets_.size() + Col(target)];
}

std::vector<double> TransferMatrix::TargetMeans() const {
  std::vector<double> means(targets_.size(), 0.0);
  for (size_t t = 0; t < targets_.size(); ++t) {
    for (size_t s = 0; s < surrogates_.size(); ++s) means[t] += rates_[s * targets_.size() + t];
    means[t] /= static_cast<double>(surrogates_.size());
  }
  return means;
}

double TransferMatrix::MeanRate() const {
  const std::vector<double> m = TargetMeans();
  return std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
}

Json TransferMatrix::ToJson() const {
  Json rows = Json::array();
  for (size_t s = 0; s < surrogates_.size(); ++s) {
    std::vector<double> r(rates_.begin() + s * targets_.size(),
                          rates_.begin() + (s + 1) * targets_.size());
    rows.push_back(r);
  }
  return Json{{"carrier", CarrierKindName(carrier_)},
              {"surrogates", surrogates_},
              {"targets", targets_},
              {"match_rates", rows},
              {"target_means", TargetMeans()},
              {"mean", MeanRate()}};
}

double AttackSuccessRate(std::span<const Decision> decisions, const std::string &target) {
  if (decisions.empty()) throw ConfigError("ASR needs at least one AE");
  long hits = 0;
  for (const Decision &d : decisions) hits += d.accepted && d.label && *d.label == target;
  return static_cast<double>(hits) / static_cast<double>(decisions.size());
}

double AttackSuccessRate(const SpeakerModel &model, std::span<const AudioClip> aes,
                         const std::string &target, Task task,
                         const Thresholds &thresholds) {
  if (aes.empty()) throw ConfigError("ASR needs at least one AE");
  std::vector<Decision> d;
  d.reserve(aes.size());
  for (const AudioClip &ae : aes) d.push_back(Decide(model, ae, task, thresholds, target));
  return AttackSuccessRate(d, target);
}

FprCount CountFpr(const SpeakerModel &model, const ParrotSet &parrots,
                  const std::string &target) {
  const int idx = model.LabelIndex(target);
  FprCount c;
  for (const AudioClip &clip : parrots.clips) (ArgMax(model.Scores(clip)) == idx ? c.fp : c.tn)++;
  return c;
}

double PooledFpr(std::span<const FprCount> counts) {
  long fp = 0, tn = 0;
  for (const FprCount &c : counts) {
    fp += c.fp;
    tn += c.tn;
  }
  return FalsePositiveRate(fp, tn);
}

int PhonemeDiversity(std::span<const std::string> transcript,
                     std::span<const std::string> alphabet, bool strict) {
  std::set<std::string> seen;
  for (const std::string &t : transcript) {
    if (strict && std::find(alphabet.begin(), alphabet.end(), t) == alphabet.end())
      throw ConfigError("phoneme not in alphabet: " + t);
    seen.insert(t);
  }
  return static_cast<int>(seen.size());
}

DiversitySplit SplitByDiversity(std::span<const int> diversity) {
  if (diversity.size() < 2) throw ConfigError("diversity split needs two segments");
  std::vector<int> order(diversity.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return diversity[a] < diversity[b]; });
  DiversitySplit s;
  const size_t low_n = (order.size() + 1) / 2;
  s.low.assign(order.begin(), order.begin() + low_n);
  s.high.assign(order.begin() + low_n, order.end());
  auto mean = [&](const std::vector<int> &idx) {
    double sum = 0.0;
    for (int i : idx) sum += diversity[i];
    return sum / static_cast<double>(idx.size());
  };
  s.low_mean = mean(s.low);
  s.high_mean = mean(s.high);
  return s;
}

void Table::AddRow(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw InvariantError("table row has " + std::to_string(row.size()) +
                         " cells for " + std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::string Table::ToTsv() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string> &cells) {
    for (size_t i = 0; i < cells.size(); ++i) os << (i ? "\t" : "") << cells[i];
    os << '\n';
  };
  line(columns);
  for (const auto &r : rows) line(r);
  return os.str();
}

Json Table::ToJson() const { return Json{{"columns", columns}, {"rows", rows}}; }

Table Table::FromJson(const Json &j) {
  Table t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto &r : j.at("rows")) t.AddRow(r.get<std::vector<std::string>>());
  return t;
}

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v == 0.0 ? 0.0 : v);
  return buf;
}

Json MakeReport(const ReportHeader &header, const Table &table) {
  return Json{{"schema_version", kReportSchemaVersion},
              {"kind", header.kind},
              {"config_hash", header.config_hash},
              {"seed", header.seed},
              {"srs_provenance", header.srs_provenance},
              {"metadata", header.metadata},
              {"table", table.ToJson()}};
}

void WriteReport(const std::filesystem::path &dir, const std::string &stem,
                 const ReportHeader &header, const Table &table) {
  SaveJson(dir / (stem + ".json"), MakeReport(header, table));
  std::ostringstream tsv;
  tsv << "# kind: " << header.kind << '\n'
      << "# schema_version: " << kReportSchemaVersion << '\n'
      << "# config_hash: " << header.config_hash << '\n'
      << "# seed: " << header.seed << '\n'
      << "# srs_provenance: " << header.srs_provenance << '\n'
      << table.ToTsv();
  WriteFileAtomic(dir / (stem + ".tsv"), tsv.str());
}

Json LoadReport(const std::filesystem::path &path) {
  Json j = LoadJson(path);
  if (!j.is_object() || !j.contains("schema_version") || !j.contains("config_hash") ||
      !j.contains("table"))
    throw DataError("not a report file: " + path.string());
  if (j.at("schema_version").get<int>() != kReportSchemaVersion)
    throw DataError("unsupported report schema in " + path.string());
  return j;
}

}  // namespace parrot
