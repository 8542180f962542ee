// tools/cli.cc

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

// Workspace layout under --out:
//   corpus/, library/, fixtures.json    gen-fixtures
//   features/<stem>.json                extract
//   models/index.json, models/*.json    train, enroll
//   parrots/                            gen-parrot
//   aes/<carrier>/                      gen-ae
//   attack/                             attack
//   reports/<kind>.{json,tsv}           every evaluating subcommand
//   summary.{json,tsv}                  report
// Later subcommands read the corpus and library from the workspace when
// the config names no manifest.

#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "parrot/common.h"
#include "parrot/mfcc.h"
#include "parrot/pipeline.h"
#include "parrot/pitch.h"

namespace parrot {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config flags.

void CollectLeaves(const Json &j, const std::string &prefix, std::vector<std::string> *keys) {
  for (const auto &[k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object())
      CollectLeaves(v, key, keys);
    else
      keys->push_back(key);
  }
}

Json::json_pointer PointerOf(const std::string &key) {
  std::string p;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) p += "/" + part;
  return Json::json_pointer(p);
}

std::vector<std::string> SplitList(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const size_t b = item.find_first_not_of(" \t");
    const size_t e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Json ParseLeaf(const std::string &key, const std::string &text, const Json &def) {
  try {
    size_t used = 0;
    if (def.is_string()) return text;
    if (def.is_array()) return SplitList(text);
    if (def.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
    } else if (def.is_number_unsigned()) {
      const unsigned long long v = std::stoull(text, &used);
      if (used == text.size() && text[0] != '-') return v;
    } else if (def.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } else if (def.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    }
  } catch (const std::logic_error &) {
  }
  throw ConfigError("bad value for --" + key + ": '" + text + "'");
}

PipelineConfig BuildConfig(const std::string &config_path, const Json &defaults,
                           const std::map<std::string, std::string> &values,
                           const std::map<std::string, CLI::Option *> &options) {
  Json cfg = defaults;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) throw DataError("missing config file: " + config_path);
    Json file;
    try {
      file = Json::parse(ReadFile(config_path));
    } catch (const Json::exception &e) {
      throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
    }
    cfg = Json(file.get<PipelineConfig>());
  }
  for (const auto &[key, opt] : options)
    if (opt->count() > 0)
      cfg[PointerOf(key)] = ParseLeaf(key, values.at(key), defaults.at(PointerOf(key)));
  PipelineConfig c = cfg.get<PipelineConfig>();
  if (!c.manifest.empty() && !fs::exists(c.manifest))
    throw DataError("missing corpus manifest: " + c.manifest);
  if (!c.library_manifest.empty() && !fs::exists(c.library_manifest))
    throw DataError("missing sound library manifest: " + c.library_manifest);
  return c;
}

// ---------------------------------------------------------------------------
// Workspace helpers.

struct Workspace {
  fs::path out;
  PipelineConfig config;
  std::string hash;

  fs::path Models() const { return out / "models"; }
  fs::path Reports() const { return out / "reports"; }
};

void SaveStamped(const fs::path &path, Json j, const Workspace &ws) {
  j["config_hash"] = ws.hash;
  SaveJson(path, j);
  std::cout << path.string() << '\n';
}

void StampFile(const fs::path &path, const Workspace &ws) {
  SaveStamped(path, LoadJson(path), ws);
}

void CheckHash(const Json &j, const fs::path &path, const Workspace &ws) {
  const std::string h = j.value("config_hash", "");
  if (h != ws.hash)
    std::cerr << "warning: " << path.string() << " was written under config "
              << (h.empty() ? "<none>" : h) << ", current config is " << ws.hash << '\n';
}

const fs::path &RequireFile(const fs::path &p, const std::string &what) {
  if (!fs::exists(p)) throw DataError("missing " + what + ": " + p.string());
  return p;
}

std::string Numbered(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu.wav", i);
  return buf;
}

ReportHeader Header(const Workspace &ws, const std::string &kind, const std::string &srs) {
  ReportHeader h;
  h.kind = kind;
  h.config_hash = ws.hash;
  h.seed = ws.config.seed;
  h.srs_provenance = srs;
  return h;
}

void Report(const Workspace &ws, const std::string &kind, const std::string &srs,
            const Table &table, Json metadata = Json::object()) {
  ReportHeader h = Header(ws, kind, srs);
  h.metadata = std::move(metadata);
  WriteReport(ws.Reports(), kind, h, table);
  std::cout << (ws.Reports() / (kind + ".json")).string() << '\n';
}

DeskCorpus LoadCorpus(const Workspace &ws) {
  PipelineConfig c = ws.config;
  const fs::path local = ws.out / "corpus" / "manifest.json";
  if (c.manifest.empty() && fs::exists(local)) c.manifest = local.string();
  return LoadOrBuildCorpus(c);
}

CarrierLibrary LoadLibrary(const Workspace &ws) {
  PipelineConfig c = ws.config;
  const fs::path local = ws.out / "library" / "manifest.json";
  if (c.library_manifest.empty() && fs::exists(local)) c.library_manifest = local.string();
  return LoadOrBuildLibrary(c);
}

PipelineConfig Resolved(const Workspace &ws, const DeskCorpus &corpus) {
  PipelineConfig c = ws.config;
  if (c.attack.target.empty()) c.attack.target = corpus.target_id;
  if (!corpus.speakers.count(c.attack.target) ||
      corpus.speakers.at(c.attack.target).role != SpeakerRole::kEnrolled)
    throw ConfigError("attack target is not an enrolled speaker: " + c.attack.target);
  return c;
}

Json LoadIndex(const Workspace &ws) {
  const fs::path p = ws.Models() / "index.json";
  if (fs::exists(p)) return LoadJson(p);
  return Json{{"targets", Json::array()}, {"surrogates", Json::array()}};
}

void SaveModels(const Workspace &ws, const std::vector<NamedModel> &models,
                const std::string &section, Json *index) {
  Json entries = Json::array();
  for (const auto &m : models) {
    SaveStamped(ws.Models() / (m.id + ".json"), m.model->ToJson(), ws);
    entries.push_back({{"id", m.id}, {"arch", m.arch}, {"path", m.id + ".json"}});
  }
  (*index)[section] = entries;
}

std::vector<NamedModel> LoadModels(const Workspace &ws, const std::string &section,
                                   const std::string &producer) {
  const Json index = LoadIndex(ws);
  if (!index.contains(section) || index.at(section).empty())
    throw DataError("missing " + section + " models in " + ws.Models().string() + " (run " +
                    producer + ")");
  std::vector<NamedModel> out;
  for (const auto &e : index.at(section)) {
    const fs::path p = ws.Models() / e.at("path").get<std::string>();
    const Json j = LoadJson(RequireFile(p, "model file"));
    CheckHash(j, p, ws);
    out.push_back({e.at("id"), e.at("arch"), SpeakerModelFromJson(j)});
  }
  return out;
}

std::vector<NamedModel> LoadOrTrainTargets(const Workspace &ws, const DeskSplits &splits,
                                           const PipelineConfig &config) {
  const Json index = LoadIndex(ws);
  if (index.contains("targets") && !index.at("targets").empty())
    return LoadModels(ws, "targets", "train");
  return TrainTargetModels(splits, config);
}

std::unique_ptr<SrsScorer> LoadScorer(const Workspace &ws, bool required,
                                      const std::string &override_path) {
  const fs::path p = override_path.empty() ? ws.Models() / "srs.json" : fs::path(override_path);
  if (!fs::exists(p)) {
    if (required) throw DataError("missing SRS model: " + p.string() + " (run train)");
    return std::make_unique<HeuristicSrs>();
  }
  const Json j = LoadJson(p);
  CheckHash(j, p, ws);
  return std::make_unique<SrsModel>(SrsModel::FromJson(j));
}

std::string IndexedSrsProvenance(const Workspace &ws) {
  const Json index = LoadIndex(ws);
  if (index.contains("srs")) return index.at("srs").at("provenance");
  return "none";
}

// AEs are stored as WAV files next to a manifest carrying their metadata.
Json SaveAes(const fs::path &dir, const std::string &prefix, std::span<const AeResult> aes,
             const std::vector<std::string> &speakers) {
  Json out = Json::array();
  for (size_t i = 0; i < aes.size(); ++i) {
    const AeResult &r = aes[i];
    WriteWav(dir / Numbered(i), r.waveform);
    out.push_back({{"path", prefix + Numbered(i)},
                   {"source_speaker", speakers.at(i)},
                   {"method", r.method},
                   {"target", r.target},
                   {"loss", r.loss},
                   {"srs", r.srs},
                   {"srs_provenance", r.srs_provenance},
                   {"fooled", std::vector<int>(r.fooled.begin(), r.fooled.end())},
                   {"steps", r.steps},
                   {"restarts", r.restarts},
                   {"evaluations", r.evaluations},
                   {"epsilon", r.epsilon},
                   {"gamma", r.gamma},
                   {"carrier_ids", r.carrier_ids},
                   {"semitones", r.semitones}});
  }
  return out;
}

std::vector<AeResult> LoadAes(const fs::path &base, const Json &entries, int sample_rate) {
  std::vector<AeResult> out;
  for (const auto &e : entries) {
    AeResult r;
    r.waveform = LoadWav(base / e.at("path").get<std::string>());
    if (r.waveform.sample_rate != sample_rate) r.waveform = Resample(r.waveform, sample_rate);
    r.method = e.at("method");
    r.target = e.at("target");
    r.srs = e.at("srs");
    r.srs_provenance = e.at("srs_provenance");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AeBatch> LoadAeBatches(const Workspace &ws, const PipelineConfig &config,
                                   std::string *provenance) {
  std::vector<AeBatch> batches;
  for (const auto &name : config.carriers) {
    const CarrierKind kind = ParseCarrierKind(name);
    const fs::path dir = ws.out / "aes" / CarrierKindName(kind);
    const Json j = LoadJson(RequireFile(dir / "manifest.json", "AEs (run gen-ae)"));
    CheckHash(j, dir / "manifest.json", ws);
    *provenance = j.at("srs_provenance");
    for (const auto &b : j.at("batches"))
      batches.push_back({kind, b.at("surrogate"),
                         LoadAes(dir, b.at("aes"), config.corpus.sample_rate)});
  }
  if (batches.empty()) throw ConfigError("no carriers configured");
  return batches;
}

ParrotSet LoadParrots(const Workspace &ws) {
  const fs::path dir = ws.out / "parrots";
  const Json j = LoadJson(RequireFile(dir / "manifest.json", "parrot set (run gen-parrot)"));
  CheckHash(j, dir / "manifest.json", ws);
  ParrotSet p;
  p.target = j.at("target");
  p.iterations = j.at("iterations");
  p.provenance = j.at("provenance") == "external" ? Provenance::kExternal : Provenance::kStandIn;
  for (const auto &c : j.at("clips")) {
    AudioClip clip = LoadWav(dir / c.at("path").get<std::string>());
    if (clip.sample_rate != ws.config.corpus.sample_rate)
      clip = Resample(clip, ws.config.corpus.sample_rate);
    p.clips.push_back(std::move(clip));
    p.source_ids.push_back(c.at("source"));
  }
  return p;
}

Json TransferMetadata(const TransferOutcome &o, const std::string &from) {
  Json m = Json::array();
  for (const auto &t : o.matrices) m.push_back(t.ToJson());
  return Json{{"from", from},
              {"averaging", "per target over surrogates, then across targets"},
              {"matrices", m}};
}

// ---------------------------------------------------------------------------
// Subcommands.

void CmdGenFixtures(const Workspace &ws) {
  const DeskCorpus corpus = LoadOrBuildCorpus(ws.config);
  SaveDeskCorpus(ws.out / "corpus", corpus);
  StampFile(ws.out / "corpus" / "manifest.json", ws);
  const CarrierLibrary library = LoadOrBuildLibrary(ws.config);
  SaveEnvironmentalLibrary(ws.out / "library", library);
  StampFile(ws.out / "library" / "manifest.json", ws);
  SaveStamped(ws.out / "fixtures.json",
              Json{{"seed", ws.config.seed},
                   {"corpus", "corpus/manifest.json"},
                   {"library", "library/manifest.json"},
                   {"target", corpus.target_id},
                   {"speakers", corpus.speakers.size()},
                   {"sounds", library.carriers.size()}},
              ws);
}

void CmdExtract(const Workspace &ws, const std::vector<std::string> &inputs) {
  for (const auto &in : inputs) {
    AudioClip clip = LoadWav(RequireFile(in, "audio file"));
    if (clip.sample_rate != ws.config.corpus.sample_rate)
      clip = Resample(clip, ws.config.corpus.sample_rate);
    const MfccMatrix m = ComputeMfcc(clip);
    const PitchTrack t = EstimatePitch(clip);
    SaveStamped(ws.out / "features" / (fs::path(in).stem().string() + ".json"),
                Json{{"source", fs::path(in).filename().string()},
                     {"sample_rate", clip.sample_rate},
                     {"duration_s", clip.Duration()},
                     {"mfcc",
                      {{"rows", m.rows},
                       {"cols", m.cols},
                       {"frame_ms", m.frame_ms},
                       {"hop_ms", m.hop_ms},
                       {"data", m.data}}},
                     {"pooled", PoolMeanStd(m)},
                     {"pitch",
                      {{"hop_ms", t.hop_ms},
                       {"f0", t.f0},
                       {"voiced_frames", t.NumVoiced()},
                       {"mean_f0", t.MeanVoicedF0()}}}},
                ws);
  }
}

void CmdTrain(const Workspace &ws, bool surrogates, const std::string &ratings) {
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  Json index = LoadIndex(ws);
  if (surrogates) {
    const ParrotSet parrots = LoadParrots(ws);
    const auto models = TrainSurrogates(corpus, parrots.clips, cfg.surrogate_archs, "PT", cfg);
    SaveModels(ws, models, "surrogates", &index);
    SaveStamped(ws.Models() / "index.json", index, ws);
    Table t;
    t.columns = {"surrogate", "arch", "n_test", "recall", "precision", "f1"};
    for (const auto &m : models) {
      const auto test = SurrogateTestSet(corpus, *m.model, cfg);
      const BinaryMetrics b = TargetVsRest(*m.model, test, cfg.attack.target);
      t.AddRow({m.id, m.arch, std::to_string(test.size()), FormatNumber(b.recall),
                FormatNumber(b.precision), FormatNumber(b.f1)});
    }
    Report(ws, "surrogates", IndexedSrsProvenance(ws), t);
    return;
  }

  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto targets = TrainTargetModels(splits, cfg);
  SaveModels(ws, targets, "targets", &index);

  SrsModel srs;
  if (ratings.empty()) {
    std::vector<AudioClip> originals;
    for (const auto &lc : splits.target_train) originals.push_back(lc.clip);
    srs = TrainHeuristicSrs(originals, LoadLibrary(ws), cfg.srs_ratings, cfg.srs_forest);
  } else {
    const auto records = ParseRatingFile(RequireFile(ratings, "ratings file"));
    srs = TrainSrs(ExamplesFromRatings(records, cfg.corpus.sample_rate), cfg.srs_forest,
                   "human-SRS");
  }
  srs.Save(ws.Models() / "srs.json");
  StampFile(ws.Models() / "srs.json", ws);
  index["srs"] = {{"path", "srs.json"}, {"provenance", srs.Provenance()}};
  SaveStamped(ws.Models() / "index.json", index, ws);

  Table t;
  t.columns = {"model", "arch", "n_test", "accuracy"};
  for (const auto &m : targets) {
    long correct = 0;
    for (const auto &lc : splits.target_test) correct += m.model->Predict(lc.clip) == lc.label;
    t.AddRow({m.id, m.arch, std::to_string(splits.target_test.size()),
              FormatNumber(static_cast<double>(correct) / splits.target_test.size())});
  }
  Report(ws, "targets", srs.Provenance(), t,
         Json{{"srs_oob_r2", srs.oob_r2()}, {"srs_oob_mse", srs.oob_mse()}});
}

void CmdEnroll(const Workspace &ws) {
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto targets = LoadModels(ws, "targets", "train");
  Json models = Json::object();
  Table t;
  t.columns = {"model", "osi_threshold", "sv_threshold", "far", "frr", "osier"};
  for (const auto &m : targets) {
    const CalibrationReport r = CalibrateThresholds(*m.model, splits.dev);
    models[m.id] = {{"osi", r.thresholds.osi}, {"sv", r.thresholds.sv},
                    {"far", r.far},            {"frr", r.frr},
                    {"osier", r.osier}};
    t.AddRow({m.id, FormatNumber(r.thresholds.osi), FormatNumber(r.thresholds.sv),
              FormatNumber(r.far), FormatNumber(r.frr), FormatNumber(r.osier)});
  }
  SaveStamped(ws.Models() / "thresholds.json", Json{{"models", models}}, ws);
  Report(ws, "enroll", IndexedSrsProvenance(ws), t);
}

void CmdGenParrot(const Workspace &ws, const std::string &external) {
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const ParrotSet parrots =
      external.empty()
          ? MakeParrots(corpus, KnowledgeClip(corpus, cfg.knowledge_seconds), cfg)
          : IngestExternalParrots(RequireFile(external, "parrot manifest"), cfg.attack.target,
                                  cfg.corpus.sample_rate);
  const fs::path dir = ws.out / "parrots";
  fs::remove_all(dir);
  Json clips = Json::array();
  for (size_t i = 0; i < parrots.clips.size(); ++i) {
    WriteWav(dir / Numbered(i), parrots.clips[i]);
    clips.push_back({{"path", Numbered(i)},
                     {"source", i < parrots.source_ids.size() ? parrots.source_ids[i] : ""}});
  }
  SaveStamped(dir / "manifest.json",
              Json{{"target", parrots.target},
                   {"provenance",
                    parrots.provenance == Provenance::kExternal ? "external" : "stand-in"},
                   {"iterations", parrots.iterations},
                   {"knowledge_seconds", cfg.knowledge_seconds},
                   {"clips", clips}},
              ws);

  // False positives of the trained targets on the parrots, when present.
  const Json index = LoadIndex(ws);
  if (!index.contains("targets") || index.at("targets").empty()) return;
  Table t;
  t.columns = {"model", "fp", "tn", "fpr"};
  std::vector<FprCount> counts;
  for (const auto &m : LoadModels(ws, "targets", "train")) {
    counts.push_back(CountFpr(*m.model, parrots, parrots.target));
    t.AddRow({m.id, std::to_string(counts.back().fp), std::to_string(counts.back().tn),
              FormatNumber(FalsePositiveRate(counts.back().fp, counts.back().tn))});
  }
  FprCount pooled;
  for (const auto &c : counts) {
    pooled.fp += c.fp;
    pooled.tn += c.tn;
  }
  t.AddRow({"pooled", std::to_string(pooled.fp), std::to_string(pooled.tn),
            FormatNumber(PooledFpr(counts))});
  Report(ws, "parrots", IndexedSrsProvenance(ws), t);
}

void CmdGenAe(const Workspace &ws, std::vector<std::string> carriers) {
  const DeskCorpus corpus = LoadCorpus(ws);
  PipelineConfig cfg = Resolved(ws, corpus);
  if (carriers.empty()) carriers = cfg.carriers;
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto surrogates = LoadModels(ws, "surrogates", "train --surrogates");
  const CarrierLibrary library = LoadLibrary(ws);
  const auto scorer = LoadScorer(ws, false, "");
  for (const auto &name : carriers) {
    const CarrierKind kind = ParseCarrierKind(name);
    const fs::path dir = ws.out / "aes" / CarrierKindName(kind);
    fs::remove_all(dir);
    Json batches = Json::array();
    for (const auto &s : surrogates) {
      const auto aes = GenerateCarrierAes(kind, *s.model, splits, library, *scorer, cfg);
      batches.push_back({{"surrogate", s.id},
                         {"aes", SaveAes(dir / s.id, s.id + "/", aes, splits.source_speakers)}});
    }
    SaveStamped(dir / "manifest.json",
                Json{{"carrier", CarrierKindName(kind)},
                     {"target", cfg.attack.target},
                     {"srs_provenance", scorer->Provenance()},
                     {"batches", batches}},
                ws);
  }
}

void CmdAttack(const Workspace &ws, const std::string &srs_path) {
  const auto scorer = LoadScorer(ws, true, srs_path);
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto surrogates = LoadModels(ws, "surrogates", "train --surrogates");
  const auto targets = LoadModels(ws, "targets", "train");
  const CarrierLibrary library = LoadLibrary(ws);
  const TwoStageOutcome o = RunTwoStageAttack(surrogates, splits, library, *scorer, cfg);

  const fs::path dir = ws.out / "attack";
  fs::remove_all(dir);
  Json cands = Json::array();
  bool twisted = false;
  for (const auto &e : o.candidates) {
    twisted = twisted || e.carrier.kind == CarrierKind::kPitchTwisted;
    cands.push_back({{"id", e.carrier.id},
                     {"category", e.carrier.category},
                     {"semitones", e.carrier.semitones},
                     {"tpr", e.tpr},
                     {"match_rate", e.match_rate},
                     {"srs", e.srs}});
  }
  SaveStamped(dir / "manifest.json",
              Json{{"target", cfg.attack.target},
                   {"carrier", CarrierKindName(twisted ? CarrierKind::kPitchTwisted
                                                       : CarrierKind::kEnvironmental)},
                   {"srs_provenance", scorer->Provenance()},
                   {"candidates", cands},
                   {"aes", SaveAes(dir, "", o.aes, splits.source_speakers)}},
              ws);
  Table t = AttackTableColumns();
  AppendSuccessRows(corpus, splits, targets, cfg, cfg.knowledge_seconds, "full", o.aes, &t);
  Report(ws, "attack", scorer->Provenance(), t);
}

void CmdEvalTransfer(const Workspace &ws) {
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto surrogates = LoadModels(ws, "surrogates", "train --surrogates");
  const auto targets = LoadModels(ws, "targets", "train");
  std::string provenance;
  const auto batches = LoadAeBatches(ws, cfg, &provenance);
  const TransferOutcome o = EvaluateTransfer(batches, surrogates, targets, splits.sources);
  Report(ws, "transfer", provenance, o.table, TransferMetadata(o, "gen-ae"));
}

void CmdEvalTpr(const Workspace &ws, const std::string &from) {
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto surrogates = LoadModels(ws, "surrogates", "train --surrogates");
  const auto targets = LoadModels(ws, "targets", "train");
  std::vector<AeBatch> batches;
  std::string provenance;
  if (from == "attack") {
    const fs::path dir = ws.out / "attack";
    const Json j = LoadJson(RequireFile(dir / "manifest.json", "attack output (run attack)"));
    CheckHash(j, dir / "manifest.json", ws);
    provenance = j.at("srs_provenance");
    const auto aes = LoadAes(dir, j.at("aes"), cfg.corpus.sample_rate);
    for (const auto &s : surrogates)
      batches.push_back({ParseCarrierKind(j.at("carrier")), s.id, aes});
  } else {
    batches = LoadAeBatches(ws, cfg, &provenance);
  }
  const TransferOutcome o = EvaluateTransfer(batches, surrogates, targets, splits.sources);
  Table t;
  t.columns = {"carrier", "match_rate", "mean_srs", "tpr"};
  for (const auto &r : o.tpr)
    t.AddRow({CarrierKindName(r.carrier), FormatNumber(r.match_rate), FormatNumber(r.mean_srs),
              FormatNumber(r.tpr)});
  Report(ws, "tpr", provenance, t, TransferMetadata(o, from));
}

void CmdSweep(const Workspace &ws, const std::string &levels_text) {
  std::vector<double> levels;
  for (const auto &l : SplitList(levels_text)) levels.push_back(ParseLeaf("levels", l, 0.0));
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto targets = LoadOrTrainTargets(ws, splits, cfg);
  const CarrierLibrary library = LoadLibrary(ws);
  const auto scorer = LoadScorer(ws, false, "");
  const AttackContext ctx{&corpus, &splits, &targets, &library, scorer.get()};
  const Table t = KnowledgeSweep(ctx, cfg, levels);
  Report(ws, "sweep", scorer->Provenance(), t, Json{{"levels", levels}});
}

void CmdAblate(const Workspace &ws, const std::string &removals_text) {
  const std::vector<std::string> removals = SplitList(removals_text);
  const DeskCorpus corpus = LoadCorpus(ws);
  const PipelineConfig cfg = Resolved(ws, corpus);
  const DeskSplits splits = SplitDesk(corpus, cfg);
  const auto targets = LoadOrTrainTargets(ws, splits, cfg);
  const CarrierLibrary library = LoadLibrary(ws);
  const auto scorer = LoadScorer(ws, false, "");
  const AttackContext ctx{&corpus, &splits, &targets, &library, scorer.get()};
  const Table t = AblationRun(ctx, cfg, removals);
  Report(ws, "ablation", scorer->Provenance(), t, Json{{"removals", removals}});
}

void CmdReport(const Workspace &ws, bool force) {
  const fs::path dir = ws.Reports();
  if (!fs::is_directory(dir)) throw DataError("missing report directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) throw DataError("no reports under " + dir.string());
  std::sort(files.begin(), files.end());

  Table t;
  t.columns = {"report", "kind", "config_hash", "hash_matches", "rows"};
  std::vector<std::string> mismatched;
  Json all = Json::array();
  for (const auto &f : files) {
    const Json j = LoadReport(f);
    const std::string h = j.at("config_hash");
    if (h != ws.hash) mismatched.push_back(f.filename().string());
    t.AddRow({f.filename().string(), j.value("kind", ""), h, h == ws.hash ? "yes" : "no",
              std::to_string(j.at("table").at("rows").size())});
    all.push_back({{"file", f.filename().string()}, {"report", j}});
  }
  if (!mismatched.empty() && !force) {
    std::string names;
    for (const auto &m : mismatched) names += (names.empty() ? "" : ", ") + m;
    throw ConfigError("config hash mismatch in " + names + " (current config " + ws.hash +
                      "); pass --force to combine them anyway");
  }
  ReportHeader h = Header(ws, "summary", IndexedSrsProvenance(ws));
  h.metadata = {{"forced", !mismatched.empty()}, {"mismatched", mismatched}, {"reports", all}};
  WriteReport(ws.out, "summary", h, t);
  std::cout << (ws.out / "summary.json").string() << '\n';
}

}  // namespace

int RunCli(const std::vector<std::string> &argv) {
  CLI::App app{"Speaker-model attack toolkit: parrot speech, surrogates and carrier perturbations"};
  app.name(argv.empty() ? "parrot" : fs::path(argv[0]).filename().string());
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string out = "parrot-out";
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--out", out, "workspace directory for every artifact")->capture_default_str();

  const Json defaults = PipelineConfig();
  std::vector<std::string> keys;
  CollectLeaves(defaults, "", &keys);
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option *> flag_options;
  for (const auto &k : keys)
    flag_options[k] = app.add_option("--" + k, flag_values[k],
                                     "default " + defaults.at(PointerOf(k)).dump())
                          ->group("Config keys");

  auto *gen_fixtures = app.add_subcommand("gen-fixtures", "write the desk corpus and sound library");
  std::vector<std::string> inputs;
  auto *extract = app.add_subcommand("extract", "MFCC and pitch features of WAV files");
  extract->add_option("--input", inputs, "WAV file (repeatable)")->required();
  bool surrogates = false;
  std::string ratings;
  auto *train = app.add_subcommand("train", "train target models and the SRS model");
  train->add_flag("--surrogates", surrogates, "train parrot-trained surrogates instead");
  train->add_option("--ratings", ratings, "rating file for the SRS model (original, perturbed, score)");
  auto *enroll = app.add_subcommand("enroll", "calibrate OSI and SV thresholds of the targets");
  std::string external;
  auto *gen_parrot = app.add_subcommand("gen-parrot", "parrot speech from the knowledge clip");
  gen_parrot->add_option("--external", external, "ingest parrots from a pool manifest instead");
  std::vector<std::string> ae_carriers;
  auto *gen_ae = app.add_subcommand("gen-ae", "single-surrogate AEs per carrier type");
  gen_ae->add_option("--carrier", ae_carriers, "carrier types (default: config carriers)")
      ->delimiter(',');
  std::string srs_path;
  auto *attack = app.add_subcommand("attack", "two-stage attack on the surrogate ensemble");
  attack->add_option("--srs-model", srs_path, "SRS model file (default: models/srs.json)");
  auto *eval_transfer = app.add_subcommand("eval-transfer", "match rates of gen-ae AEs");
  std::string tpr_from = "attack";
  auto *eval_tpr = app.add_subcommand("eval-tpr", "transferability-perception ratios");
  eval_tpr->add_option("--from", tpr_from, "AE source")
      ->check(CLI::IsMember({"attack", "gen-ae"}))
      ->capture_default_str();
  std::string levels = "2,4,8,12,16";
  auto *sweep = app.add_subcommand("sweep", "attack success across knowledge levels");
  sweep->add_option("--levels", levels, "seconds, comma separated")->capture_default_str();
  std::string removals;
  for (const auto &t : AblationTags()) removals += (removals.empty() ? "" : ",") + t;
  auto *ablate = app.add_subcommand("ablate", "full pipeline against component removals");
  ablate->add_option("--removals", removals, "removal tags, comma separated")
      ->capture_default_str();
  bool force = false;
  auto *report = app.add_subcommand("report", "combine reports that share the config hash");
  report->add_flag("--force", force, "combine reports with mismatched config hashes");

  std::vector<const char *> cargv;
  for (const auto &a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Workspace ws;
    ws.out = out;
    ws.config = BuildConfig(config_path, defaults, flag_values, flag_options);
    ws.hash = ConfigHash(ws.config);
    fs::create_directories(ws.out);
    if (app.got_subcommand(gen_fixtures)) CmdGenFixtures(ws);
    if (app.got_subcommand(extract)) CmdExtract(ws, inputs);
    if (app.got_subcommand(train)) CmdTrain(ws, surrogates, ratings);
    if (app.got_subcommand(enroll)) CmdEnroll(ws);
    if (app.got_subcommand(gen_parrot)) CmdGenParrot(ws, external);
    if (app.got_subcommand(gen_ae)) CmdGenAe(ws, ae_carriers);
    if (app.got_subcommand(attack)) CmdAttack(ws, srs_path);
    if (app.got_subcommand(eval_transfer)) CmdEvalTransfer(ws);
    if (app.got_subcommand(eval_tpr)) CmdEvalTpr(ws, tpr_from);
    if (app.got_subcommand(sweep)) CmdSweep(ws, levels);
    if (app.got_subcommand(ablate)) CmdAblate(ws, removals);
    if (app.got_subcommand(report)) CmdReport(ws, force);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvariantError &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitOk;
}

}  // namespace parrot
