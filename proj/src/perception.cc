// src/perception.cc

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

#include "parrot/perception.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "parrot/common.h"
#include "parrot/dsp.h"

namespace parrot {

const std::array<std::string, kNumQualityFeatures> &QualityFeatureNames() {
  static const std::array<std::string, kNumQualityFeatures> names = {
      "scr_db",        "l2",           "linf",           "hnr_delta_db",
      "mfcc_dist_mean", "mfcc_dist_max", "pitch_rms_semitones", "duration_ratio"};
  return names;
}

QualityReference::QualityReference(const AudioClip &original) : clip_(original) {
  ValidateClip(clip_);
  computer_ = std::make_shared<const MfccComputer>(MfccConfig{}, clip_.sample_rate);
  mfcc_ = computer_->Compute(clip_);
  pitch_ = EstimatePitch(clip_);
  hnr_db_ = HarmonicsToNoise(pitch_);
}

std::vector<double> ExtractQualityFeatures(const QualityReference &ref,
                                           const AudioClip &perturbed) {
  const AudioClip &orig = ref.clip();
  if (perturbed.sample_rate != orig.sample_rate)
    throw ConfigError("quality features need equal sample rates");
  const double ratio = static_cast<double>(perturbed.size()) / orig.size();
  if (!(ratio >= 0.5 && ratio <= 2.0))
    throw ConfigError("perturbed clip length does not align with the original");

  AudioClip padded = perturbed;
  if (padded.size() < orig.size()) padded.samples.resize(orig.size(), 0.0);

  double sig = 0.0, diff = 0.0, linf = 0.0;
  for (size_t i = 0; i < padded.size(); ++i) {
    const double o = i < orig.size() ? orig.samples[i] : 0.0;
    const double d = padded.samples[i] - o;
    sig += o * o;
    diff += d * d;
    linf = std::max(linf, std::abs(d));
  }
  double scr = kScrFeatureCapDb;
  if (diff > 0.0) scr = std::min(kScrFeatureCapDb, 10.0 * std::log10(sig / diff));

  const MfccMatrix pm = ref.mfcc_computer().Compute(padded);
  const MfccMatrix &om = ref.mfcc();
  const int frames = std::min(pm.rows, om.rows);
  double dist_sum = 0.0, dist_max = 0.0;
  for (int r = 0; r < frames; ++r) {
    double s = 0.0;
    for (int c = 0; c < om.cols; ++c) {
      const double d = pm.at(r, c) - om.at(r, c);
      s += d * d;
    }
    const double d = std::sqrt(s);
    dist_sum += d;
    dist_max = std::max(dist_max, d);
  }

  const PitchTrack pt = EstimatePitch(padded);
  const PitchTrack &ot = ref.pitch();
  const size_t pf = std::min(pt.num_frames(), ot.num_frames());
  double pitch_sq = 0.0;
  size_t both = 0;
  for (size_t t = 0; t < pf; ++t) {
    if (!pt.voiced[t] || !ot.voiced[t]) continue;
    const double s = Semitones(ot.f0[t], pt.f0[t]);
    pitch_sq += s * s;
    ++both;
  }

  return {scr,
          std::sqrt(diff),
          linf,
          HarmonicsToNoise(pt) - ref.hnr_db(),
          frames > 0 ? dist_sum / frames : 0.0,
          dist_max,
          both > 0 ? std::sqrt(pitch_sq / both) : 0.0,
          ratio};
}

std::vector<double> ExtractQualityFeatures(const AudioClip &original,
                                           const AudioClip &perturbed) {
  return ExtractQualityFeatures(QualityReference(original), perturbed);
}

double SrsScorer::Score(const QualityReference &ref, const AudioClip &perturbed) const {
  return ScoreFeatures(ExtractQualityFeatures(ref, perturbed));
}

double SrsScorer::Score(const AudioClip &original, const AudioClip &perturbed) const {
  return Score(QualityReference(original), perturbed);
}

namespace {

void CheckFeatures(std::span<const double> f) {
  if (f.size() != kNumQualityFeatures)
    throw ConfigError("quality feature vector has the wrong length");
  for (double v : f)
    if (!std::isfinite(v)) throw ConfigError("quality feature is not finite");
}

}  // namespace

double HeuristicSrs::Degradation(std::span<const double> f) {
  CheckFeatures(f);
  const double l = std::max(0.0, 45.0 - f[0]) / 30.0;
  const double loudness = l * l;
  const double spectral = 0.15 * f[4] / 20.0;
  const double harmonic = 0.05 * std::max(0.0, -f[3]);
  const double prosodic = 0.5 * f[6] / 12.0;
  const double duration = 3.0 * std::abs(std::log(f[7]));
  return loudness + spectral + harmonic + prosodic + duration;
}

double HeuristicSrs::ScoreFeatures(std::span<const double> f) const {
  return kMinSrs + (kMaxSrs - kMinSrs) * std::exp(-Degradation(f));
}

void to_json(Json &j, const ForestConfig &c) {
  j = Json{{"num_trees", c.num_trees},       {"max_depth", c.max_depth},
           {"min_samples_leaf", c.min_samples_leaf},
           {"max_features", c.max_features}, {"seed", c.seed},
           {"min_records", c.min_records}};
}

void from_json(const Json &j, ForestConfig &c) {
  c.num_trees = j.at("num_trees").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  c.max_features = j.at("max_features").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.min_records = j.at("min_records").get<int>();
}

double SrsModel::RawPredict(std::span<const double> f) const {
  CheckFeatures(f);
  if (trees_.empty()) throw ConfigError("SRS model is not trained");
  double sum = 0.0;
  for (const Tree &tree : trees_) {
    int n = 0;
    while (tree[n].feature >= 0)
      n = f[tree[n].feature] <= tree[n].threshold ? tree[n].left : tree[n].right;
    sum += tree[n].value;
  }
  return sum / trees_.size();
}

double SrsModel::ScoreFeatures(std::span<const double> f) const {
  return std::clamp(RawPredict(f), kMinSrs, kMaxSrs);
}

Json SrsModel::ToJson() const {
  Json trees = Json::array();
  for (const Tree &tree : trees_) {
    Json nodes = Json::array();
    for (const Node &n : tree)
      nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    trees.push_back(std::move(nodes));
  }
  Json names = Json::array();
  for (const auto &n : QualityFeatureNames()) names.push_back(n);
  return Json{{"kind", "srs-forest"}, {"features", names}, {"config", config_},
              {"provenance", provenance_}, {"oob_mse", oob_mse_},
              {"oob_r2", oob_r2_}, {"num_oob", num_oob_}, {"trees", trees}};
}

SrsModel SrsModel::FromJson(const Json &j) {
  SrsModel m;
  try {
    if (j.at("kind").get<std::string>() != "srs-forest")
      throw ConfigError("not an SRS model");
    if (j.at("features").size() != kNumQualityFeatures)
      throw ConfigError("SRS model feature set does not match");
    m.config_ = j.at("config").get<ForestConfig>();
    m.provenance_ = j.at("provenance").get<std::string>();
    m.oob_mse_ = j.at("oob_mse").get<double>();
    m.oob_r2_ = j.at("oob_r2").get<double>();
    m.num_oob_ = j.at("num_oob").get<int>();
    for (const auto &jt : j.at("trees")) {
      Tree tree;
      for (const auto &jn : jt)
        tree.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(),
                        jn.at(2).get<int>(), jn.at(3).get<int>(),
                        jn.at(4).get<double>()});
      const int size = static_cast<int>(tree.size());
      for (const Node &n : tree)
        if (n.feature >= kNumQualityFeatures ||
            (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 ||
                                n.right >= size)))
          throw ConfigError("SRS model tree is malformed");
      if (tree.empty()) throw ConfigError("SRS model has an empty tree");
      m.trees_.push_back(std::move(tree));
    }
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("malformed SRS model: ") + e.what());
  }
  if (m.trees_.empty()) throw ConfigError("SRS model has no trees");
  return m;
}

void SrsModel::Save(const std::filesystem::path &path) const { SaveJson(path, ToJson()); }

SrsModel SrsModel::Load(const std::filesystem::path &path) {
  return FromJson(LoadJson(path));
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const SrsExample> data, const ForestConfig &config, Rng *rng)
      : data_(data), config_(config), rng_(rng) {
    features_.resize(kNumQualityFeatures);
    std::iota(features_.begin(), features_.end(), 0);
  }

  SrsModel::Tree Build(std::vector<int> rows) {
    tree_.clear();
    Grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int Grow(std::vector<int> rows, int depth) {
    const int id = static_cast<int>(tree_.size());
    tree_.push_back({});
    double mean = 0.0;
    for (int r : rows) mean += data_[r].score;
    mean /= rows.size();
    tree_[id].value = mean;

    const int n = static_cast<int>(rows.size());
    const int min_leaf = std::max(1, config_.min_samples_leaf);
    if (depth >= config_.max_depth || n < 2 * min_leaf) return id;
    double sse = 0.0;
    for (int r : rows) sse += (data_[r].score - mean) * (data_[r].score - mean);
    if (sse <= 1e-12) return id;

    int best_f = -1;
    double best_t = 0.0, best_sse = sse - 1e-12;
    for (int f : CandidateFeatures()) {
      std::vector<int> order = rows;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return data_[a].features[f] < data_[b].features[f];
      });
      double left_sum = 0.0, left_sq = 0.0, total = 0.0, total_sq = 0.0;
      for (int r : order) {
        total += data_[r].score;
        total_sq += data_[r].score * data_[r].score;
      }
      for (int i = 0; i + 1 < n; ++i) {
        const double y = data_[order[i]].score;
        left_sum += y;
        left_sq += y * y;
        const int nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double xv = data_[order[i]].features[f];
        const double xn = data_[order[i + 1]].features[f];
        if (!(xn > xv)) continue;
        const double rs = total - left_sum, rq = total_sq - left_sq;
        const double split_sse =
            (left_sq - left_sum * left_sum / nl) + (rq - rs * rs / nr);
        if (split_sse < best_sse) {
          best_sse = split_sse;
          best_f = f;
          best_t = 0.5 * (xv + xn);
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<int> left, right;
    for (int r : rows)
      (data_[r].features[best_f] <= best_t ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = Grow(std::move(left), depth + 1);
    const int rgt = Grow(std::move(right), depth + 1);
    tree_[id].feature = best_f;
    tree_[id].threshold = best_t;
    tree_[id].left = l;
    tree_[id].right = rgt;
    return id;
  }

  std::vector<int> CandidateFeatures() {
    const int k = config_.max_features;
    if (k <= 0 || k >= kNumQualityFeatures) return features_;
    std::vector<int> pool = features_;
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, kNumQualityFeatures - 1);
      std::swap(pool[i], pool[pick(*rng_)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  std::span<const SrsExample> data_;
  const ForestConfig &config_;
  Rng *rng_;
  std::vector<int> features_;
  SrsModel::Tree tree_;
};

}  // namespace

SrsModel TrainSrs(std::span<const SrsExample> examples, const ForestConfig &config,
                  const std::string &provenance) {
  if (static_cast<int>(examples.size()) < std::max(1, config.min_records))
    throw ConfigError("SRS training needs at least " +
                      std::to_string(config.min_records) + " records");
  if (config.num_trees < 1 || config.max_depth < 0)
    throw ConfigError("invalid forest configuration");
  for (const auto &e : examples) {
    CheckFeatures(e.features);
    if (!(e.score >= kMinSrs && e.score <= kMaxSrs))
      throw ConfigError("SRS training score outside [1, 7]");
  }

  std::vector<SrsExample> data(examples.begin(), examples.end());
  std::sort(data.begin(), data.end(), [](const SrsExample &a, const SrsExample &b) {
    if (a.features != b.features) return a.features < b.features;
    return a.score < b.score;
  });
  const int n = static_cast<int>(data.size());

  SrsModel model;
  model.config_ = config;
  model.provenance_ = provenance;
  std::vector<double> oob_sum(n, 0.0);
  std::vector<int> oob_count(n, 0);
  for (int t = 0; t < config.num_trees; ++t) {
    Rng rng(DeriveSeed(config.seed, static_cast<uint64_t>(t)));
    std::uniform_int_distribution<int> draw(0, n - 1);
    std::vector<int> rows(n);
    std::vector<char> in_bag(n, 0);
    for (int &r : rows) {
      r = draw(rng);
      in_bag[r] = 1;
    }
    std::sort(rows.begin(), rows.end());
    TreeBuilder builder(data, config, &rng);
    SrsModel::Tree tree = builder.Build(std::move(rows));
    for (int i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      int node = 0;
      while (tree[node].feature >= 0)
        node = data[i].features[tree[node].feature] <= tree[node].threshold
                   ? tree[node].left
                   : tree[node].right;
      oob_sum[i] += tree[node].value;
      ++oob_count[i];
    }
    model.trees_.push_back(std::move(tree));
  }

  double mean = 0.0, sq = 0.0, var = 0.0;
  int m = 0;
  for (int i = 0; i < n; ++i) {
    if (oob_count[i] == 0) continue;
    mean += data[i].score;
    ++m;
  }
  if (m > 0) {
    mean /= m;
    for (int i = 0; i < n; ++i) {
      if (oob_count[i] == 0) continue;
      const double e = oob_sum[i] / oob_count[i] - data[i].score;
      sq += e * e;
      var += (data[i].score - mean) * (data[i].score - mean);
    }
    model.oob_mse_ = sq / m;
    model.oob_r2_ = var > 0.0 ? 1.0 - sq / var : (sq == 0.0 ? 1.0 : 0.0);
  }
  model.num_oob_ = m;
  return model;
}

std::vector<RatingRecord> ParseRatingFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rating file: " + path.string());
  const auto base = path.parent_path();
  std::vector<RatingRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, sep)) {
      const auto a = field.find_first_not_of(' ');
      const auto b = field.find_last_not_of(' ');
      fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty())
      throw DataError("rating line needs three fields: " + where);
    double score = 0.0;
    size_t used = 0;
    try {
      score = std::stod(fields[2], &used);
    } catch (const std::exception &) {
      throw DataError("rating score is not a number: " + where);
    }
    if (used != fields[2].size()) throw DataError("rating score is not a number: " + where);
    if (!(score >= kMinSrs && score <= kMaxSrs))
      throw DataError("rating score outside [1, 7]: " + where);
    out.push_back({ResolvePath(base, fields[0]), ResolvePath(base, fields[1]), score});
  }
  return out;
}

std::vector<SrsExample> ExamplesFromRatings(std::span<const RatingRecord> records,
                                            int sample_rate) {
  std::vector<SrsExample> out;
  out.reserve(records.size());
  for (const auto &r : records) {
    AudioClip o = LoadWav(r.original), p = LoadWav(r.perturbed);
    if (o.sample_rate != sample_rate) o = Resample(o, sample_rate);
    if (p.sample_rate != sample_rate) p = Resample(p, sample_rate);
    out.push_back({ExtractQualityFeatures(o, p), r.score});
  }
  return out;
}

std::vector<SrsExample> SynthesizeRatings(std::span<const AudioClip> originals,
                                          const CarrierLibrary &library,
                                          const SrsScorer &labeler, int count,
                                          uint64_t seed, double scr_lo,
                                          double scr_hi) {
  if (originals.empty()) throw ConfigError("synthetic ratings need original clips");
  if (count < 1 || !(scr_hi >= scr_lo)) throw ConfigError("invalid synthetic rating setup");
  std::vector<QualityReference> refs;
  refs.reserve(originals.size());
  for (const auto &o : originals) refs.emplace_back(o);

  Rng rng(seed);
  std::uniform_real_distribution<double> scr_dist(scr_lo, scr_hi);
  const auto grid = FeatureTwistGrid();
  const int kinds = library.size() > 0 ? 4 : 2;
  std::vector<SrsExample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const QualityReference &ref = refs[i % refs.size()];
    const AudioClip &x = ref.clip();
    const double scr = scr_dist(rng);
    Carrier carrier;
    switch (i % kinds) {
      case 0:
        carrier = MakeNoiseCarrier(x.size(), DeriveSeed(seed, i), x.sample_rate);
        break;
      case 1: {
        std::uniform_int_distribution<size_t> g(0, grid.size() - 1);
        auto [s, r] = grid[g(rng)];
        while (s == 0 && std::abs(r - 1.0) < 1e-9) std::tie(s, r) = grid[g(rng)];
        carrier = MakeFeatureTwisted(x, s, r);
        break;
      }
      default: {
        std::uniform_int_distribution<size_t> c(0, library.size() - 1);
        carrier = library.carriers[c(rng)];
        if (i % kinds == 3) {
          std::uniform_int_distribution<int> st(-12, 11);
          const int s = st(rng);
          carrier = PitchTwistCarrier(carrier, s >= 0 ? s + 1 : s);
        }
        break;
      }
    }
    const AudioClip mixed = MixAtScr(x, carrier.waveform, scr);
    std::vector<double> f = ExtractQualityFeatures(ref, mixed);
    const double score = labeler.ScoreFeatures(f);
    out.push_back({std::move(f), score});
  }
  return out;
}

SrsModel TrainHeuristicSrs(std::span<const AudioClip> originals,
                           const CarrierLibrary &library, int count,
                           const ForestConfig &config) {
  const HeuristicSrs labeler;
  const auto examples = SynthesizeRatings(originals, library, labeler, count,
                                          DeriveSeed(config.seed, 0x5253));
  return TrainSrs(examples, config, labeler.Provenance());
}

std::vector<double> AverageRanks(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double PearsonCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("correlation needs equal lengths");
  if (x.size() < 3) throw ConfigError("correlation needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw ConfigError("correlation is undefined for a zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double SpearmanCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("correlation needs equal lengths");
  const auto rx = AverageRanks(x), ry = AverageRanks(y);
  return PearsonCorrelation(rx, ry);
}

MetricCorrelation ValidateMetric(std::span<const double> metric,
                                 std::span<const double> human) {
  return {PearsonCorrelation(metric, human), SpearmanCorrelation(metric, human)};
}

}  // namespace parrot
