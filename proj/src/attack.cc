// src/attack.cc

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

#include "parrot/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "parrot/common.h"
#include "parrot/dsp.h"

namespace parrot {

void to_json(Json &j, const AttackConfig &c) {
  j = Json{{"target", c.target},
           {"task", TaskName(c.task)},
           {"pgd_epsilon", c.pgd_epsilon},
           {"pgd_steps", c.pgd_steps},
           {"pgd_step_size", c.pgd_step_size},
           {"spsa_epsilon", c.spsa_epsilon},
           {"spsa_steps", c.spsa_steps},
           {"spsa_restarts", c.spsa_restarts},
           {"balance_c", c.balance_c},
           {"num_candidates", c.num_candidates},
           {"twist_step", c.twist_step},
           {"seed", c.seed}};
}

void from_json(const Json &j, AttackConfig &c) {
  const AttackConfig d;
  c.target = j.value("target", d.target);
  c.task = ParseTask(j.value("task", TaskName(d.task)));
  c.pgd_epsilon = j.value("pgd_epsilon", d.pgd_epsilon);
  c.pgd_steps = j.value("pgd_steps", d.pgd_steps);
  c.pgd_step_size = j.value("pgd_step_size", d.pgd_step_size);
  c.spsa_epsilon = j.value("spsa_epsilon", d.spsa_epsilon);
  c.spsa_steps = j.value("spsa_steps", d.spsa_steps);
  c.spsa_restarts = j.value("spsa_restarts", d.spsa_restarts);
  c.balance_c = j.value("balance_c", d.balance_c);
  c.num_candidates = j.value("num_candidates", d.num_candidates);
  c.twist_step = j.value("twist_step", d.twist_step);
  c.seed = j.value("seed", d.seed);
}

namespace {

double Sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Shrinks v until its left-to-right sum is <= epsilon.
void FixSum(std::vector<double> *v, double epsilon) {
  for (double s = Sum(*v); s > epsilon; s = Sum(*v)) {
    const double f = std::nextafter(epsilon / s, 0.0);
    for (double &g : *v) g *= f;
  }
}

}  // namespace

std::vector<double> ProjectWeights(std::span<const double> gamma, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ConfigError("weight budget must be finite and nonnegative");
  for (double g : gamma)
    if (!std::isfinite(g)) throw ConfigError("carrier weight is not finite");
  std::vector<double> out(gamma.size());
  for (size_t i = 0; i < gamma.size(); ++i) out[i] = std::max(0.0, gamma[i]);
  if (Sum(out) <= epsilon) return out;

  // Simplex projection: threshold theta with sum max(g - theta, 0) = eps.
  std::vector<double> u(gamma.begin(), gamma.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - epsilon) / (j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (size_t i = 0; i < gamma.size(); ++i) out[i] = std::max(0.0, gamma[i] - theta);
  FixSum(&out, epsilon);
  return out;
}

bool WeightsFeasible(std::span<const double> gamma, double epsilon) {
  for (double g : gamma)
    if (!(g >= 0.0) || !std::isfinite(g)) return false;
  return Sum(gamma) <= epsilon;
}

SurrogateEnsemble::SurrogateEnsemble(std::vector<const SpeakerModel *> models)
    : models_(std::move(models)) {
  if (models_.empty()) throw ConfigError("surrogate ensemble is empty");
  for (const auto *m : models_)
    if (m == nullptr) throw ConfigError("null surrogate model");
  weights_.assign(models_.size(), 1.0 / models_.size());
}

double SurrogateEnsemble::TargetLoss(const AudioClip &clip,
                                     const std::string &target) const {
  double loss = 0.0;
  for (size_t n = 0; n < models_.size(); ++n) {
    const int idx = models_[n]->LabelIndex(target);
    const double p = models_[n]->Posteriors(clip)[idx];
    loss += weights_[n] * (1.0 - std::clamp(p, 0.0, 1.0));
  }
  return loss;
}

std::vector<char> SurrogateEnsemble::Fooled(const AudioClip &clip,
                                            const std::string &target) const {
  std::vector<char> out;
  for (const auto *m : models_) out.push_back(m->Predict(clip) == target);
  return out;
}

AudioClip MixCarriers(const AudioClip &x, std::span<const Carrier> carriers,
                      std::span<const double> gamma) {
  if (carriers.size() != gamma.size())
    throw ConfigError("carrier and weight counts differ");
  AudioClip out = x;
  for (size_t k = 0; k < carriers.size(); ++k) {
    if (carriers[k].waveform.sample_rate != x.sample_rate)
      throw ConfigError("carrier sample rate differs from the clip");
    if (gamma[k] == 0.0) continue;
    const auto d = TileToLength(carriers[k].waveform.samples, x.size());
    for (size_t i = 0; i < x.size(); ++i) out.samples[i] += gamma[k] * d[i];
  }
  return out;
}

EnsembleObjective::EnsembleObjective(const SurrogateEnsemble &ensemble,
                                     const AudioClip &x, std::string target,
                                     std::span<const Carrier> carriers,
                                     double epsilon, double c,
                                     const SrsScorer *scorer)
    : ensemble_(ensemble), x_(x), target_(std::move(target)), epsilon_(epsilon),
      c_(c), scorer_(scorer) {
  ValidateClip(x_);
  for (size_t n = 0; n < ensemble_.size(); ++n) ensemble_.model(n).LabelIndex(target_);
  for (const auto &carrier : carriers) {
    if (carrier.waveform.sample_rate != x_.sample_rate)
      throw ConfigError("carrier sample rate differs from the clip");
    tiled_.push_back(TileToLength(carrier.waveform.samples, x_.size()));
  }
  if (scorer_ != nullptr) ref_ = std::make_unique<QualityReference>(x_);
}

AudioClip EnsembleObjective::Apply(std::span<const double> gamma) const {
  if (gamma.size() != tiled_.size()) throw ConfigError("carrier and weight counts differ");
  AudioClip out = x_;
  for (size_t k = 0; k < tiled_.size(); ++k) {
    if (gamma[k] == 0.0) continue;
    for (size_t i = 0; i < out.size(); ++i) out.samples[i] += gamma[k] * tiled_[k][i];
  }
  return out;
}

double EnsembleObjective::Srs(const AudioClip &perturbed) const {
  return scorer_ != nullptr ? scorer_->Score(*ref_, perturbed) : 0.0;
}

double EnsembleObjective::operator()(std::span<const double> gamma) const {
  if (!WeightsFeasible(gamma, epsilon_))
    throw ConfigError("carrier weights violate the budget");
  ++evaluations_;
  const AudioClip ae = Apply(gamma);
  double loss = ensemble_.TargetLoss(ae, target_);
  if (scorer_ != nullptr) loss += c_ * (8.0 - scorer_->Score(*ref_, ae));
  return loss;
}

double EnsembleLoss(const SurrogateEnsemble &ensemble, const AudioClip &x,
                    std::span<const double> gamma, std::span<const Carrier> carriers,
                    const std::string &target, double c, const SrsScorer *scorer,
                    double epsilon) {
  if (gamma.size() != carriers.size())
    throw ConfigError("carrier and weight counts differ");
  return EnsembleObjective(ensemble, x, target, carriers, epsilon, c, scorer)(gamma);
}

void VerifyLinfBudget(const AudioClip &x, const AudioClip &ae, double epsilon) {
  if (x.size() != ae.size()) throw InvariantError("adversarial example length changed");
  for (size_t i = 0; i < x.size(); ++i)
    if (!(std::abs(ae.samples[i] - x.samples[i]) <= epsilon))
      throw InvariantError("adversarial example exceeds its L-infinity budget");
}

void VerifyWeightBudget(const AudioClip &x, const AeResult &ae,
                        std::span<const Carrier> carriers, double epsilon) {
  if (!WeightsFeasible(ae.gamma, epsilon))
    throw InvariantError("adversarial example exceeds its carrier-weight budget");
  if (ae.waveform.size() != x.size())
    throw InvariantError("adversarial example length changed");
  const AudioClip expect = MixCarriers(x, carriers, ae.gamma);
  double peak = 1e-300;
  for (double v : expect.samples) peak = std::max(peak, std::abs(v));
  for (size_t i = 0; i < x.size(); ++i)
    if (std::abs(expect.samples[i] - ae.waveform.samples[i]) > 1e-12 * peak)
      throw InvariantError("adversarial example differs from its stated mixture");
}

namespace {

// ae = x + delta with |ae_i - x_i| <= epsilon holding in floating point.
AudioClip AddWithinBall(const AudioClip &x, std::span<const double> delta,
                        double epsilon) {
  AudioClip out = x;
  for (size_t i = 0; i < x.size(); ++i) {
    double v = x.samples[i] + std::clamp(delta[i], -epsilon, epsilon);
    while (std::abs(v - x.samples[i]) > epsilon) v = std::nextafter(v, x.samples[i]);
    out.samples[i] = v;
  }
  return out;
}

double TargetProb(const SpeakerModel &model, const AudioClip &clip, int idx) {
  return std::clamp(model.Posteriors(clip)[idx], 0.0, 1.0);
}

}  // namespace

AeResult PgdAttack(const SpeakerModel &model, const AudioClip &x,
                   const std::string &target, const PgdOptions &options,
                   const SrsScorer *scorer, std::vector<double> *loss_trace) {
  const auto *net = dynamic_cast<const NeuralSpeakerModel *>(&model);
  if (net == nullptr) throw ConfigError("PGD needs a model with input gradients");
  if (!(options.epsilon > 0.0) || options.steps < 0 || !(options.step_size > 0.0))
    throw ConfigError("invalid PGD options");
  ValidateClip(x);
  const int idx = model.LabelIndex(target);
  const double eps = options.epsilon;

  Rng rng(options.seed);
  std::normal_distribution<double> gauss(0.0, options.init_stddev);
  std::vector<double> delta(x.size());
  for (double &d : delta) d = std::clamp(gauss(rng), -eps, eps);

  AeResult r;
  r.method = "pgd";
  r.target = target;
  r.epsilon = eps;
  AudioClip ae = AddWithinBall(x, delta, eps);
  auto lg = net->WaveformLossGradient(ae, idx);
  long evals = 1;
  if (loss_trace) loss_trace->clear();
  for (int t = 0; t < options.steps; ++t) {
    if (loss_trace) loss_trace->push_back(lg.loss);
    double alpha = options.step_size;
    for (int attempt = 0; attempt < 5; ++attempt, alpha *= 0.5) {
      std::vector<double> trial(delta.size());
      for (size_t i = 0; i < delta.size(); ++i) {
        const double s = lg.grad[i] > 0 ? 1.0 : (lg.grad[i] < 0 ? -1.0 : 0.0);
        trial[i] = std::clamp(delta[i] - alpha * s, -eps, eps);
      }
      AudioClip cand = AddWithinBall(x, trial, eps);
      auto cand_lg = net->WaveformLossGradient(cand, idx);
      ++evals;
      if (cand_lg.loss <= lg.loss) {
        delta = std::move(trial);
        ae = std::move(cand);
        lg = std::move(cand_lg);
        break;
      }
    }
  }
  if (loss_trace) loss_trace->push_back(lg.loss);

  VerifyLinfBudget(x, ae, eps);
  r.loss = lg.loss;
  r.steps = options.steps;
  r.restarts = 1;
  r.evaluations = evals;
  r.fooled = {static_cast<char>(model.Predict(ae) == target)};
  if (scorer) {
    r.srs = scorer->Score(x, ae);
    r.srs_provenance = scorer->Provenance();
  }
  r.waveform = std::move(ae);
  return r;
}

AeResult GridFeatureTwistAttack(const SpeakerModel &model, const AudioClip &x,
                                const std::string &target, double c,
                                const SrsScorer *scorer, int *visited) {
  ValidateClip(x);
  const int idx = model.LabelIndex(target);
  std::unique_ptr<QualityReference> ref;
  if (scorer) ref = std::make_unique<QualityReference>(x);

  AeResult best;
  best.method = "grid-feature-twist";
  best.target = target;
  best.loss = std::numeric_limits<double>::infinity();
  int count = 0;
  const auto grid = FeatureTwistGrid();
  std::vector<double> delta(x.size());
  int shifted_for = std::numeric_limits<int>::min();
  AudioClip shifted;
  for (const auto &[s, rate] : grid) {
    if (s != shifted_for) {
      shifted = ShiftPitch(x, s);
      shifted_for = s;
    }
    const AudioClip twisted = rate != 1.0 ? TimeStretch(shifted, rate) : shifted;
    AudioClip ae = x;
    for (size_t i = 0; i < x.size(); ++i) {
      delta[i] = (i < twisted.size() ? twisted.samples[i] : 0.0) - x.samples[i];
      ae.samples[i] = x.samples[i] + delta[i];
    }
    double srs = 0.0;
    double loss = 1.0 - TargetProb(model, ae, idx);
    if (scorer) {
      srs = scorer->Score(*ref, ae);
      loss += c * (8.0 - srs);
    }
    ++count;
    if (loss < best.loss) {
      best.loss = loss;
      best.srs = srs;
      best.semitones = s;
      best.rate = rate;
      best.waveform = std::move(ae);
    }
  }
  if (visited) *visited = count;
  best.evaluations = count;
  best.steps = count;
  best.restarts = 1;
  best.fooled = {static_cast<char>(model.Predict(best.waveform) == target)};
  if (scorer) best.srs_provenance = scorer->Provenance();
  return best;
}

std::vector<std::vector<double>> WeightGrid(int num_carriers, double epsilon) {
  if (num_carriers < 1) throw ConfigError("weight grid needs at least one carrier");
  std::vector<std::vector<double>> out;
  std::vector<int> n(num_carriers, 0);
  // Odometer over integer steps, pruned by the sum bound.
  while (true) {
    std::vector<double> g(num_carriers);
    for (int k = 0; k < num_carriers; ++k)
      g[k] = epsilon * n[k] / kWeightGridSteps;
    out.push_back(ProjectWeights(g, epsilon));
    int k = num_carriers - 1;
    while (k >= 0) {
      ++n[k];
      if (std::accumulate(n.begin(), n.end(), 0) <= kWeightGridSteps) break;
      n[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

AeResult GridEnvWeightAttack(const SurrogateEnsemble &ensemble, const AudioClip &x,
                             const std::string &target,
                             std::span<const Carrier> carriers, double epsilon,
                             double c, const SrsScorer *scorer) {
  if (carriers.empty()) throw ConfigError("weight grid needs at least one carrier");
  if (carriers.size() > static_cast<size_t>(kMaxGridCarriers))
    throw ConfigError("too many carriers for the exhaustive weight grid; use SPSA");
  EnsembleObjective objective(ensemble, x, target, carriers, epsilon, c, scorer);
  AeResult best;
  best.method = "grid-env-weight";
  best.target = target;
  best.epsilon = epsilon;
  best.loss = std::numeric_limits<double>::infinity();
  for (const auto &g : WeightGrid(static_cast<int>(carriers.size()), epsilon)) {
    const double loss = objective(g);
    if (loss < best.loss) {
      best.loss = loss;
      best.gamma = g;
    }
  }
  best.waveform = objective.Apply(best.gamma);
  best.evaluations = objective.evaluations();
  best.steps = static_cast<int>(best.evaluations);
  best.restarts = 1;
  for (const auto &cr : carriers) best.carrier_ids.push_back(cr.id);
  best.fooled = ensemble.Fooled(best.waveform, target);
  if (scorer) {
    best.srs = objective.Srs(best.waveform);
    best.srs_provenance = scorer->Provenance();
  }
  VerifyWeightBudget(x, best, carriers, epsilon);
  return best;
}

std::vector<StageOneEntry> StageOneSelectCandidates(
    const SpeakerModel &surrogate, const CarrierLibrary &library,
    std::span<const AudioClip> eval_clips, const std::string &target, int k,
    double epsilon, const SrsScorer &scorer, int twist_step) {
  if (k < 1) throw ConfigError("stage one needs K >= 1");
  if (library.size() < static_cast<size_t>(k))
    throw ConfigError("carrier library holds fewer sounds than K");
  if (eval_clips.empty()) throw ConfigError("stage one needs evaluation clips");
  if (twist_step < 0) throw ConfigError("twist step must be >= 0");
  const int lo = twist_step == 0 ? 0 : -kMaxTwistSemitones;
  const int hi = twist_step == 0 ? 0 : kMaxTwistSemitones;
  const int idx = surrogate.LabelIndex(target);

  std::vector<QualityReference> refs;
  std::vector<char> clean_is_target;
  for (const auto &x : eval_clips) {
    refs.emplace_back(x);
    clean_is_target.push_back(surrogate.Predict(x) == target);
  }
  const double n = static_cast<double>(eval_clips.size());

  std::vector<StageOneEntry> entries;
  for (const auto &sound : library.carriers) {
    StageOneEntry best;
    bool have = false;
    for (int s = lo; s <= hi; s += std::max(twist_step, 1)) {
      StageOneEntry e;
      e.carrier = twist_step == 0 ? sound : PitchTwistCarrier(sound, s);
      const std::span<const Carrier> one(&e.carrier, 1);
      const double g[1] = {epsilon};
      int matches = 0;
      double srs_sum = 0.0, prob_sum = 0.0;
      for (size_t i = 0; i < eval_clips.size(); ++i) {
        const AudioClip ae = MixCarriers(eval_clips[i], one, g);
        const auto post = surrogate.Posteriors(ae);
        if (ArgMax(post) == idx && !clean_is_target[i]) ++matches;
        prob_sum += post[idx];
        srs_sum += scorer.Score(refs[i], ae);
      }
      e.match_rate = matches / n;
      e.srs = srs_sum / n;
      e.mean_target_prob = prob_sum / n;
      e.tpr = e.match_rate / (8.0 - e.srs);
      if (!have || e.tpr > best.tpr ||
          (e.tpr == best.tpr && e.mean_target_prob > best.mean_target_prob)) {
        best = std::move(e);
        have = true;
      }
    }
    entries.push_back(std::move(best));
  }
  std::sort(entries.begin(), entries.end(),
            [](const StageOneEntry &a, const StageOneEntry &b) {
              if (a.tpr != b.tpr) return a.tpr > b.tpr;
              if (a.mean_target_prob != b.mean_target_prob)
                return a.mean_target_prob > b.mean_target_prob;
              return a.carrier.id < b.carrier.id;
            });
  entries.resize(k);
  return entries;
}

SpsaResult SpsaMinimize(
    const std::function<double(std::span<const double>)> &objective, int dim,
    const SpsaOptions &o) {
  if (dim < 1) throw ConfigError("SPSA needs at least one weight");
  if (o.steps < 0 || o.restarts < 1 || !(o.epsilon > 0.0))
    throw ConfigError("invalid SPSA options");
  const double stability = 0.1 * o.steps;
  SpsaResult out;
  out.loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < o.restarts; ++r) {
    Rng rng(DeriveSeed(o.seed, static_cast<uint64_t>(r)));
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    std::vector<double> g(dim);
    double total = 0.0;
    for (double &v : g) total += (v = expo(rng));
    const double scale = unit(rng) * o.epsilon / total;
    for (double &v : g) v *= scale;
    g = ProjectWeights(g, o.epsilon);

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_g = g;
    auto consider = [&](const std::vector<double> &p, double loss) {
      if (loss < best) {
        best = loss;
        best_g = p;
      }
    };
    double a = 0.0;
    std::vector<double> delta(dim), plus(dim), minus(dim), ghat(dim);
    for (int t = 1; t <= o.steps; ++t) {
      const double ct = o.c0_fraction * o.epsilon / std::pow(t, o.gamma);
      for (int k = 0; k < dim; ++k) {
        delta[k] = coin(rng) ? 1.0 : -1.0;
        plus[k] = g[k] + ct * delta[k];
        minus[k] = g[k] - ct * delta[k];
      }
      plus = ProjectWeights(plus, o.epsilon);
      minus = ProjectWeights(minus, o.epsilon);
      const double lp = objective(plus), lm = objective(minus);
      out.evaluations += 2;
      consider(plus, lp);
      consider(minus, lm);
      double gmax = 0.0;
      for (int k = 0; k < dim; ++k) {
        ghat[k] = (lp - lm) / (2.0 * ct * delta[k]);
        gmax = std::max(gmax, std::abs(ghat[k]));
      }
      if (a == 0.0 && gmax > 0.0)
        a = o.first_move * o.epsilon * std::pow(t + stability, o.alpha) / gmax;
      const double at = a / std::pow(t + stability, o.alpha);
      for (int k = 0; k < dim; ++k) g[k] -= at * ghat[k];
      g = ProjectWeights(g, o.epsilon);
    }
    const double final_loss = objective(g);
    ++out.evaluations;
    consider(g, final_loss);
    out.restart_losses.push_back(best);
    if (best < out.loss) {
      out.loss = best;
      out.gamma = best_g;
    }
  }
  return out;
}

AeResult SpsaAttack(const SurrogateEnsemble &ensemble, const AudioClip &x,
                    const std::string &target, std::span<const Carrier> candidates,
                    double c, const SrsScorer *scorer, const SpsaOptions &options) {
  if (candidates.empty()) throw ConfigError("SPSA attack needs candidate carriers");
  EnsembleObjective objective(ensemble, x, target, candidates, options.epsilon, c,
                              scorer);
  const SpsaResult s = SpsaMinimize(
      [&](std::span<const double> g) { return objective(g); },
      static_cast<int>(candidates.size()), options);
  AeResult r;
  r.method = "spsa";
  r.target = target;
  r.epsilon = options.epsilon;
  r.gamma = s.gamma;
  r.loss = s.loss;
  r.waveform = objective.Apply(r.gamma);
  r.steps = options.steps;
  r.restarts = options.restarts;
  r.evaluations = s.evaluations;
  for (const auto &cr : candidates) r.carrier_ids.push_back(cr.id);
  r.fooled = ensemble.Fooled(r.waveform, target);
  if (scorer) {
    r.srs = objective.Srs(r.waveform);
    r.srs_provenance = scorer->Provenance();
  }
  VerifyWeightBudget(x, r, candidates, options.epsilon);
  return r;
}

}  // namespace parrot
