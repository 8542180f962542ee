// parrot/attack.h

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

// Adversarial example generators: sign-gradient PGD on a neural surrogate,
// exhaustive grids over feature twists and carrier weights, carrier
// preselection by transferability-perception ratio and SPSA over the
// weights of an ensemble of surrogates.

#ifndef PARROT_ATTACK_H_
#define PARROT_ATTACK_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parrot/audio.h"
#include "parrot/carriers.h"
#include "parrot/io.h"
#include "parrot/perception.h"
#include "parrot/speaker_model.h"

namespace parrot {

struct AttackConfig {
  std::string target;
  Task task = Task::kCsi;
  double pgd_epsilon = 0.05;   // L-infinity
  int pgd_steps = 100;
  double pgd_step_size = 0.002;
  double spsa_epsilon = 0.08;  // bound on the sum of carrier weights
  int spsa_steps = 500;
  int spsa_restarts = 50;
  double balance_c = 0.1;
  int num_candidates = 50;     // K
  int twist_step = 1;          // semitone stride of the stage-1 sweep
  uint64_t seed = 1;
};

void to_json(Json &j, const AttackConfig &c);
void from_json(const Json &j, AttackConfig &c);

/// Euclidean projection onto {g >= 0, sum g <= epsilon}.  The result sums
/// to at most epsilon in floating point.
std::vector<double> ProjectWeights(std::span<const double> gamma, double epsilon);

/// True when every weight is >= 0 and the sum is <= epsilon.
bool WeightsFeasible(std::span<const double> gamma, double epsilon);

/// Uniformly weighted surrogates (non-owning).
class SurrogateEnsemble {
 public:
  explicit SurrogateEnsemble(std::vector<const SpeakerModel *> models);

  size_t size() const { return models_.size(); }
  const SpeakerModel &model(size_t i) const { return *models_[i]; }
  double weight(size_t i) const { return weights_[i]; }

  /// sum_n w_n (1 - p_n(target | clip)).  Throws ConfigError if a model
  /// does not enroll `target`.
  double TargetLoss(const AudioClip &clip, const std::string &target) const;
  /// Per-model closed-set prediction equals `target`.
  std::vector<char> Fooled(const AudioClip &clip, const std::string &target) const;

 private:
  std::vector<const SpeakerModel *> models_;
  std::vector<double> weights_;
};

/// x + sum_k gamma_k delta_k with every carrier tiled to the length of x.
AudioClip MixCarriers(const AudioClip &x, std::span<const Carrier> carriers,
                      std::span<const double> gamma);

/// Ensemble loss of a weight vector for one clip, target and carrier set.
/// Carriers are tiled and the clip analysis cached once; each call counts
/// one evaluation.
class EnsembleObjective {
 public:
  /// `scorer` may be null, which drops the perception term.
  EnsembleObjective(const SurrogateEnsemble &ensemble, const AudioClip &x,
                    std::string target, std::span<const Carrier> carriers,
                    double epsilon, double c, const SrsScorer *scorer);

  /// Throws ConfigError on a size mismatch or an infeasible gamma.
  double operator()(std::span<const double> gamma) const;
  AudioClip Apply(std::span<const double> gamma) const;
  double Srs(const AudioClip &perturbed) const;

  size_t num_carriers() const { return tiled_.size(); }
  double epsilon() const { return epsilon_; }
  long evaluations() const { return evaluations_; }

 private:
  const SurrogateEnsemble &ensemble_;
  AudioClip x_;
  std::string target_;
  std::vector<std::vector<double>> tiled_;
  double epsilon_;
  double c_;
  const SrsScorer *scorer_;
  std::unique_ptr<QualityReference> ref_;
  mutable long evaluations_ = 0;
};

/// Free-function form: sum_n w_n (1 - p_n(y_t | x + sum gamma delta))
/// + c (8 - SRS(x, x + sum gamma delta)).
double EnsembleLoss(const SurrogateEnsemble &ensemble, const AudioClip &x,
                    std::span<const double> gamma, std::span<const Carrier> carriers,
                    const std::string &target, double c, const SrsScorer *scorer,
                    double epsilon);

struct AeResult {
  std::string method;
  AudioClip waveform;
  std::string target;
  double loss = 0.0;  // final value of the objective the method minimized
  double srs = 0.0;   // 0 when no scorer was supplied
  std::string srs_provenance;
  std::vector<char> fooled;  // per surrogate
  int steps = 0;
  int restarts = 0;
  long evaluations = 0;
  double epsilon = 0.0;
  // Carrier-weight attacks.
  std::vector<double> gamma;
  std::vector<std::string> carrier_ids;
  // Feature-twist attack.
  double semitones = 0.0;
  double rate = 1.0;
};

/// Throws InvariantError unless max |ae - x| <= epsilon.
void VerifyLinfBudget(const AudioClip &x, const AudioClip &ae, double epsilon);
/// Throws InvariantError unless gamma is feasible and the waveform equals
/// x + sum gamma delta recomputed from the carriers.
void VerifyWeightBudget(const AudioClip &x, const AeResult &ae,
                        std::span<const Carrier> carriers, double epsilon);

struct PgdOptions {
  double epsilon = 0.05;
  int steps = 100;
  double step_size = 0.002;
  double init_stddev = 0.01;  // Gaussian start, clipped to the budget
  uint64_t seed = 1;
};

/// Targeted sign-gradient descent on the cross-entropy with projection onto
/// the L-infinity ball after every step.  A step that raises the loss is
/// retried at half the step size (up to four times) and otherwise skipped.
/// `loss_trace`, if given, receives the loss before every step and at the
/// end.  Throws ConfigError for a model without input gradients.
AeResult PgdAttack(const SpeakerModel &model, const AudioClip &x,
                   const std::string &target, const PgdOptions &options,
                   const SrsScorer *scorer = nullptr,
                   std::vector<double> *loss_trace = nullptr);

/// Minimizes (1 - p(target)) + c (8 - SRS) over the 510-point twist grid.
/// Ties keep the earlier grid point.  `visited` counts scored points.
AeResult GridFeatureTwistAttack(const SpeakerModel &model, const AudioClip &x,
                                const std::string &target, double c,
                                const SrsScorer *scorer, int *visited = nullptr);

inline constexpr int kMaxGridCarriers = 3;
inline constexpr int kWeightGridSteps = 10;  // step = epsilon / 10

/// Every gamma with entries in {0, eps/10, ..., eps} and sum <= eps, in
/// lexicographic order of the integer steps.
std::vector<std::vector<double>> WeightGrid(int num_carriers, double epsilon);

/// Exhaustive minimization of the ensemble loss over WeightGrid.  Throws
/// ConfigError for more than kMaxGridCarriers carriers.
AeResult GridEnvWeightAttack(const SurrogateEnsemble &ensemble, const AudioClip &x,
                             const std::string &target,
                             std::span<const Carrier> carriers, double epsilon,
                             double c, const SrsScorer *scorer);

struct StageOneEntry {
  Carrier carrier;  // pitch-twisted to its best shift
  double tpr = 0.0;
  double match_rate = 0.0;
  double srs = 0.0;
  double mean_target_prob = 0.0;
};

/// For every library sound and every shift in {-25, ..., 25} (stride
/// `twist_step`; 0 keeps the sounds unshifted), mixes the twisted sound
/// into each evaluation clip at weight `epsilon` and measures the surrogate match rate m (prediction
/// becomes `target` where the clean clip was not) and the mean SRS.  Each
/// sound keeps its best shift by TPR = m / (8 - SRS); the top K are
/// returned by TPR, then mean target probability, then id.  Throws
/// ConfigError when the library holds fewer than K sounds.
std::vector<StageOneEntry> StageOneSelectCandidates(
    const SpeakerModel &surrogate, const CarrierLibrary &library,
    std::span<const AudioClip> eval_clips, const std::string &target, int k,
    double epsilon, const SrsScorer &scorer, int twist_step = 1);

struct SpsaOptions {
  double epsilon = 0.08;
  int steps = 500;
  int restarts = 50;
  uint64_t seed = 1;
  double c0_fraction = 0.1;     // perturbation size c_t starts at this * eps
  double first_move = 0.1;      // first update moves at most this * eps
  double alpha = 0.602;
  double gamma = 0.101;
};

struct SpsaResult {
  std::vector<double> gamma;
  double loss = 0.0;
  std::vector<double> restart_losses;  // best loss of each restart, in order
  long evaluations = 0;
};

/// Projected SPSA with Rademacher directions from random feasible starts.
/// The two probe points of every step are projected before evaluation; a
/// restart reports the best point it evaluated, including its final
/// iterate.  At most 2 * steps * restarts + restarts evaluations.
SpsaResult SpsaMinimize(
    const std::function<double(std::span<const double>)> &objective, int dim,
    const SpsaOptions &options);

/// Two-stage attack core: SPSA over the weights of `candidates` on the
/// ensemble loss.  Throws ConfigError on an empty candidate set.
AeResult SpsaAttack(const SurrogateEnsemble &ensemble, const AudioClip &x,
                    const std::string &target, std::span<const Carrier> candidates,
                    double c, const SrsScorer *scorer, const SpsaOptions &options);

}  // namespace parrot

#endif  // PARROT_ATTACK_H_
