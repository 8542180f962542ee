// parrot/gmm.h

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

#ifndef PARROT_GMM_H_
#define PARROT_GMM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "parrot/io.h"

namespace parrot {

inline constexpr double kGmmVarianceFloor = 1e-4;
inline constexpr double kDefaultRelevanceFactor = 16.0;

/// Frames stacked row-major (num_frames x dim).
struct FrameSet {
  int dim = 0;
  std::vector<double> data;

  size_t num_frames() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> frame(size_t i) const {
    return {data.data() + i * dim, static_cast<size_t>(dim)};
  }
  void Append(std::span<const double> row);
};

/// Diagonal-covariance Gaussian mixture.
class DiagGmm {
 public:
  DiagGmm() = default;
  DiagGmm(std::vector<double> weights, std::vector<double> means,
          std::vector<double> vars, int dim);

  int num_components() const { return static_cast<int>(weights_.size()); }
  int dim() const { return dim_; }
  const std::vector<double> &weights() const { return weights_; }
  const std::vector<double> &means() const { return means_; }
  const std::vector<double> &vars() const { return vars_; }
  double mean(int k, int d) const { return means_[k * dim_ + d]; }
  double var(int k, int d) const { return vars_[k * dim_ + d]; }

  /// Per-component log(w_k N(x; mu_k, var_k)).
  void ComponentLogLikes(std::span<const double> x,
                         std::vector<double> *out) const;
  double LogLikelihood(std::span<const double> x) const;
  /// Average per-frame log-likelihood.
  double AverageLogLikelihood(const FrameSet &frames) const;

  /// Same model with replaced means (MAP adaptation result).
  DiagGmm WithMeans(std::vector<double> means) const;

  Json ToJson() const;
  static DiagGmm FromJson(const Json &j);

 private:
  void Precompute();

  int dim_ = 0;
  std::vector<double> weights_, means_, vars_;
  std::vector<double> log_consts_;  // log w_k - 0.5 sum log(2 pi var)
};

struct UbmTrainResult {
  DiagGmm model;
  /// Average log-likelihood of the data under the parameters at the start of
  /// each iteration plus the final model (iterations + 1 entries).
  std::vector<double> log_likelihood_trace;
};

/// EM training.  Means are seeded by squared-distance sampling over frames, variances
/// from the global variance.  Throws DataError when there are fewer than
/// 10 x components x dim frames.
UbmTrainResult TrainUbm(const FrameSet &frames, int components, int iterations,
                        uint64_t seed);

/// Mean-only MAP adaptation: mu' = a mu_data + (1 - a) mu, a = n / (n + r).
/// r = +inf returns the UBM unchanged.  Throws ConfigError on empty data.
DiagGmm MapAdaptMeans(const DiagGmm &ubm, const FrameSet &frames,
                      double relevance = kDefaultRelevanceFactor);

}  // namespace parrot

#endif  // PARROT_GMM_H_
