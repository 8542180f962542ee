// src/gmm.cc

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

#include "parrot/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "parrot/common.h"

namespace parrot {

namespace {

double LogSumExp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void FrameSet::Append(std::span<const double> row) {
  if (dim == 0) dim = static_cast<int>(row.size());
  if (static_cast<int>(row.size()) != dim)
    throw ConfigError("frame dimension mismatch");
  data.insert(data.end(), row.begin(), row.end());
}

DiagGmm::DiagGmm(std::vector<double> weights, std::vector<double> means,
                 std::vector<double> vars, int dim)
    : dim_(dim),
      weights_(std::move(weights)),
      means_(std::move(means)),
      vars_(std::move(vars)) {
  const size_t k = weights_.size();
  if (dim_ < 1 || k < 1 || means_.size() != k * dim_ || vars_.size() != k * dim_)
    throw ConfigError("inconsistent GMM parameter shapes");
  Precompute();
}

void DiagGmm::Precompute() {
  const int k = num_components();
  log_consts_.assign(k, 0.0);
  for (int c = 0; c < k; ++c) {
    double s = std::log(weights_[c]);
    for (int d = 0; d < dim_; ++d)
      s -= 0.5 * std::log(2.0 * std::numbers::pi * var(c, d));
    log_consts_[c] = s;
  }
}

void DiagGmm::ComponentLogLikes(std::span<const double> x,
                                std::vector<double> *out) const {
  const int k = num_components();
  out->resize(k);
  for (int c = 0; c < k; ++c) {
    double q = 0.0;
    const double *mu = means_.data() + static_cast<size_t>(c) * dim_;
    const double *v = vars_.data() + static_cast<size_t>(c) * dim_;
    for (int d = 0; d < dim_; ++d) {
      const double diff = x[d] - mu[d];
      q += diff * diff / v[d];
    }
    (*out)[c] = log_consts_[c] - 0.5 * q;
  }
}

double DiagGmm::LogLikelihood(std::span<const double> x) const {
  std::vector<double> ll;
  ComponentLogLikes(x, &ll);
  return LogSumExp(ll);
}

double DiagGmm::AverageLogLikelihood(const FrameSet &frames) const {
  const size_t n = frames.num_frames();
  if (n == 0) throw ConfigError("no frames to score");
  double total = 0.0;
  std::vector<double> ll;
  for (size_t t = 0; t < n; ++t) {
    ComponentLogLikes(frames.frame(t), &ll);
    total += LogSumExp(ll);
  }
  return total / n;
}

DiagGmm DiagGmm::WithMeans(std::vector<double> means) const {
  return DiagGmm(weights_, std::move(means), vars_, dim_);
}

Json DiagGmm::ToJson() const {
  return Json{{"dim", dim_}, {"weights", weights_}, {"means", means_},
              {"vars", vars_}};
}

DiagGmm DiagGmm::FromJson(const Json &j) {
  return DiagGmm(j.at("weights").get<std::vector<double>>(),
                 j.at("means").get<std::vector<double>>(),
                 j.at("vars").get<std::vector<double>>(),
                 j.at("dim").get<int>());
}

UbmTrainResult TrainUbm(const FrameSet &frames, int components, int iterations,
                        uint64_t seed) {
  if (components < 1) throw ConfigError("UBM needs at least one component");
  const size_t n = frames.num_frames();
  const int dim = frames.dim;
  if (n < static_cast<size_t>(10) * components * std::max(dim, 1))
    throw DataError("insufficient frames for UBM training");

  std::vector<double> gmean(dim, 0.0), gvar(dim, 0.0);
  for (size_t t = 0; t < n; ++t)
    for (int d = 0; d < dim; ++d) gmean[d] += frames.frame(t)[d];
  for (double &m : gmean) m /= n;
  for (size_t t = 0; t < n; ++t)
    for (int d = 0; d < dim; ++d) {
      const double diff = frames.frame(t)[d] - gmean[d];
      gvar[d] += diff * diff;
    }
  for (double &v : gvar) v = std::max(v / n, kGmmVarianceFloor);

  // Seeding by squared-distance sampling (variance-normalized).
  Rng rng(seed);
  std::vector<double> weights(components, 1.0 / components);
  std::vector<double> means, vars;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  size_t pick = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
  for (int c = 0; c < components; ++c) {
    auto f = frames.frame(pick);
    means.insert(means.end(), f.begin(), f.end());
    vars.insert(vars.end(), gvar.begin(), gvar.end());
    if (c + 1 == components) break;
    double total = 0.0;
    for (size_t t = 0; t < n; ++t) {
      auto x = frames.frame(t);
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) d2 += (x[d] - f[d]) * (x[d] - f[d]) / gvar[d];
      nearest[t] = std::min(nearest[t], d2);
      total += nearest[t];
    }
    if (total <= 0.0) {
      pick = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
      continue;
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    pick = n - 1;
    for (size_t t = 0; t < n; ++t) {
      u -= nearest[t];
      if (u < 0.0) {
        pick = t;
        break;
      }
    }
  }
  if (components == 1) means = gmean;

  UbmTrainResult result;
  DiagGmm gmm(weights, means, vars, dim);
  std::vector<double> ll, occ(components), sum_x, sum_xx;
  for (int it = 0; it <= iterations; ++it) {
    std::fill(occ.begin(), occ.end(), 0.0);
    sum_x.assign(static_cast<size_t>(components) * dim, 0.0);
    sum_xx.assign(static_cast<size_t>(components) * dim, 0.0);
    double total = 0.0;
    for (size_t t = 0; t < n; ++t) {
      auto x = frames.frame(t);
      gmm.ComponentLogLikes(x, &ll);
      const double lse = LogSumExp(ll);
      total += lse;
      for (int c = 0; c < components; ++c) {
        const double g = std::exp(ll[c] - lse);
        if (g == 0.0) continue;
        occ[c] += g;
        double *sx = sum_x.data() + static_cast<size_t>(c) * dim;
        double *sxx = sum_xx.data() + static_cast<size_t>(c) * dim;
        for (int d = 0; d < dim; ++d) {
          sx[d] += g * x[d];
          sxx[d] += g * x[d] * x[d];
        }
      }
    }
    result.log_likelihood_trace.push_back(total / n);
    if (it == iterations) break;

    std::vector<double> w(components), mu = gmm.means(), var = gmm.vars();
    for (int c = 0; c < components; ++c) {
      w[c] = occ[c] / n;
      if (occ[c] < 1e-10) continue;  // empty component keeps its Gaussian
      for (int d = 0; d < dim; ++d) {
        const size_t i = static_cast<size_t>(c) * dim + d;
        const double m = sum_x[i] / occ[c];
        mu[i] = m;
        // Constrained maximiser of the variance under the floor.
        var[i] = std::max(sum_xx[i] / occ[c] - m * m, kGmmVarianceFloor);
      }
    }
    // A component with zero occupancy gets weight 0; keep it representable.
    for (double &x : w) x = std::max(x, std::numeric_limits<double>::min());
    gmm = DiagGmm(w, mu, var, dim);
  }
  result.model = gmm;
  return result;
}

DiagGmm MapAdaptMeans(const DiagGmm &ubm, const FrameSet &frames,
                      double relevance) {
  const size_t n = frames.num_frames();
  if (n == 0) throw ConfigError("MAP adaptation needs at least one frame");
  if (frames.dim != ubm.dim()) throw ConfigError("feature dim differs from UBM");
  if (std::isinf(relevance)) return ubm;
  if (!(relevance >= 0.0)) throw ConfigError("relevance factor must be >= 0");
  const int k = ubm.num_components(), dim = ubm.dim();
  std::vector<double> occ(k, 0.0), sum_x(static_cast<size_t>(k) * dim, 0.0), ll;
  for (size_t t = 0; t < n; ++t) {
    auto x = frames.frame(t);
    ubm.ComponentLogLikes(x, &ll);
    const double lse = LogSumExp(ll);
    for (int c = 0; c < k; ++c) {
      const double g = std::exp(ll[c] - lse);
      occ[c] += g;
      for (int d = 0; d < dim; ++d) sum_x[static_cast<size_t>(c) * dim + d] += g * x[d];
    }
  }
  std::vector<double> means = ubm.means();
  for (int c = 0; c < k; ++c) {
    if (occ[c] <= 0.0) continue;
    const double alpha = occ[c] / (occ[c] + relevance);
    for (int d = 0; d < dim; ++d) {
      const size_t i = static_cast<size_t>(c) * dim + d;
      means[i] = alpha * (sum_x[i] / occ[c]) + (1.0 - alpha) * means[i];
    }
  }
  return ubm.WithMeans(std::move(means));
}

}  // namespace parrot
