// src/mlp.cc

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

#include "parrot/mlp.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parrot/common.h"

namespace parrot {

void to_json(Json &j, const MlpConfig &c) {
  j = Json{{"hidden", c.hidden},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"weight_decay", c.weight_decay},
           {"seed", c.seed}};
}

void from_json(const Json &j, MlpConfig &c) {
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double &v : p) {
    v = std::exp(v - m);
    s += v;
  }
  for (double &v : p) v /= s;
  return p;
}

void Mlp::Forward(std::span<const double> x,
                  std::vector<std::vector<double>> *acts) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw ConfigError("MLP input has wrong dimension");
  acts->resize(layers_.size() + 1);
  auto &in = (*acts)[0];
  in.resize(input_dim_);
  for (int i = 0; i < input_dim_; ++i) in[i] = (x[i] - in_mean_[i]) / in_scale_[i];
  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer &layer = layers_[l];
    const auto &a = (*acts)[l];
    auto &z = (*acts)[l + 1];
    z.assign(layer.out, 0.0);
    for (int o = 0; o < layer.out; ++o) {
      double s = layer.b[o];
      const double *w = layer.w.data() + static_cast<size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) s += w[i] * a[i];
      z[o] = (l + 1 < layers_.size()) ? std::max(s, 0.0) : s;
    }
  }
}

std::vector<double> Mlp::Logits(std::span<const double> x) const {
  std::vector<std::vector<double>> acts;
  Forward(x, &acts);
  return acts.back();
}

std::vector<double> Mlp::Probabilities(std::span<const double> x) const {
  return Softmax(Logits(x));
}

std::vector<double> Mlp::InputGradient(
    std::span<const double> x, std::span<const double> grad_logits) const {
  std::vector<std::vector<double>> acts;
  Forward(x, &acts);
  std::vector<double> g(grad_logits.begin(), grad_logits.end());
  for (size_t l = layers_.size(); l-- > 0;) {
    const Layer &layer = layers_[l];
    if (l + 1 < layers_.size())
      for (int o = 0; o < layer.out; ++o)
        if (acts[l + 1][o] <= 0.0) g[o] = 0.0;
    std::vector<double> prev(layer.in, 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double *w = layer.w.data() + static_cast<size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) prev[i] += w[i] * g[o];
    }
    g = std::move(prev);
  }
  for (int i = 0; i < input_dim_; ++i) g[i] /= in_scale_[i];
  return g;
}

Mlp Mlp::Train(const std::vector<std::vector<double>> &inputs,
               const std::vector<int> &targets, int num_classes,
               const MlpConfig &config, std::vector<double> *epoch_losses) {
  const size_t n = inputs.size();
  if (n == 0 || targets.size() != n) throw ConfigError("MLP training set empty or ragged");
  if (num_classes < 2) throw ConfigError("MLP needs at least two classes");
  for (int t : targets)
    if (t < 0 || t >= num_classes) throw ConfigError("MLP target out of range");
  Mlp net;
  net.input_dim_ = static_cast<int>(inputs[0].size());
  net.num_classes_ = num_classes;
  const int dim = net.input_dim_;
  net.in_mean_.assign(dim, 0.0);
  net.in_scale_.assign(dim, 0.0);
  for (const auto &x : inputs) {
    if (static_cast<int>(x.size()) != dim) throw ConfigError("ragged MLP inputs");
    for (int i = 0; i < dim; ++i) net.in_mean_[i] += x[i];
  }
  for (double &m : net.in_mean_) m /= n;
  for (const auto &x : inputs)
    for (int i = 0; i < dim; ++i)
      net.in_scale_[i] += (x[i] - net.in_mean_[i]) * (x[i] - net.in_mean_[i]);
  for (double &s : net.in_scale_) s = std::max(std::sqrt(s / n), 1e-6);

  Rng rng(config.seed);
  std::vector<int> sizes = {dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(num_classes);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / layer.in));
    layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
    for (double &w : layer.w) w = init(rng);
    layer.b.assign(layer.out, 0.0);
    net.layers_.push_back(std::move(layer));
  }

  // Adam state per layer.
  const size_t num_layers = net.layers_.size();
  std::vector<std::vector<double>> mw(num_layers), vw(num_layers), mb(num_layers),
      vb(num_layers), gw(num_layers), gb(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    mw[l].assign(net.layers_[l].w.size(), 0.0);
    vw[l] = mw[l];
    gw[l] = mw[l];
    mb[l].assign(net.layers_[l].b.size(), 0.0);
    vb[l] = mb[l];
    gb[l] = mb[l];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  long step = 0;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> acts;
  const size_t batch = static_cast<size_t>(std::max(config.batch_size, 1));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t end = std::min(n, start + batch);
      for (size_t l = 0; l < num_layers; ++l) {
        std::fill(gw[l].begin(), gw[l].end(), 0.0);
        std::fill(gb[l].begin(), gb[l].end(), 0.0);
      }
      for (size_t s = start; s < end; ++s) {
        const size_t idx = order[s];
        net.Forward(inputs[idx], &acts);
        std::vector<double> g = Softmax(acts.back());
        epoch_loss -= std::log(std::max(g[targets[idx]], 1e-300));
        g[targets[idx]] -= 1.0;
        for (size_t l = num_layers; l-- > 0;) {
          const Layer &layer = net.layers_[l];
          if (l + 1 < num_layers)
            for (int o = 0; o < layer.out; ++o)
              if (acts[l + 1][o] <= 0.0) g[o] = 0.0;
          std::vector<double> prev(layer.in, 0.0);
          for (int o = 0; o < layer.out; ++o) {
            gb[l][o] += g[o];
            double *gwo = gw[l].data() + static_cast<size_t>(o) * layer.in;
            const double *w = layer.w.data() + static_cast<size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
              gwo[i] += g[o] * acts[l][i];
              prev[i] += w[i] * g[o];
            }
          }
          g = std::move(prev);
        }
      }
      ++step;
      const double scale = 1.0 / static_cast<double>(end - start);
      const double c1 = 1.0 - std::pow(kBeta1, step);
      const double c2 = 1.0 - std::pow(kBeta2, step);
      for (size_t l = 0; l < num_layers; ++l) {
        Layer &layer = net.layers_[l];
        for (size_t i = 0; i < layer.w.size(); ++i) {
          const double g = gw[l][i] * scale + config.weight_decay * layer.w[i];
          mw[l][i] = kBeta1 * mw[l][i] + (1 - kBeta1) * g;
          vw[l][i] = kBeta2 * vw[l][i] + (1 - kBeta2) * g * g;
          layer.w[i] -= config.learning_rate * (mw[l][i] / c1) /
                        (std::sqrt(vw[l][i] / c2) + kEps);
        }
        for (size_t i = 0; i < layer.b.size(); ++i) {
          const double g = gb[l][i] * scale;
          mb[l][i] = kBeta1 * mb[l][i] + (1 - kBeta1) * g;
          vb[l][i] = kBeta2 * vb[l][i] + (1 - kBeta2) * g * g;
          layer.b[i] -= config.learning_rate * (mb[l][i] / c1) /
                        (std::sqrt(vb[l][i] / c2) + kEps);
        }
      }
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / n);
  }
  return net;
}

Json Mlp::ToJson() const {
  Json layers = Json::array();
  for (const Layer &l : layers_)
    layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  return Json{{"input_dim", input_dim_},
              {"num_classes", num_classes_},
              {"in_mean", in_mean_},
              {"in_scale", in_scale_},
              {"layers", layers}};
}

Mlp Mlp::FromJson(const Json &j) {
  Mlp net;
  net.input_dim_ = j.at("input_dim").get<int>();
  net.num_classes_ = j.at("num_classes").get<int>();
  net.in_mean_ = j.at("in_mean").get<std::vector<double>>();
  net.in_scale_ = j.at("in_scale").get<std::vector<double>>();
  for (const auto &l : j.at("layers")) {
    Layer layer;
    layer.in = l.at("in").get<int>();
    layer.out = l.at("out").get<int>();
    layer.w = l.at("w").get<std::vector<double>>();
    layer.b = l.at("b").get<std::vector<double>>();
    if (layer.w.size() != static_cast<size_t>(layer.in) * layer.out ||
        static_cast<int>(layer.b.size()) != layer.out)
      throw ConfigError("MLP layer shape mismatch in model file");
    net.layers_.push_back(std::move(layer));
  }
  if (net.layers_.empty() || net.layers_.front().in != net.input_dim_ ||
      net.layers_.back().out != net.num_classes_)
    throw ConfigError("MLP model file inconsistent");
  return net;
}

}  // namespace parrot
