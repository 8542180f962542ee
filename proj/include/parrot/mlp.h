// parrot/mlp.h

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

#ifndef PARROT_MLP_H_
#define PARROT_MLP_H_

#include <cstdint>
#include <span>
#include <vector>

#include "parrot/io.h"

namespace parrot {

struct MlpConfig {
  std::vector<int> hidden = {64, 32};
  int epochs = 150;
  int batch_size = 32;
  double learning_rate = 2e-3;
  double weight_decay = 1e-4;
  uint64_t seed = 1;
};

void to_json(Json &j, const MlpConfig &c);
void from_json(const Json &j, MlpConfig &c);

/// Fully connected ReLU network with a softmax output.  Inputs are
/// standardized with statistics frozen at training time.
class Mlp {
 public:
  Mlp() = default;

  /// Mini-batch Adam on cross-entropy.  `epoch_losses`, if given, receives the
  /// mean training loss of every epoch.
  static Mlp Train(const std::vector<std::vector<double>> &inputs,
                   const std::vector<int> &targets, int num_classes,
                   const MlpConfig &config,
                   std::vector<double> *epoch_losses = nullptr);

  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }

  std::vector<double> Logits(std::span<const double> x) const;
  std::vector<double> Probabilities(std::span<const double> x) const;

  /// d loss / d x given d loss / d logits at input x.
  std::vector<double> InputGradient(std::span<const double> x,
                                    std::span<const double> grad_logits) const;

  Json ToJson() const;
  static Mlp FromJson(const Json &j);

 private:
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // out x in
    std::vector<double> b;
  };

  // Activations after each layer (post-ReLU for hidden layers, logits last);
  // acts[0] is the standardized input.
  void Forward(std::span<const double> x,
               std::vector<std::vector<double>> *acts) const;

  int input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<double> in_mean_, in_scale_;
  std::vector<Layer> layers_;
};

std::vector<double> Softmax(std::span<const double> logits);

}  // namespace parrot

#endif  // PARROT_MLP_H_
