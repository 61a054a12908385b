// Copyright 2026 The IMIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IMIL_MODEL_HPP_
#define IMIL_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "imil/types.hpp"

namespace imil {

enum class Arch { kLinear, kMlp };

/// Differentiable instance scorer over flattened payloads. Parameters live in
/// one flat vector; layer weights are column-major slices of it.
struct ScorerModel {
  Arch arch = Arch::kMlp;
  int input_dim = 0;
  int num_classes = 1;
  std::vector<int> hidden;  // empty for linear

  VecX params;

  /// Layer sizes including input and output.
  std::vector<int> layer_dims() const;
};

int param_count(Arch arch, int input_dim, int num_classes,
                const std::vector<int>& hidden);

/// Glorot-uniform weights, zero biases, deterministic given seed.
ScorerModel make_scorer(Arch arch, int input_dim, int num_classes,
                        const std::vector<int>& hidden, std::uint64_t seed);

/// Batch of probabilities (rows = batch, cols = classes), sigmoid per class,
/// clamped to the open interval (0,1). Throws on input width mismatch.
MatX forward(const ScorerModel& model, const MatX& inputs);

struct LossGrad {
  double loss = 0.0;
  VecX grad;
};

/// Weighted mean binary cross-entropy over batch x classes, normalized by
/// batch_size * num_classes so all-zero weights give exactly zero loss and
/// gradient. Scores are clamped to [1e-7, 1-1e-7] inside the loss; the
/// gradient is the exact gradient of the clamped objective. Throws on an
/// empty batch or weights outside [0,1].
LossGrad loss_and_grad(const ScorerModel& model, const MatX& inputs,
                       const MatX& targets, const MatX& weights);

struct OptimizerState {
  VecX m;  // first moment
  VecX v;  // second moment
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimizerState make_optimizer(const ScorerModel& model);

/// Standard Adam update with bias correction. Throws on non-finite gradient
/// entries or shape mismatch.
void adam_step(ScorerModel& model, OptimizerState& opt, const VecX& grad,
               double lr);

/// base_lr * 0.5 * (1 + cos(pi * epoch / total_epochs)).
double cosine_lr(int epoch, int total_epochs, double base_lr);

/// Checkpoints: architecture descriptor plus the flat parameter vector,
/// bit-exact across a save/load round trip.
void save_checkpoint(const ScorerModel& model, const std::string& path);
ScorerModel load_checkpoint(const std::string& path);

}  // namespace imil

#endif  // IMIL_MODEL_HPP_
