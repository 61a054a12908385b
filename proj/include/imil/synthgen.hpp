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

#ifndef IMIL_SYNTHGEN_HPP_
#define IMIL_SYNTHGEN_HPP_

#include <cstdint>

#include "imil/types.hpp"

namespace imil {

/// Parameters of the confounded generator. Each bag draws a shared
/// "appearance" shift (the confounder); the discriminative signal lives in a
/// fixed payload subspace disjoint from it, so augmentation can perturb the
/// confounder without touching the signal:
///   - vector mode: signal occupies the first ceil(dim/4) coordinates, the
///     confounder is a random direction in the remaining coordinates with
///     norm confounder_strength;
///   - image mode: signal is an additive bump on a centered square patch of
///     side ceil(H/4), the confounder is a global per-channel tint plus
///     brightness shift scaled by confounder_strength.
struct SynthParams {
  int num_pos_bags = 10;
  int num_neg_bags = 10;
  int bag_size_min = 10;
  int bag_size_max = 10;
  double positive_rate = 0.3;      // in (0,1]
  double confounder_strength = 1.0;  // >= 0
  double signal_strength = 1.0;      // > 0
  double noise_sigma = 0.1;          // >= 0
  PayloadShape payload = PayloadShape::vector(32);
  std::uint64_t seed = 0;
};

struct SynthOutput {
  Dataset dataset;
  HiddenLabels hidden;
  VecX bag_confounder_norms;  // one per bag, diagnostics only
};

/// Deterministic given params.seed; positive bags get
/// max(1, ceil(positive_rate * N_i)) positive instances, negative bags none.
/// Throws std::invalid_argument on positive_rate <= 0 (or > 1), an empty or
/// inverted bag-size range, or non-positive bag counts.
SynthOutput generate_confounded_bags(const SynthParams& params);

}  // namespace imil

#endif  // IMIL_SYNTHGEN_HPP_
