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

#include "imil/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "imil/rng.hpp"

namespace imil {

namespace {

// substream purposes within Stream::kDataGen
constexpr std::uint64_t kSize = 1;
constexpr std::uint64_t kConfounder = 2;
constexpr std::uint64_t kPosPlace = 3;
constexpr std::uint64_t kNoise = 4;

constexpr double kImageBase = 0.5;
constexpr double kTintScale = 0.15;   // confounder magnitude per unit strength
constexpr double kPatchScale = 0.3;   // signal bump per unit strength

void check_params(const SynthParams& p) {
  if (p.positive_rate <= 0.0 || p.positive_rate > 1.0)
    throw std::invalid_argument("synthgen: positive_rate must be in (0,1]");
  if (p.bag_size_min < 1 || p.bag_size_max < p.bag_size_min)
    throw std::invalid_argument("synthgen: empty bag size range");
  if (p.num_pos_bags < 0 || p.num_neg_bags < 0 ||
      p.num_pos_bags + p.num_neg_bags < 1)
    throw std::invalid_argument("synthgen: need at least one bag");
  if (p.confounder_strength < 0.0)
    throw std::invalid_argument("synthgen: confounder_strength must be >= 0");
  if (p.signal_strength <= 0.0)
    throw std::invalid_argument("synthgen: signal_strength must be > 0");
  if (p.noise_sigma < 0.0)
    throw std::invalid_argument("synthgen: noise_sigma must be >= 0");
  if (p.payload.flat_size() <= 0)
    throw std::invalid_argument("synthgen: payload shape has no elements");
}

}  // namespace

SynthOutput generate_confounded_bags(const SynthParams& p) {
  check_params(p);
  const int num_bags = p.num_pos_bags + p.num_neg_bags;
  const int dim = p.payload.flat_size();
  const bool image = p.payload.kind == PayloadKind::kImage;

  // Bag sizes and the id partition first; ids are dense and bag-contiguous.
  std::vector<int> bag_sizes(num_bags);
  for (int b = 0; b < num_bags; ++b) {
    CounterRng rng(p.seed, Stream::kDataGen, kSize, b);
    bag_sizes[b] =
        p.bag_size_min +
        static_cast<int>(rng.uniform_int(p.bag_size_max - p.bag_size_min + 1));
  }
  const int total = std::accumulate(bag_sizes.begin(), bag_sizes.end(), 0);

  SynthOutput out;
  Dataset& ds = out.dataset;
  ds.shape = p.payload;
  ds.num_classes = 1;
  ds.payloads.resize(total, dim);
  out.hidden.labels = MatXi::Zero(total, 1);
  out.bag_confounder_norms.resize(num_bags);

  // signal subspace: first ceil(dim/4) coordinates (vector mode) or a
  // centered square patch of side ceil(H/4) (image mode)
  const int signal_dims = (dim + 3) / 4;
  VecX signal = VecX::Zero(dim);
  if (!image) {
    signal.head(signal_dims).setConstant(p.signal_strength /
                                         std::sqrt(double(signal_dims)));
  } else {
    const int h = p.payload.height, w = p.payload.width, c = p.payload.channels;
    const int side = (h + 3) / 4;
    const int y0 = (h - side) / 2, x0 = (w - side) / 2;
    for (int ch = 0; ch < c; ++ch)
      for (int y = y0; y < y0 + side && y < h; ++y)
        for (int x = x0; x < x0 + side && x < w; ++x)
          signal((static_cast<std::ptrdiff_t>(ch) * h + y) * w + x) =
              kPatchScale * p.signal_strength;
  }

  int next_id = 0;
  for (int b = 0; b < num_bags; ++b) {
    const bool positive_bag = b < p.num_pos_bags;
    const int n_i = bag_sizes[b];

    Bag bag;
    bag.id = b;
    bag.label = VecXi::Constant(1, positive_bag ? 1 : 0);
    bag.instance_ids.resize(n_i);
    std::iota(bag.instance_ids.begin(), bag.instance_ids.end(), next_id);

    // per-bag confounder shift
    VecX shift = VecX::Zero(dim);
    CounterRng crng(p.seed, Stream::kDataGen, kConfounder, b);
    if (!image) {
      VecX dir = VecX::Zero(dim);
      for (int i = signal_dims; i < dim; ++i) dir(i) = crng.normal();
      const double norm = dir.norm();
      if (norm > 0.0) shift = dir * (p.confounder_strength / norm);
      out.bag_confounder_norms(b) = shift.norm();
    } else {
      const int h = p.payload.height, w = p.payload.width,
                c = p.payload.channels;
      // per-channel tint plus a brightness term shared by all channels
      VecX g(c + 1);
      for (int i = 0; i < c + 1; ++i) g(i) = crng.normal();
      const double norm = g.norm();
      if (norm > 0.0) g *= kTintScale * p.confounder_strength / norm;
      double sq = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double offset = g(ch) + g(c);
        shift.segment(static_cast<std::ptrdiff_t>(ch) * h * w, h * w)
            .setConstant(offset);
        sq += offset * offset;
      }
      out.bag_confounder_norms(b) = std::sqrt(sq);
    }

    // which instances are positive
    std::vector<int> local(n_i);
    std::iota(local.begin(), local.end(), 0);
    int n_pos = 0;
    if (positive_bag) {
      n_pos = std::max(1, static_cast<int>(std::ceil(p.positive_rate * n_i)));
      CounterRng prng(p.seed, Stream::kDataGen, kPosPlace, b);
      prng.shuffle(local);
    }

    for (int j = 0; j < n_i; ++j) {
      const int id = bag.instance_ids[j];
      const bool positive = positive_bag &&
                            std::find(local.begin(), local.begin() + n_pos,
                                      j) != local.begin() + n_pos;
      out.hidden.labels(id, 0) = positive ? 1 : 0;

      CounterRng nrng(p.seed, Stream::kDataGen, kNoise, id);
      VecX payload(dim);
      for (int d = 0; d < dim; ++d)
        payload(d) = p.noise_sigma * nrng.normal();
      if (image) payload.array() += kImageBase;
      payload += shift;
      if (positive) payload += signal;
      if (image)
        payload = payload.cwiseMax(0.0).cwiseMin(1.0);
      ds.payloads.row(id) = payload.transpose();
    }
    ds.bags.push_back(std::move(bag));
    next_id += n_i;
  }
  return out;
}

}  // namespace imil
