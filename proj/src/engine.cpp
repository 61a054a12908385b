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

#include "imil/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "imil/rng.hpp"

namespace imil {

MatX compute_energy(const MatX& ema, const Dataset& ds, double guard) {
  MatX energy(ema.rows(), ema.cols());
  for (const Bag& bag : ds.bags) {
    for (int c = 0; c < static_cast<int>(ema.cols()); ++c) {
      double sum = 0.0;
      for (int id : bag.instance_ids) sum += ema(id, c);
      const double denom = std::max(sum / bag.size(), guard);
      for (int id : bag.instance_ids) energy(id, c) = ema(id, c) / denom;
    }
  }
  return energy;
}

double curriculum_ratio(int t, double tau, double r_min) {
  if (t < 0) throw std::invalid_argument("curriculum_ratio: t must be >= 0");
  return std::max(1.0 - tau * static_cast<double>(t), r_min);
}

Selection select_instances(const VecX& energies, double r,
                           const std::vector<int>& pool) {
  if (pool.empty())
    throw std::invalid_argument("select_instances: empty pool");
  if (r <= 0.0 || r > 1.0)
    throw std::invalid_argument("select_instances: R must be in (0,1]");
  const int n = static_cast<int>(r * static_cast<double>(pool.size()));
  if (n == 0) throw std::runtime_error("select_instances: empty selection");

  std::vector<int> order = pool;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (energies(a) != energies(b)) return energies(a) > energies(b);
    return a < b;
  });
  Selection sel;
  sel.selected.assign(order.begin(), order.begin() + n);
  sel.epsilon = energies(order[n - 1]);
  std::sort(sel.selected.begin(), sel.selected.end());
  return sel;
}

bool stop_check(const VecX& energies, const std::vector<int>& selected,
                double tau, int k_pool, double threshold) {
  if (selected.empty())
    throw std::invalid_argument("stop_check: empty selection");
  int n = std::max(1, static_cast<int>(tau * static_cast<double>(k_pool)));
  n = std::min(n, static_cast<int>(selected.size()));
  std::vector<double> vals;
  vals.reserve(selected.size());
  for (int id : selected) vals.push_back(energies(id));
  std::nth_element(vals.begin(), vals.begin() + (n - 1), vals.end());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += vals[i];
  return sum / n >= threshold;
}

namespace {

std::vector<std::vector<int>> build_pools(const EngineConfig& cfg,
                                          const Dataset& ds) {
  std::vector<std::vector<int>> pools(ds.num_classes);
  for (const Bag& bag : ds.bags) {
    for (int c = 0; c < ds.num_classes; ++c) {
      if (cfg.pool_mode == PoolMode::kAll || bag.positive_for(c)) {
        pools[c].insert(pools[c].end(), bag.instance_ids.begin(),
                        bag.instance_ids.end());
      }
    }
  }
  for (auto& pool : pools) std::sort(pool.begin(), pool.end());
  return pools;
}

AugmentPolicy escore_policy_of(const EngineConfig& cfg) {
  if (cfg.escore_policy == EScorePolicy::kNone) return AugmentPolicy::none();
  AugmentPolicy p = cfg.weak_policy;
  p.stream = Stream::kEScore;
  return p;
}

// Per-bag top-k / threshold baselines work on the current raw scores.
std::vector<int> topk_selection(const MatX& raw, const Dataset& ds, int cls,
                                const std::vector<std::uint8_t>& in_pool,
                                int k) {
  std::vector<int> selected;
  for (const Bag& bag : ds.bags) {
    if (bag.instance_ids.empty() || !in_pool[bag.instance_ids[0]]) continue;
    std::vector<int> order = bag.instance_ids;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (raw(a, cls) != raw(b, cls)) return raw(a, cls) > raw(b, cls);
      return a < b;
    });
    const int take = std::min<int>(k, static_cast<int>(order.size()));
    selected.insert(selected.end(), order.begin(), order.begin() + take);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<int> bag_threshold_selection(
    const MatX& raw, const Dataset& ds, int cls,
    const std::vector<std::uint8_t>& in_pool) {
  std::vector<int> selected;
  for (const Bag& bag : ds.bags) {
    if (bag.instance_ids.empty() || !in_pool[bag.instance_ids[0]]) continue;
    double mean = 0.0;
    for (int id : bag.instance_ids) mean += raw(id, cls);
    mean /= bag.size();
    for (int id : bag.instance_ids)
      if (raw(id, cls) > mean) selected.push_back(id);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

double min_energy_over(const VecX& energies, const std::vector<int>& ids) {
  double m = 0.0;
  bool first = true;
  for (int id : ids) {
    if (first || energies(id) < m) m = energies(id);
    first = false;
  }
  return first ? 0.0 : m;
}

}  // namespace

EmState init_em(const EngineConfig& cfg, const Dataset& ds) {
  EmState st;
  st.model = make_scorer(cfg.arch, ds.shape.flat_size(), ds.num_classes,
                         cfg.hidden, cfg.seed);
  st.opt = make_optimizer(st.model);
  st.labeling = initialize_labels(ds);
  st.pools = build_pools(cfg, ds);

  st.sel.t = 0;
  st.sel.ratio = VecX::Ones(ds.num_classes);
  st.sel.reference_effect = VecX::Zero(ds.num_classes);
  st.sel.frozen.assign(ds.num_classes, 0);
  st.sel.selected = st.pools;
  return st;
}

MatX score_all(const ScorerModel& model, const Dataset& ds,
               const EngineConfig& cfg, int epoch) {
  const int k = ds.instance_count();
  const AugmentPolicy policy = escore_policy_of(cfg);
  const int draws =
      policy.kind == AugmentPolicy::Kind::kNone ? 1 : std::max(1, cfg.escore_draws);

  MatX raw = MatX::Zero(k, ds.num_classes);
  constexpr int kChunk = 256;
  MatX block(std::min(kChunk, k), ds.shape.flat_size());
  for (int d = 0; d < draws; ++d) {
    for (int start = 0; start < k; start += kChunk) {
      const int rows = std::min(kChunk, k - start);
      if (policy.kind == AugmentPolicy::Kind::kNone) {
        raw.middleRows(start, rows) = forward(
            model, ds.payloads.middleRows(start, rows));
        continue;
      }
      for (int i = 0; i < rows; ++i) {
        // step encodes (epoch, draw) so every draw is an independent pure
        // function of (seed, instance, epoch)
        block.row(i) =
            augment_payload(ds.payloads.row(start + i).transpose(), ds.shape,
                            policy, cfg.seed, start + i,
                            epoch * draws + d)
                .transpose();
      }
      raw.middleRows(start, rows) += forward(model, block.topRows(rows));
    }
  }
  if (draws > 1 && policy.kind != AugmentPolicy::Kind::kNone)
    raw /= static_cast<double>(draws);
  return raw;
}

double m_step(EmState& st, const Dataset& ds, const EngineConfig& cfg,
              int epoch) {
  std::vector<int> trainable;
  for (int i = 0; i < ds.instance_count(); ++i)
    if (st.labeling.weight.row(i).maxCoeff() > 0.0) trainable.push_back(i);
  if (trainable.empty())
    throw std::runtime_error("m_step: no trainable instances");

  CounterRng shuffle_rng(cfg.seed, Stream::kShuffle,
                         static_cast<std::uint64_t>(epoch));
  shuffle_rng.shuffle(trainable);

  AugmentPolicy policy =
      cfg.intervention ? cfg.strong_policy : AugmentPolicy::none();
  const double lr = cosine_lr(epoch, cfg.epochs, cfg.base_lr);

  const int n = static_cast<int>(trainable.size());
  const int bs = std::max(1, cfg.batch_size);
  double loss_sum = 0.0;

  MatX x(std::min(bs, n), ds.shape.flat_size());
  MatX y(std::min(bs, n), ds.num_classes);
  MatX w(std::min(bs, n), ds.num_classes);
  for (int start = 0; start < n; start += bs) {
    const int rows = std::min(bs, n - start);
    for (int i = 0; i < rows; ++i) {
      const int id = trainable[start + i];
      if (policy.kind == AugmentPolicy::Kind::kNone) {
        x.row(i) = ds.payloads.row(id);
      } else {
        x.row(i) = augment_payload(ds.payloads.row(id).transpose(), ds.shape,
                                   policy, cfg.seed, id, epoch)
                       .transpose();
      }
      y.row(i) = st.labeling.assigned.row(id);
      w.row(i) = st.labeling.weight.row(id);
    }
    const LossGrad lg = loss_and_grad(st.model, x.topRows(rows),
                                      y.topRows(rows), w.topRows(rows));
    adam_step(st.model, st.opt, lg.grad, lr);
    loss_sum += lg.loss * rows;
  }
  return loss_sum / n;
}

void e_step(EmState& st, const Dataset& ds, const EngineConfig& cfg,
            int epoch, const MatXi* oracle_labels) {
  if (cfg.method == Method::kOracle && oracle_labels == nullptr)
    throw std::invalid_argument("e_step: oracle method needs hidden labels");

  const MatX raw = score_all(st.model, ds, cfg, epoch);
  if (!st.table.initialized) {
    st.table.ema = raw;  // no zero-init bias: S starts at the first scores
    st.table.initialized = true;
  } else {
    st.table.ema =
        cfg.momentum * st.table.ema + (1.0 - cfg.momentum) * raw;
  }
  st.table.raw = raw;
  st.table.epoch = epoch;
  st.table.energy = compute_energy(st.table.ema, ds);

  st.sel.t += 1;

  std::vector<std::uint8_t> in_pool(ds.instance_count(), 0);
  for (int c = 0; c < ds.num_classes; ++c) {
    std::fill(in_pool.begin(), in_pool.end(), 0);
    for (int id : st.pools[c]) in_pool[id] = 1;
    const VecX energy_c = st.table.energy.col(c);

    switch (cfg.method) {
      case Method::kSimple:
        st.sel.selected[c] = st.pools[c];
        st.sel.reference_effect(c) = min_energy_over(energy_c, st.pools[c]);
        break;
      case Method::kTopK:
        st.sel.selected[c] =
            topk_selection(raw, ds, c, in_pool, cfg.topk_k);
        st.sel.reference_effect(c) =
            min_energy_over(energy_c, st.sel.selected[c]);
        break;
      case Method::kBagThreshold:
        st.sel.selected[c] = bag_threshold_selection(raw, ds, c, in_pool);
        st.sel.reference_effect(c) =
            min_energy_over(energy_c, st.sel.selected[c]);
        break;
      case Method::kOracle: {
        std::vector<int> sel;
        for (int id : st.pools[c])
          if ((*oracle_labels)(id, c) != 0) sel.push_back(id);
        st.sel.selected[c] = std::move(sel);
        st.sel.reference_effect(c) =
            min_energy_over(energy_c, st.sel.selected[c]);
        break;
      }
      case Method::kImil: {
        if (!st.sel.frozen[c])
          st.sel.ratio(c) = curriculum_ratio(st.sel.t, cfg.tau, cfg.r_min);
        const bool keep_set =
            st.sel.frozen[c] && cfg.freeze_mode == FreezeMode::kSet;
        if (!keep_set) {
          Selection s =
              select_instances(energy_c, st.sel.ratio(c), st.pools[c]);
          st.sel.selected[c] = std::move(s.selected);
          st.sel.reference_effect(c) = s.epsilon;
        } else {
          st.sel.reference_effect(c) =
              min_energy_over(energy_c, st.sel.selected[c]);
        }
        if (!st.sel.frozen[c] &&
            stop_check(energy_c, st.sel.selected[c], cfg.tau,
                       static_cast<int>(st.pools[c].size()),
                       cfg.stop_threshold))
          st.sel.frozen[c] = 1;
        break;
      }
    }

    // weights: selected and out-of-pool instances train at full weight;
    // unselected pool instances are dropped (binary) or soft-weighted
    const double off_weight = ds.num_classes == 1 ? 0.0 : cfg.soft_weight;
    std::vector<std::uint8_t> keep(ds.instance_count(), 0);
    for (int id : st.sel.selected[c]) keep[id] = 1;
    for (int i = 0; i < ds.instance_count(); ++i)
      st.labeling.weight(i, c) = (!in_pool[i] || keep[i]) ? 1.0 : off_weight;
  }
}

}  // namespace imil
