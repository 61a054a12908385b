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

#ifndef IMIL_ENGINE_HPP_
#define IMIL_ENGINE_HPP_

#include <cstdint>
#include <vector>

#include "imil/augment.hpp"
#include "imil/model.hpp"
#include "imil/types.hpp"

namespace imil {

/// Instance selection strategies. All of them plug into the same E-step slot;
/// only kImil runs the energy curriculum, the others recompute their
/// selection from the current scores every epoch.
enum class Method { kSimple, kTopK, kBagThreshold, kOracle, kImil };

enum class EScorePolicy { kWeak, kNone };

/// What stops when the stop condition fires: kRatio keeps R fixed but still
/// reselects from fresh energies; kSet freezes the selected set itself.
enum class FreezeMode { kRatio, kSet };

/// Which instances compete in selection. Under the standard MIL assumption
/// negative-bag labels are exact, so the default pool is positive-bag
/// instances only; kAll ranks over every instance.
enum class PoolMode { kPositiveBags, kAll };

struct EngineConfig {
  Method method = Method::kImil;
  bool intervention = true;

  AugmentPolicy strong_policy = AugmentPolicy::strong();  // M-step
  AugmentPolicy weak_policy = AugmentPolicy::weak();      // E-step scoring
  EScorePolicy escore_policy = EScorePolicy::kWeak;
  int escore_draws = 1;

  double momentum = 0.5;        // m
  double tau = 0.05;            // curriculum decay ratio
  double stop_threshold = 0.95; // T
  double r_min = 0.2;
  double soft_weight = 0.1;     // multi-label down-weight
  FreezeMode freeze_mode = FreezeMode::kRatio;
  PoolMode pool_mode = PoolMode::kPositiveBags;
  int topk_k = 1;

  Arch arch = Arch::kMlp;
  std::vector<int> hidden{64};
  double base_lr = 0.001;
  int batch_size = 64;
  int epochs = 50;

  std::uint64_t seed = 0;
};

/// Per-instance (per-class) score bookkeeping: raw model scores s(t), their
/// exponential moving average S, and bag-normalized energies E.
struct ScoreTable {
  MatX raw;     // K x C
  MatX ema;     // K x C
  MatX energy;  // K x C
  int epoch = -1;
  bool initialized = false;
};

struct SelectionState {
  int t = 0;  // E-step counter; t=0 is the initialization snapshot
  VecX ratio;             // per class, R in [r_min, 1]
  VecX reference_effect;  // per class, epsilon
  std::vector<std::uint8_t> frozen;        // per class
  std::vector<std::vector<int>> selected;  // per class, ascending ids
};

struct EmState {
  ScorerModel model;
  OptimizerState opt;
  ScoreTable table;
  SelectionState sel;
  InstanceLabeling labeling;
  std::vector<std::vector<int>> pools;  // per class, ascending ids
};

// ---- pure selection math ----

/// One EMA step: m * prev + (1 - m) * raw.
inline double ema_update(double ema_prev, double raw, double m) {
  return m * ema_prev + (1.0 - m) * raw;
}

/// Bag-normalized energies E = S / max(bag mean of S, guard), per class.
/// Scale-free per bag: multiplying one bag's scores by c > 0 leaves its
/// energies unchanged, which is what removes bag-level score offsets.
MatX compute_energy(const MatX& ema, const Dataset& ds, double guard = 1e-8);

/// Unfrozen curriculum schedule max(1 - tau*t, r_min); a frozen state keeps
/// the R it had when the stop condition fired (handled by the caller).
double curriculum_ratio(int t, double tau, double r_min);

struct Selection {
  std::vector<int> selected;  // ascending ids
  double epsilon = 0.0;       // min energy over selected (reference effect)
};

/// Keeps the floor(R * |pool|) largest-energy instances, ties broken by
/// smaller id. epsilon is the smallest selected energy, so the per-instance
/// total effect E - epsilon is >= 0 exactly on the selected set. Throws
/// "empty selection" when floor(R * |pool|) == 0.
Selection select_instances(const VecX& energies, double r,
                           const std::vector<int>& pool);

/// True when the mean energy of the max(1, floor(tau * k_pool)) smallest
/// selected energies reaches threshold (inclusive).
bool stop_check(const VecX& energies, const std::vector<int>& selected,
                double tau, int k_pool, double threshold);

// ---- EM phases ----

EmState init_em(const EngineConfig& cfg, const Dataset& ds);

/// Scores every instance with the E-step policy; one stochastic draw per
/// instance per epoch by default, averaged over cfg.escore_draws.
MatX score_all(const ScorerModel& model, const Dataset& ds,
               const EngineConfig& cfg, int epoch);

/// One training epoch over instances with positive loss weight, under strong
/// augmentation when intervention is on. Returns the mean batch loss.
/// Throws when no instance is trainable.
double m_step(EmState& st, const Dataset& ds, const EngineConfig& cfg,
              int epoch);

/// Score -> EMA -> energy -> curriculum/selection -> stop check -> weights.
/// oracle_labels must be non-null iff method == kOracle.
void e_step(EmState& st, const Dataset& ds, const EngineConfig& cfg,
            int epoch, const MatXi* oracle_labels = nullptr);

}  // namespace imil

#endif  // IMIL_ENGINE_HPP_
