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

#ifndef IMIL_RUNNER_HPP_
#define IMIL_RUNNER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "imil/config.hpp"
#include "imil/report.hpp"

namespace imil {

/// Bag-granular sub-dataset with reindexed dense instance ids. old_ids, when
/// given, receives the original id of each new instance.
Dataset subset_by_bags(const Dataset& ds, const std::vector<int>& bag_indices,
                       std::vector<int>* old_ids = nullptr);

HiddenLabels subset_hidden(const HiddenLabels& hidden,
                           const std::vector<int>& old_ids);

/// Scores with no augmentation (evaluation-time scoring).
MatX score_clean(const ScorerModel& model, const Dataset& ds);

/// The full EM loop on one train/test split. Hidden labels are used only for
/// reporting (selection precision, metrics, diagnostic) and for the oracle
/// strategy; pass nullptr when unavailable. test may alias train (folds=1).
FoldReport run_em(const EngineConfig& engine, const EvalConfig& eval,
                  const Dataset& train, const HiddenLabels* train_hidden,
                  const Dataset& test, const HiddenLabels* test_hidden,
                  int fold_index);

struct LoadedData {
  Dataset dataset;
  std::optional<HiddenLabels> hidden;
  std::string hash;
};

/// Loads the manifest or generates the synthetic dataset named by the config.
LoadedData resolve_dataset(const ExperimentConfig& cfg);

/// Cross-validated experiment: resolve data, k folds (or one whole-data run),
/// assemble the report. Writes nothing.
RunReport run_experiment(const ExperimentConfig& cfg);

/// run_experiment + write_run_outputs into cfg.output_dir.
RunReport run_and_write(const ExperimentConfig& cfg);

}  // namespace imil

#endif  // IMIL_RUNNER_HPP_
