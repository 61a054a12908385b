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

#ifndef IMIL_REPORT_HPP_
#define IMIL_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imil/metrics.hpp"

namespace imil {

/// One E-step snapshot. epoch == -1 is the initialization row (everything
/// selected, R = 1).
struct EpochRecord {
  int epoch = -1;
  double lr = 0.0;
  double ratio = 1.0;
  double epsilon = 0.0;
  long n_selected = 0;
  bool frozen = false;
  std::optional<double> train_loss;
  std::optional<double> selection_precision;
  std::optional<MetricsRecord> eval;
};

struct FinalMetrics {
  std::optional<MetricsRecord> instance;       // binary
  std::optional<double> bag_auc;               // binary, pooled scores
  std::optional<double> bag_acc;
  std::optional<double> map;                   // multi-label
  std::vector<double> per_class_ap;            // multi-label
  std::optional<ConfoundingDiagnostic> diagnostic;  // train-side, binary
};

struct FoldReport {
  int fold = 0;
  std::vector<EpochRecord> epochs;
  FinalMetrics final;
  int stop_epoch = -1;  // epoch whose E-step fired the stop condition
};

struct RunReport {
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  std::string dataset_hash;
  int num_instances = 0;
  int num_bags = 0;
  int num_classes = 1;
  std::vector<FoldReport> folds;
};

nlohmann::json report_to_json(const RunReport& report);

/// One row per (fold, epoch); missing values stay empty.
std::string epochs_csv(const RunReport& report);

/// One row per fold plus a mean row over final instance metrics.
std::string aggregate_csv(const RunReport& report);

/// Mean of a final instance metric over folds; metric is one of
/// "auc", "acc", "f1", "recall", "precision".
double aggregate_instance_metric(const RunReport& report,
                                 const std::string& metric);

/// config.json, report.json, epochs.csv, aggregate.csv under out_dir.
void write_run_outputs(const RunReport& report, const std::string& out_dir);

}  // namespace imil

#endif  // IMIL_REPORT_HPP_
