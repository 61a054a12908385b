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

#ifndef IMIL_CONFIG_HPP_
#define IMIL_CONFIG_HPP_

#include <optional>
#include <string>

#include <json.hpp>

#include "imil/engine.hpp"
#include "imil/metrics.hpp"
#include "imil/synthgen.hpp"

namespace imil {

struct DatasetSource {
  std::optional<std::string> manifest_dir;
  std::optional<SynthParams> synthetic;
};

struct EvalConfig {
  int folds = 5;            // 1 = no split, evaluate on the training bags
  double threshold = 0.5;
  BagPoolMode bag_pool = BagPoolMode::kMax;
  int eval_every = 0;       // 0 = only final metrics
};

struct ExperimentConfig {
  DatasetSource dataset;
  EngineConfig engine;
  EvalConfig eval;
  std::string output_dir;
};

/// Strict schema: unknown keys and out-of-range values are ConfigError with
/// the full field path in the message. Unset fields take the documented
/// defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

/// Full echo with every default resolved; parse(serialize(cfg)) == cfg and
/// serialize is a fixed point after one parse.
nlohmann::json serialize_config(const ExperimentConfig& cfg);

const char* method_name(Method m);
Method method_from_name(const std::string& name);

}  // namespace imil

#endif  // IMIL_CONFIG_HPP_
