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

#ifndef IMIL_DATASET_IO_HPP_
#define IMIL_DATASET_IO_HPP_

#include <optional>
#include <string>

#include "imil/synthgen.hpp"
#include "imil/types.hpp"

namespace imil {

/// On-disk layout: <dir>/manifest.json lists bags and the payload shape;
/// payloads live either inline in <dir>/instances.jsonl (one record per
/// instance) or as <dir>/instances/<id>.png with 8-bit channels. Hidden
/// labels, when present, are a separate sidecar <dir>/labels.json keyed by
/// instance id.
enum class InstanceStorage { kInline, kPng };

void save_dataset(const Dataset& ds, const std::string& dir,
                  const HiddenLabels* hidden = nullptr,
                  std::optional<InstanceStorage> storage = std::nullopt);

Dataset load_dataset(const std::string& dir);

/// Empty optional when the sidecar does not exist.
std::optional<HiddenLabels> load_hidden_labels(const std::string& dir,
                                               int instance_count,
                                               int num_classes);

/// Generation diagnostics next to the manifest (params echo plus per-bag
/// confounder norms).
void save_generation_metadata(const SynthParams& params,
                              const VecX& bag_confounder_norms,
                              const std::string& dir);

/// SHA-256 over the manifest and payload bytes (id order); identifies the
/// training data independent of sidecars.
std::string dataset_content_hash(const std::string& dir);

/// Same identity for an in-memory dataset that was never written out.
std::string dataset_content_hash(const Dataset& ds);

}  // namespace imil

#endif  // IMIL_DATASET_IO_HPP_
