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

#ifndef IMIL_TYPES_HPP_
#define IMIL_TYPES_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

namespace imil {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecXi = Eigen::VectorXi;
using MatXi = Eigen::MatrixXi;

enum class PayloadKind { kVector, kImage };

/// Shape shared by every instance payload in a dataset. Image payloads are
/// stored flat in planar CHW order: index (c*height + y)*width + x.
struct PayloadShape {
  PayloadKind kind = PayloadKind::kVector;
  int dim = 0;  // vector mode
  int height = 0, width = 0, channels = 0;  // image mode

  int flat_size() const {
    return kind == PayloadKind::kVector ? dim : height * width * channels;
  }
  bool operator==(const PayloadShape&) const = default;

  static PayloadShape vector(int d) {
    PayloadShape s;
    s.kind = PayloadKind::kVector;
    s.dim = d;
    return s;
  }
  static PayloadShape image(int h, int w, int c) {
    PayloadShape s;
    s.kind = PayloadKind::kImage;
    s.height = h;
    s.width = w;
    s.channels = c;
    return s;
  }
};

/// A labeled collection of instances. `label` is a multi-hot vector of
/// length num_classes; binary problems use num_classes == 1.
struct Bag {
  int id = 0;
  std::vector<int> instance_ids;
  VecXi label;

  int size() const { return static_cast<int>(instance_ids.size()); }
  bool positive_for(int cls) const { return label(cls) != 0; }
  bool any_positive() const { return label.any(); }
};

/// Instance ids are dataset-global and dense (0..K-1); payload row i belongs
/// to instance i. Bags partition the id range.
struct Dataset {
  PayloadShape shape;
  int num_classes = 1;
  MatX payloads;  // K x flat_size
  std::vector<Bag> bags;

  int instance_count() const { return static_cast<int>(payloads.rows()); }

  /// instance id -> index into `bags`. Only valid on a validated dataset.
  std::vector<int> bag_of_instance() const;
};

/// Ground-truth instance labels (K x num_classes, entries in {0,1}). Kept
/// outside Dataset on purpose: the training path never sees them; only
/// evaluation and the oracle selection strategy take a HiddenLabels argument.
struct HiddenLabels {
  MatXi labels;
};

/// Per-instance working labels and per-class loss weights driving the M-step.
struct InstanceLabeling {
  MatX assigned;  // K x C, values in {0,1}
  MatX weight;    // K x C, values in [0,1]
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every dataset invariant and reports all violations; never throws.
/// Hidden labels, when given, are additionally checked against the standard
/// multiple instance assumption (per class: bag positive iff some instance
/// positive).
ValidationReport validate_dataset(const Dataset& ds,
                                  const HiddenLabels* hidden = nullptr);

/// EM initialization: every instance takes its bag's label with loss weight 1.
InstanceLabeling initialize_labels(const Dataset& ds);

}  // namespace imil

#endif  // IMIL_TYPES_HPP_
