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

#include "imil/types.hpp"

#include <string>

namespace imil {

std::vector<int> Dataset::bag_of_instance() const {
  std::vector<int> owner(instance_count(), -1);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    for (int id : bags[b].instance_ids) {
      if (id >= 0 && id < instance_count()) owner[id] = static_cast<int>(b);
    }
  }
  return owner;
}

ValidationReport validate_dataset(const Dataset& ds,
                                  const HiddenLabels* hidden) {
  ValidationReport report;
  auto add = [&report](const std::string& msg) {
    report.violations.push_back(msg);
  };

  const int k = ds.instance_count();
  if (ds.num_classes < 1) add("num_classes must be >= 1");
  if (ds.shape.flat_size() <= 0) add("payload shape has non-positive size");
  if (ds.payloads.cols() != ds.shape.flat_size())
    add("payload matrix width does not match payload shape");

  std::vector<int> refcount(k, 0);
  long total = 0;
  for (const Bag& bag : ds.bags) {
    if (bag.instance_ids.empty())
      add("empty bag: bag " + std::to_string(bag.id));
    if (bag.label.size() != ds.num_classes)
      add("bag " + std::to_string(bag.id) + " label length != num_classes");
    for (int id : bag.instance_ids) {
      ++total;
      if (id < 0 || id >= k) {
        add("bag " + std::to_string(bag.id) + " references unknown instance " +
            std::to_string(id));
        continue;
      }
      if (++refcount[id] == 2)
        add("duplicate membership: instance " + std::to_string(id) +
            " appears in more than one bag (or twice in one)");
    }
  }
  if (total != k)
    add("sum of bag sizes (" + std::to_string(total) +
        ") != instance count (" + std::to_string(k) + ")");
  for (int id = 0; id < k; ++id)
    if (refcount[id] == 0)
      add("orphan instance " + std::to_string(id) + " not in any bag");

  if (hidden != nullptr) {
    if (hidden->labels.rows() != k || hidden->labels.cols() != ds.num_classes) {
      add("hidden label matrix shape mismatch");
    } else {
      for (const Bag& bag : ds.bags) {
        for (int c = 0; c < ds.num_classes; ++c) {
          bool any = false;
          for (int id : bag.instance_ids)
            if (id >= 0 && id < k && hidden->labels(id, c) != 0) any = true;
          const bool pos = bag.label.size() == ds.num_classes && bag.positive_for(c);
          if (pos && !any)
            add("bag " + std::to_string(bag.id) + " positive for class " +
                std::to_string(c) + " but has no positive instance");
          if (!pos && any)
            add("bag " + std::to_string(bag.id) + " negative for class " +
                std::to_string(c) + " but contains a positive instance");
        }
      }
    }
  }
  return report;
}

InstanceLabeling initialize_labels(const Dataset& ds) {
  const int k = ds.instance_count();
  InstanceLabeling lab;
  lab.assigned = MatX::Zero(k, ds.num_classes);
  lab.weight = MatX::Ones(k, ds.num_classes);
  for (const Bag& bag : ds.bags)
    for (int id : bag.instance_ids)
      lab.assigned.row(id) = bag.label.cast<double>().transpose();
  return lab;
}

}  // namespace imil
