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

#ifndef IMIL_METRICS_HPP_
#define IMIL_METRICS_HPP_

#include <cstdint>
#include <vector>

#include "imil/types.hpp"

namespace imil {

struct MetricsRecord {
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  int support_pos = 0;
  int support_neg = 0;
};

/// Rank-formulation AUC: probability that a random positive outranks a random
/// negative, ties counting 1/2. Throws std::invalid_argument if only one
/// class is present.
double roc_auc(const VecX& scores, const VecXi& labels);

/// Confusion-matrix metrics at `threshold` (prediction = score >= threshold).
/// Degenerate denominators yield 0 (precision with no positive predictions,
/// recall with no positives, f1 when precision+recall == 0). AUC is not
/// filled in. Throws on empty input.
MetricsRecord threshold_metrics(const VecX& scores, const VecXi& labels,
                                double threshold = 0.5);

enum class BagPoolMode { kMax, kMean, kVoting };

/// Aggregates instance scores into a bag score. Voting is the fraction of
/// instances with score >= 0.5.
double bag_pool(const VecX& instance_scores, BagPoolMode mode);

/// Average precision of the ranked list (all-points interpolation), for
/// multi-label reporting. Ties broken by smaller index.
double average_precision(const VecX& scores, const VecXi& labels);

struct FoldSplit {
  std::vector<int> train_bags;  // indices into Dataset::bags
  std::vector<int> test_bags;
};

/// Stratified k-fold split at bag granularity. Bags are grouped by label
/// pattern, each group is shuffled with the seeded stream and dealt
/// round-robin. In binary mode every class must have at least k bags.
std::vector<FoldSplit> kfold_split(const Dataset& ds, int k,
                                   std::uint64_t seed);

struct GroupStat {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int num_bags = 0;
};

/// Per-group mean scores with 95% normal-approximation intervals, bag-level
/// means as the unit of analysis. P/A/N groups are taken over positive bags;
/// neg_bag_all covers instances of negative bags (needed to quantify the
/// collapse of scores toward bag identity). mean_within_bag_std is the
/// within-bag score standard deviation averaged over positive bags.
struct ConfoundingDiagnostic {
  GroupStat pos_bag_positive;
  GroupStat pos_bag_all;
  GroupStat pos_bag_negative;
  GroupStat neg_bag_all;
  double mean_within_bag_std = 0.0;
};

/// Binary mode only (class 0). Throws if the dataset has no positive bags.
ConfoundingDiagnostic confounding_diagnostic(const VecX& scores,
                                             const Dataset& ds,
                                             const HiddenLabels& hidden);

}  // namespace imil

#endif  // IMIL_METRICS_HPP_
