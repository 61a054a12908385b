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

#include "imil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "imil/rng.hpp"

namespace imil {

double roc_auc(const VecX& scores, const VecXi& labels) {
  const auto n = scores.size();
  if (n != labels.size() || n == 0)
    throw std::invalid_argument("roc_auc: size mismatch or empty input");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores(a) < scores(b); });

  // Average ranks over tie groups, then the Mann-Whitney identity.
  long n_pos = 0;
  double rank_sum_pos = 0.0;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j < n && scores(order[j]) == scores(order[i])) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (Eigen::Index t = i; t < j; ++t)
      if (labels(order[t]) != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  for (Eigen::Index t = 0; t < n; ++t)
    if (labels(t) != 0) ++n_pos;
  const long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: needs both classes");
  return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsRecord threshold_metrics(const VecX& scores, const VecXi& labels,
                                double threshold) {
  const auto n = scores.size();
  if (n != labels.size() || n == 0)
    throw std::invalid_argument("threshold_metrics: size mismatch or empty");

  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pred = scores(i) >= threshold;
    const bool truth = labels(i) != 0;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  MetricsRecord m;
  m.support_pos = static_cast<int>(tp + fn);
  m.support_neg = static_cast<int>(fp + tn);
  m.acc = static_cast<double>(tp + tn) / static_cast<double>(n);
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

double bag_pool(const VecX& instance_scores, BagPoolMode mode) {
  if (instance_scores.size() == 0)
    throw std::invalid_argument("bag_pool: empty bag");
  switch (mode) {
    case BagPoolMode::kMax:
      return instance_scores.maxCoeff();
    case BagPoolMode::kMean:
      return instance_scores.mean();
    case BagPoolMode::kVoting:
      return static_cast<double>((instance_scores.array() >= 0.5).count()) /
             static_cast<double>(instance_scores.size());
  }
  return 0.0;
}

double average_precision(const VecX& scores, const VecXi& labels) {
  const auto n = scores.size();
  if (n != labels.size() || n == 0)
    throw std::invalid_argument("average_precision: size mismatch or empty");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  long num_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (labels(i) != 0) ++num_pos;
  if (num_pos == 0)
    throw std::invalid_argument("average_precision: no positives");
  double ap = 0.0;
  long hits = 0;
  for (Eigen::Index rank = 0; rank < n; ++rank) {
    if (labels(order[rank]) != 0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(num_pos);
}

std::vector<FoldSplit> kfold_split(const Dataset& ds, int k,
                                   std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  const int num_bags = static_cast<int>(ds.bags.size());
  if (num_bags < k) throw std::invalid_argument("kfold_split: too few bags");

  // Group bags by label pattern; deterministic group order.
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int b = 0; b < num_bags; ++b) {
    std::vector<int> key(ds.bags[b].label.data(),
                         ds.bags[b].label.data() + ds.bags[b].label.size());
    groups[key].push_back(b);
  }
  if (ds.num_classes == 1) {
    for (const auto& [key, members] : groups)
      if (static_cast<int>(members.size()) < k)
        throw std::invalid_argument(
            "kfold_split: fewer than k bags with label " +
            std::to_string(key[0]));
  }

  std::vector<std::vector<int>> fold_test(k);
  std::uint64_t group_idx = 0;
  for (auto& [key, members] : groups) {
    CounterRng rng(seed, Stream::kFolds, group_idx++);
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i)
      fold_test[i % k].push_back(members[i]);
  }

  std::vector<FoldSplit> out(k);
  for (int f = 0; f < k; ++f) {
    std::sort(fold_test[f].begin(), fold_test[f].end());
    out[f].test_bags = fold_test[f];
    for (int b = 0; b < num_bags; ++b)
      if (!std::binary_search(fold_test[f].begin(), fold_test[f].end(), b))
        out[f].train_bags.push_back(b);
  }
  return out;
}

namespace {
GroupStat bag_level_stat(const std::vector<double>& bag_means) {
  GroupStat g;
  g.num_bags = static_cast<int>(bag_means.size());
  if (bag_means.empty()) return g;
  double sum = 0.0;
  for (double v : bag_means) sum += v;
  g.mean = sum / bag_means.size();
  if (bag_means.size() > 1) {
    double ss = 0.0;
    for (double v : bag_means) ss += (v - g.mean) * (v - g.mean);
    const double se = std::sqrt(ss / (bag_means.size() - 1)) /
                      std::sqrt(static_cast<double>(bag_means.size()));
    g.ci_low = g.mean - 1.96 * se;
    g.ci_high = g.mean + 1.96 * se;
  } else {
    g.ci_low = g.ci_high = g.mean;
  }
  return g;
}
}  // namespace

ConfoundingDiagnostic confounding_diagnostic(const VecX& scores,
                                             const Dataset& ds,
                                             const HiddenLabels& hidden) {
  if (scores.size() != ds.instance_count())
    throw std::invalid_argument("confounding_diagnostic: score size mismatch");
  if (hidden.labels.rows() != ds.instance_count())
    throw std::invalid_argument("confounding_diagnostic: label size mismatch");

  std::vector<double> p_means, a_means, n_means, neg_means, within_stds;
  for (const Bag& bag : ds.bags) {
    double sum_all = 0.0, sum_p = 0.0, sum_n = 0.0;
    int cnt_p = 0, cnt_n = 0;
    for (int id : bag.instance_ids) {
      const double s = scores(id);
      sum_all += s;
      if (hidden.labels(id, 0) != 0) {
        sum_p += s;
        ++cnt_p;
      } else {
        sum_n += s;
        ++cnt_n;
      }
    }
    const int n_i = bag.size();
    const double mean_all = sum_all / n_i;
    if (bag.positive_for(0)) {
      a_means.push_back(mean_all);
      if (cnt_p > 0) p_means.push_back(sum_p / cnt_p);
      if (cnt_n > 0) n_means.push_back(sum_n / cnt_n);
      double ss = 0.0;
      for (int id : bag.instance_ids)
        ss += (scores(id) - mean_all) * (scores(id) - mean_all);
      within_stds.push_back(n_i > 1 ? std::sqrt(ss / (n_i - 1)) : 0.0);
    } else {
      neg_means.push_back(mean_all);
    }
  }
  if (a_means.empty())
    throw std::invalid_argument("confounding_diagnostic: no positive bags");

  ConfoundingDiagnostic d;
  d.pos_bag_positive = bag_level_stat(p_means);
  d.pos_bag_all = bag_level_stat(a_means);
  d.pos_bag_negative = bag_level_stat(n_means);
  d.neg_bag_all = bag_level_stat(neg_means);
  double s = 0.0;
  for (double v : within_stds) s += v;
  d.mean_within_bag_std = within_stds.empty() ? 0.0 : s / within_stds.size();
  return d;
}

}  // namespace imil
