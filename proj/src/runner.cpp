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

#include "imil/runner.hpp"

#include <algorithm>
#include <stdexcept>

#include "imil/dataset_io.hpp"
#include "imil/errors.hpp"
#include "imil/rng.hpp"

namespace imil {

namespace {

VecXi instance_labels_of(const HiddenLabels& hidden, int cls) {
  return hidden.labels.col(cls);
}

bool both_classes(const VecXi& labels) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    (labels(i) != 0 ? pos : neg) = true;
  return pos && neg;
}

MetricsRecord instance_metrics(const VecX& scores, const VecXi& labels,
                               double threshold) {
  MetricsRecord m = threshold_metrics(scores, labels, threshold);
  m.auc = roc_auc(scores, labels);
  return m;
}

double selection_precision(const std::vector<int>& selected,
                           const HiddenLabels& hidden) {
  if (selected.empty()) return 0.0;
  long hits = 0;
  for (int id : selected)
    if (hidden.labels(id, 0) != 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(selected.size());
}

}  // namespace

Dataset subset_by_bags(const Dataset& ds, const std::vector<int>& bag_indices,
                       std::vector<int>* old_ids) {
  Dataset out;
  out.shape = ds.shape;
  out.num_classes = ds.num_classes;

  int total = 0;
  for (int b : bag_indices) total += ds.bags.at(b).size();
  out.payloads.resize(total, ds.payloads.cols());

  std::vector<int> mapping;
  mapping.reserve(total);
  int next = 0;
  for (int b : bag_indices) {
    const Bag& src = ds.bags.at(b);
    Bag bag;
    bag.id = src.id;
    bag.label = src.label;
    for (int id : src.instance_ids) {
      out.payloads.row(next) = ds.payloads.row(id);
      bag.instance_ids.push_back(next);
      mapping.push_back(id);
      ++next;
    }
    out.bags.push_back(std::move(bag));
  }
  if (old_ids) *old_ids = std::move(mapping);
  return out;
}

HiddenLabels subset_hidden(const HiddenLabels& hidden,
                           const std::vector<int>& old_ids) {
  HiddenLabels out;
  out.labels.resize(static_cast<Eigen::Index>(old_ids.size()),
                    hidden.labels.cols());
  for (std::size_t i = 0; i < old_ids.size(); ++i)
    out.labels.row(static_cast<Eigen::Index>(i)) =
        hidden.labels.row(old_ids[i]);
  return out;
}

MatX score_clean(const ScorerModel& model, const Dataset& ds) {
  const int k = ds.instance_count();
  MatX raw(k, model.num_classes);
  constexpr int kChunk = 512;
  for (int start = 0; start < k; start += kChunk) {
    const int rows = std::min(kChunk, k - start);
    raw.middleRows(start, rows) =
        forward(model, ds.payloads.middleRows(start, rows));
  }
  return raw;
}

FoldReport run_em(const EngineConfig& engine, const EvalConfig& eval,
                  const Dataset& train, const HiddenLabels* train_hidden,
                  const Dataset& test, const HiddenLabels* test_hidden,
                  int fold_index) {
  {
    const ValidationReport v = validate_dataset(train, train_hidden);
    if (!v.ok())
      throw DataError("invalid training dataset: " + v.violations.front());
  }
  const bool binary = train.num_classes == 1;

  EmState st = init_em(engine, train);
  FoldReport fold;
  fold.fold = fold_index;

  {
    EpochRecord init;
    init.epoch = -1;
    init.ratio = 1.0;
    init.epsilon = 0.0;
    init.n_selected = train.instance_count();
    fold.epochs.push_back(init);
  }

  auto all_frozen = [&st]() {
    return std::all_of(st.sel.frozen.begin(), st.sel.frozen.end(),
                       [](std::uint8_t f) { return f != 0; });
  };

  const MatXi* oracle =
      engine.method == Method::kOracle && train_hidden != nullptr
          ? &train_hidden->labels
          : nullptr;
  if (engine.method == Method::kOracle && oracle == nullptr)
    throw DataError("oracle method requires hidden labels");

  for (int epoch = 0; epoch < engine.epochs; ++epoch) {
    const double loss = m_step(st, train, engine, epoch);
    e_step(st, train, engine, epoch, oracle);

    EpochRecord row;
    row.epoch = epoch;
    row.lr = cosine_lr(epoch, engine.epochs, engine.base_lr);
    row.ratio = st.sel.ratio.mean();
    row.epsilon = st.sel.reference_effect.mean();
    long n_sel = 0;
    for (const auto& sel : st.sel.selected)
      n_sel += static_cast<long>(sel.size());
    row.n_selected = n_sel;
    row.frozen = all_frozen();
    row.train_loss = loss;
    if (row.frozen && fold.stop_epoch < 0) fold.stop_epoch = epoch;
    if (binary && train_hidden != nullptr)
      row.selection_precision =
          selection_precision(st.sel.selected[0], *train_hidden);
    if (eval.eval_every > 0 && (epoch + 1) % eval.eval_every == 0 &&
        binary && test_hidden != nullptr) {
      const VecX scores = score_clean(st.model, test).col(0);
      const VecXi labels = instance_labels_of(*test_hidden, 0);
      if (both_classes(labels))
        row.eval = instance_metrics(scores, labels, eval.threshold);
    }
    fold.epochs.push_back(std::move(row));
  }

  // final evaluation with clean payloads
  const MatX test_scores = score_clean(st.model, test);
  if (binary && test_hidden != nullptr) {
    const VecX scores = test_scores.col(0);
    const VecXi labels = instance_labels_of(*test_hidden, 0);
    if (both_classes(labels))
      fold.final.instance = instance_metrics(scores, labels, eval.threshold);

    VecX bag_scores(static_cast<Eigen::Index>(test.bags.size()));
    VecXi bag_labels(static_cast<Eigen::Index>(test.bags.size()));
    for (std::size_t b = 0; b < test.bags.size(); ++b) {
      VecX in_bag(static_cast<Eigen::Index>(test.bags[b].size()));
      for (int j = 0; j < test.bags[b].size(); ++j)
        in_bag(j) = scores(test.bags[b].instance_ids[j]);
      bag_scores(static_cast<Eigen::Index>(b)) = bag_pool(in_bag, eval.bag_pool);
      bag_labels(static_cast<Eigen::Index>(b)) = test.bags[b].label(0);
    }
    if (both_classes(bag_labels)) {
      fold.final.bag_auc = roc_auc(bag_scores, bag_labels);
      fold.final.bag_acc =
          threshold_metrics(bag_scores, bag_labels, eval.threshold).acc;
    }
  } else if (!binary && test_hidden != nullptr) {
    double sum = 0.0;
    int counted = 0;
    fold.final.per_class_ap.assign(test.num_classes, 0.0);
    for (int c = 0; c < test.num_classes; ++c) {
      const VecXi labels = instance_labels_of(*test_hidden, c);
      if (labels.sum() == 0) continue;  // class absent from this fold
      const double ap = average_precision(test_scores.col(c), labels);
      fold.final.per_class_ap[c] = ap;
      sum += ap;
      ++counted;
    }
    if (counted > 0) fold.final.map = sum / counted;
  }

  if (binary && train_hidden != nullptr) {
    const VecX train_scores = score_clean(st.model, train).col(0);
    bool has_pos_bag = false;
    for (const Bag& bag : train.bags) has_pos_bag |= bag.positive_for(0);
    if (has_pos_bag)
      fold.final.diagnostic =
          confounding_diagnostic(train_scores, train, *train_hidden);
  }
  return fold;
}

LoadedData resolve_dataset(const ExperimentConfig& cfg) {
  LoadedData data;
  if (cfg.dataset.manifest_dir) {
    data.dataset = load_dataset(*cfg.dataset.manifest_dir);
    data.hidden =
        load_hidden_labels(*cfg.dataset.manifest_dir,
                           data.dataset.instance_count(),
                           data.dataset.num_classes);
    data.hash = dataset_content_hash(*cfg.dataset.manifest_dir);
  } else {
    SynthOutput out = generate_confounded_bags(*cfg.dataset.synthetic);
    data.dataset = std::move(out.dataset);
    data.hidden = std::move(out.hidden);
    data.hash = dataset_content_hash(data.dataset);
  }
  const ValidationReport v = validate_dataset(
      data.dataset, data.hidden ? &*data.hidden : nullptr);
  if (!v.ok()) throw DataError("invalid dataset: " + v.violations.front());
  return data;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  LoadedData data = resolve_dataset(cfg);
  const HiddenLabels* hidden = data.hidden ? &*data.hidden : nullptr;

  RunReport report;
  report.config_echo = serialize_config(cfg);
  report.seed = cfg.engine.seed;
  report.dataset_hash = data.hash;
  report.num_instances = data.dataset.instance_count();
  report.num_bags = static_cast<int>(data.dataset.bags.size());
  report.num_classes = data.dataset.num_classes;

  if (cfg.eval.folds == 1) {
    EngineConfig engine = cfg.engine;
    report.folds.push_back(run_em(engine, cfg.eval, data.dataset, hidden,
                                  data.dataset, hidden, 0));
    return report;
  }

  const auto splits = kfold_split(data.dataset, cfg.eval.folds,
                                  cfg.engine.seed);
  for (int f = 0; f < static_cast<int>(splits.size()); ++f) {
    std::vector<int> train_ids, test_ids;
    const Dataset train = subset_by_bags(data.dataset, splits[f].train_bags,
                                         &train_ids);
    const Dataset test = subset_by_bags(data.dataset, splits[f].test_bags,
                                        &test_ids);
    HiddenLabels train_hidden, test_hidden;
    if (hidden != nullptr) {
      train_hidden = subset_hidden(*hidden, train_ids);
      test_hidden = subset_hidden(*hidden, test_ids);
    }
    EngineConfig engine = cfg.engine;
    engine.seed = CounterRng(cfg.engine.seed, Stream::kFolds,
                             0xF01Du, static_cast<std::uint64_t>(f))
                      .next_u64();
    report.folds.push_back(run_em(engine, cfg.eval, train,
                                  hidden ? &train_hidden : nullptr, test,
                                  hidden ? &test_hidden : nullptr, f));
  }
  return report;
}

RunReport run_and_write(const ExperimentConfig& cfg) {
  RunReport report = run_experiment(cfg);
  write_run_outputs(report, cfg.output_dir);
  return report;
}

}  // namespace imil
