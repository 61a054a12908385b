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

#include "imil/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace imil {

namespace {

// shortest-ish deterministic decimal; plain integers print without exponent
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json metrics_json(const MetricsRecord& m) {
  return json{{"auc", m.auc},           {"acc", m.acc},
              {"f1", m.f1},             {"recall", m.recall},
              {"precision", m.precision}, {"support_pos", m.support_pos},
              {"support_neg", m.support_neg}};
}

json group_json(const GroupStat& g) {
  return json{{"mean", g.mean},
              {"ci_low", g.ci_low},
              {"ci_high", g.ci_high},
              {"num_bags", g.num_bags}};
}

}  // namespace

json report_to_json(const RunReport& report) {
  json folds = json::array();
  for (const FoldReport& f : report.folds) {
    json epochs = json::array();
    for (const EpochRecord& e : f.epochs) {
      json row{{"epoch", e.epoch},       {"lr", e.lr},
               {"ratio", e.ratio},       {"epsilon", e.epsilon},
               {"selected", e.n_selected}, {"frozen", e.frozen}};
      if (e.train_loss) row["train_loss"] = *e.train_loss;
      if (e.selection_precision)
        row["selection_precision"] = *e.selection_precision;
      if (e.eval) row["metrics"] = metrics_json(*e.eval);
      epochs.push_back(std::move(row));
    }
    json final;
    if (f.final.instance) final["instance"] = metrics_json(*f.final.instance);
    if (f.final.bag_auc)
      final["bag"] = json{{"auc", *f.final.bag_auc}, {"acc", *f.final.bag_acc}};
    if (f.final.map) {
      final["map"] = *f.final.map;
      final["per_class_ap"] = f.final.per_class_ap;
    }
    if (f.final.diagnostic) {
      const ConfoundingDiagnostic& d = *f.final.diagnostic;
      final["diagnostic"] =
          json{{"pos_bag_positive", group_json(d.pos_bag_positive)},
               {"pos_bag_all", group_json(d.pos_bag_all)},
               {"pos_bag_negative", group_json(d.pos_bag_negative)},
               {"neg_bag_all", group_json(d.neg_bag_all)},
               {"mean_within_bag_std", d.mean_within_bag_std}};
    }
    folds.push_back(json{{"fold", f.fold},
                         {"stop_epoch", f.stop_epoch},
                         {"epochs", std::move(epochs)},
                         {"final", std::move(final)}});
  }

  json aggregate = json::object();
  if (!report.folds.empty() && report.folds.front().final.instance) {
    for (const char* name : {"auc", "acc", "f1", "recall", "precision"}) {
      double mean = aggregate_instance_metric(report, name);
      double ss = 0.0;
      for (const FoldReport& f : report.folds) {
        const MetricsRecord& m = *f.final.instance;
        const double v = name == std::string("auc")     ? m.auc
                         : name == std::string("acc")   ? m.acc
                         : name == std::string("f1")    ? m.f1
                         : name == std::string("recall") ? m.recall
                                                         : m.precision;
        ss += (v - mean) * (v - mean);
      }
      aggregate[std::string("instance_") + name + "_mean"] = mean;
      aggregate[std::string("instance_") + name + "_std"] =
          std::sqrt(ss / report.folds.size());
    }
  }
  if (!report.folds.empty() && report.folds.front().final.map) {
    double sum = 0.0;
    for (const FoldReport& f : report.folds) sum += *f.final.map;
    aggregate["map_mean"] = sum / report.folds.size();
  }

  return json{{"config", report.config_echo},
              {"seed", report.seed},
              {"dataset",
               {{"hash", report.dataset_hash},
                {"instances", report.num_instances},
                {"bags", report.num_bags},
                {"num_classes", report.num_classes}}},
              {"folds", std::move(folds)},
              {"aggregate", std::move(aggregate)}};
}

std::string epochs_csv(const RunReport& report) {
  std::string out =
      "fold,epoch,lr,ratio,epsilon,selected,frozen,train_loss,"
      "selection_precision,auc,acc,f1,recall,precision\n";
  for (const FoldReport& f : report.folds) {
    for (const EpochRecord& e : f.epochs) {
      out += std::to_string(f.fold) + ',' + std::to_string(e.epoch) + ',' +
             fmt(e.lr) + ',' + fmt(e.ratio) + ',' + fmt(e.epsilon) + ',' +
             std::to_string(e.n_selected) + ',' + (e.frozen ? "1" : "0") + ',';
      out += e.train_loss ? fmt(*e.train_loss) : "";
      out += ',';
      out += e.selection_precision ? fmt(*e.selection_precision) : "";
      if (e.eval) {
        out += ',' + fmt(e.eval->auc) + ',' + fmt(e.eval->acc) + ',' +
               fmt(e.eval->f1) + ',' + fmt(e.eval->recall) + ',' +
               fmt(e.eval->precision);
      } else {
        out += ",,,,,";
      }
      out += '\n';
    }
  }
  return out;
}

std::string aggregate_csv(const RunReport& report) {
  std::string out = "fold,auc,acc,f1,recall,precision,stop_epoch\n";
  int with_instance = 0;
  double sums[5] = {0, 0, 0, 0, 0};
  for (const FoldReport& f : report.folds) {
    out += std::to_string(f.fold);
    if (f.final.instance) {
      const MetricsRecord& m = *f.final.instance;
      out += ',' + fmt(m.auc) + ',' + fmt(m.acc) + ',' + fmt(m.f1) + ',' +
             fmt(m.recall) + ',' + fmt(m.precision);
      sums[0] += m.auc;
      sums[1] += m.acc;
      sums[2] += m.f1;
      sums[3] += m.recall;
      sums[4] += m.precision;
      ++with_instance;
    } else {
      out += ",,,,,";
    }
    out += ',' + std::to_string(f.stop_epoch) + '\n';
  }
  if (with_instance > 0) {
    out += "mean";
    for (double s : sums) out += ',' + fmt(s / with_instance);
    out += ",\n";
  }
  return out;
}

double aggregate_instance_metric(const RunReport& report,
                                 const std::string& metric) {
  if (report.folds.empty())
    throw std::invalid_argument("aggregate_instance_metric: no folds");
  double sum = 0.0;
  int count = 0;
  for (const FoldReport& f : report.folds) {
    if (!f.final.instance) continue;
    const MetricsRecord& m = *f.final.instance;
    if (metric == "auc") sum += m.auc;
    else if (metric == "acc") sum += m.acc;
    else if (metric == "f1") sum += m.f1;
    else if (metric == "recall") sum += m.recall;
    else if (metric == "precision") sum += m.precision;
    else throw std::invalid_argument("unknown metric: " + metric);
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("aggregate_instance_metric: no final metrics");
  return sum / count;
}

void write_run_outputs(const RunReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "config.json");
    out << report.config_echo.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "epochs.csv");
    out << epochs_csv(report);
  }
  {
    std::ofstream out(fs::path(out_dir) / "aggregate.csv");
    out << aggregate_csv(report);
  }
}

}  // namespace imil
