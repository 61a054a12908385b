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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imil/dataset_io.hpp"
#include "imil/errors.hpp"
#include "imil/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct GenerateArgs {
  std::string out;
  bool force = false;
  imil::SynthParams params;
  std::string payload_kind = "vector";
  int dim = 32;
  int height = 32, width = 32, channels = 3;
};

int do_generate(const GenerateArgs& args) {
  imil::SynthParams params = args.params;
  params.payload = args.payload_kind == "image"
                       ? imil::PayloadShape::image(args.height, args.width,
                                                   args.channels)
                       : imil::PayloadShape::vector(args.dim);

  const fs::path manifest = fs::path(args.out) / "manifest.json";
  if (fs::exists(manifest) && !args.force)
    throw imil::DataError("refusing to overwrite " + manifest.string() +
                          " (use --force)");

  imil::SynthOutput out = imil::generate_confounded_bags(params);
  imil::save_dataset(out.dataset, args.out, &out.hidden);
  imil::save_generation_metadata(params, out.bag_confounder_norms, args.out);
  std::cout << "wrote " << out.dataset.instance_count() << " instances in "
            << out.dataset.bags.size() << " bags to " << args.out << "\n";
  return 0;
}

int do_run(const std::string& config_path, const std::string& output_override) {
  imil::ExperimentConfig cfg = imil::load_config_file(config_path);
  if (!output_override.empty()) cfg.output_dir = output_override;

  const imil::RunReport report = imil::run_and_write(cfg);
  for (const imil::FoldReport& fold : report.folds) {
    std::cout << "fold " << fold.fold;
    if (fold.final.instance)
      std::cout << "  auc=" << fmt(fold.final.instance->auc)
                << "  precision=" << fmt(fold.final.instance->precision);
    if (fold.final.map) std::cout << "  map=" << fmt(*fold.final.map);
    std::cout << "  stop_epoch=" << fold.stop_epoch << "\n";
  }
  if (!report.folds.empty() && report.folds.front().final.instance)
    std::cout << "mean auc=" << fmt(imil::aggregate_instance_metric(report, "auc"))
              << "  mean precision="
              << fmt(imil::aggregate_instance_metric(report, "precision"))
              << "\n";
  std::cout << "outputs in " << cfg.output_dir << "\n";
  return 0;
}

struct RunSummary {
  std::string label;
  std::string hash;
  double metrics[5];  // auc acc f1 recall precision
};

RunSummary read_run_dir(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "report.json");
  if (!in) throw imil::DataError("cannot read report.json in " + dir);
  json j;
  in >> j;
  RunSummary s;
  s.hash = j.at("dataset").at("hash").get<std::string>();
  const json& cfg = j.at("config");
  s.label = cfg.at("method").get<std::string>();
  if (cfg.at("intervention").get<bool>()) s.label += "+ci";
  const json& agg = j.at("aggregate");
  const char* keys[5] = {"instance_auc_mean", "instance_acc_mean",
                         "instance_f1_mean", "instance_recall_mean",
                         "instance_precision_mean"};
  for (int i = 0; i < 5; ++i) {
    if (!agg.contains(keys[i]))
      throw imil::DataError(dir + ": report has no aggregate instance metrics");
    s.metrics[i] = agg.at(keys[i]).get<double>();
  }
  return s;
}

int do_compare(const std::vector<std::string>& run_dirs,
               const std::string& out_path) {
  std::vector<RunSummary> runs;
  for (const std::string& dir : run_dirs) runs.push_back(read_run_dir(dir));
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].hash != runs.front().hash)
      throw imil::DataError("dataset hash mismatch: " + run_dirs[i] + " (" +
                            runs[i].hash + ") vs " + run_dirs.front() + " (" +
                            runs.front().hash + ")");

  std::string csv =
      "run,method,auc,acc,f1,recall,precision,"
      "delta_auc,delta_acc,delta_f1,delta_recall,delta_precision\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    csv += run_dirs[i] + ',' + runs[i].label;
    for (int m = 0; m < 5; ++m) csv += ',' + fmt(runs[i].metrics[m]);
    for (int m = 0; m < 5; ++m)
      csv += ',' + fmt(runs[i].metrics[m] - runs.front().metrics[m]);
    csv += '\n';
  }
  std::ofstream out(out_path);
  if (!out) throw imil::DataError("cannot write " + out_path);
  out << csv;
  std::cout << csv;
  return 0;
}

int do_ablate(const std::string& config_path, std::string out_path) {
  imil::ExperimentConfig cfg = imil::load_config_file(config_path);
  {
    const imil::LoadedData data = imil::resolve_dataset(cfg);
    if (data.dataset.shape.kind != imil::PayloadKind::kImage)
      throw imil::DataError(
          "ablate-augment needs an image-payload dataset");
  }
  if (out_path.empty())
    out_path = (fs::path(cfg.output_dir) / "ablation.csv").string();

  struct Cell {
    std::string name;
    imil::AugmentPolicy policy;
  };
  std::vector<Cell> cells;
  cells.push_back({"base", cfg.engine.strong_policy});
  for (const std::string& name : imil::image_transform_names()) {
    imil::AugmentPolicy p = cfg.engine.strong_policy;
    const bool enabled = p.transform_enabled(name);
    p.set_transform(name, !enabled);
    cells.push_back({(enabled ? "-" : "+") + name, p});
  }

  std::string csv = "cell,auc,delta\n";
  double base_auc = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    imil::ExperimentConfig cell_cfg = cfg;
    cell_cfg.engine.strong_policy = cells[i].policy;
    const imil::RunReport report = imil::run_experiment(cell_cfg);
    const double auc = imil::aggregate_instance_metric(report, "auc");
    if (i == 0) base_auc = auc;
    csv += cells[i].name + ',' + fmt(auc) + ',' + fmt(auc - base_auc) + '\n';
    std::cout << cells[i].name << " auc=" << fmt(auc) << "\n";
  }
  fs::create_directories(fs::path(out_path).parent_path());
  std::ofstream out(out_path);
  if (!out) throw imil::DataError("cannot write " + out_path);
  out << csv;
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imil: interventional multi-instance learning experiments"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate =
      app.add_subcommand("generate", "generate a synthetic confounded dataset");
  generate->add_option("--out", gen.out, "output directory")->required();
  generate->add_flag("--force", gen.force, "overwrite an existing dataset");
  generate->add_option("--pos-bags", gen.params.num_pos_bags);
  generate->add_option("--neg-bags", gen.params.num_neg_bags);
  generate->add_option("--bag-size-min", gen.params.bag_size_min);
  generate->add_option("--bag-size-max", gen.params.bag_size_max);
  generate->add_option("--positive-rate", gen.params.positive_rate);
  generate->add_option("--confounder-strength", gen.params.confounder_strength);
  generate->add_option("--signal-strength", gen.params.signal_strength);
  generate->add_option("--noise-sigma", gen.params.noise_sigma);
  generate->add_option("--payload", gen.payload_kind)
      ->check(CLI::IsMember({"vector", "image"}));
  generate->add_option("--dim", gen.dim, "vector payload dimension");
  generate->add_option("--height", gen.height);
  generate->add_option("--width", gen.width);
  generate->add_option("--channels", gen.channels);
  generate->add_option("--seed", gen.params.seed);

  std::string run_config, run_output;
  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", run_config, "experiment config (json)")
      ->required();
  run->add_option("--output", run_output, "override config output_dir");

  std::vector<std::string> compare_dirs;
  std::string compare_out = "comparison.csv";
  CLI::App* compare =
      app.add_subcommand("compare", "tabulate finished runs side by side");
  compare->add_option("runs", compare_dirs, "run output directories")
      ->expected(2, -1);
  compare->add_option("--out", compare_out, "comparison csv path");

  std::string ablate_config, ablate_out;
  CLI::App* ablate = app.add_subcommand(
      "ablate-augment", "remove/add one transform at a time and compare AUC");
  ablate->add_option("--config", ablate_config, "experiment config (json)")
      ->required();
  ablate->add_option("--out", ablate_out, "ablation csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) return do_generate(gen);
    if (*run) return do_run(run_config, run_output);
    if (*compare) return do_compare(compare_dirs, compare_out);
    if (*ablate) return do_ablate(ablate_config, ablate_out);
  } catch (const imil::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const imil::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
