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
//
// End-to-end tests driving the installed CLI binary as a subprocess.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "test_util.hpp"

using nlohmann::json;

namespace {

int run_cli(const std::string& args, const std::string& capture_file,
            std::string* output = nullptr) {
  const std::string cmd = std::string(IMIL_CLI_PATH) + " " + args + " > " +
                          capture_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) *output = testutil::slurp(capture_file);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json tiny_config(const std::string& out_dir) {
  return json{
      {"dataset",
       {{"synthetic",
         {{"num_pos_bags", 4},
          {"num_neg_bags", 4},
          {"bag_size", {4, 4}},
          {"positive_rate", 0.5},
          {"noise_sigma", 0.25},
          {"payload", {{"kind", "vector"}, {"dim", 8}}},
          {"seed", 3}}}}},
      {"model", {{"arch", "mlp"}, {"hidden", {8}}}},
      {"optim", {{"lr", 0.005}, {"batch_size", 8}, {"epochs", 2}}},
      {"eval", {{"folds", 2}}},
      {"seed", 5},
      {"output_dir", out_dir}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate is byte-deterministic and respects --force") {
  testutil::TempDir dir("cli_gen");
  const std::string log = (dir.path() / "log.txt").string();
  const std::string a = (dir.path() / "a").string();
  const std::string b = (dir.path() / "b").string();
  const std::string flags =
      " --pos-bags 2 --neg-bags 2 --bag-size-min 3 --bag-size-max 3 --seed 1";

  CHECK(run_cli("generate --out " + a + flags, log) == 0);
  CHECK(run_cli("generate --out " + b + flags, log) == 0);
  CHECK(testutil::slurp(dir.path() / "a" / "manifest.json") ==
        testutil::slurp(dir.path() / "b" / "manifest.json"));
  CHECK(testutil::slurp(dir.path() / "a" / "instances.jsonl") ==
        testutil::slurp(dir.path() / "b" / "instances.jsonl"));
  CHECK(testutil::slurp(dir.path() / "a" / "labels.json") ==
        testutil::slurp(dir.path() / "b" / "labels.json"));

  // refuse to overwrite, then allow with --force
  std::string msg;
  CHECK(run_cli("generate --out " + a + flags, log, &msg) == 3);
  CHECK(msg.find("--force") != std::string::npos);
  CHECK(run_cli("generate --out " + a + flags + " --force", log) == 0);
}

TEST_CASE("generate names the offending field on invalid params") {
  testutil::TempDir dir("cli_gen_bad");
  const std::string log = (dir.path() / "log.txt").string();
  std::string msg;
  const int rc = run_cli(
      "generate --out " + (dir.path() / "x").string() + " --positive-rate 0",
      log, &msg);
  CHECK(rc == 2);
  CHECK(msg.find("positive_rate") != std::string::npos);
}

TEST_CASE("run is reproducible byte for byte") {
  testutil::TempDir dir("cli_run");
  const std::string log = (dir.path() / "log.txt").string();
  const std::string cfg_path = (dir.path() / "cfg.json").string();
  const std::string out1 = (dir.path() / "r1").string();
  const std::string out2 = (dir.path() / "r2").string();
  write_json(cfg_path, tiny_config(out1));

  CHECK(run_cli("run --config " + cfg_path, log) == 0);
  CHECK(run_cli("run --config " + cfg_path + " --output " + out2, log) == 0);

  CHECK(testutil::slurp(dir.path() / "r1" / "aggregate.csv") ==
        testutil::slurp(dir.path() / "r2" / "aggregate.csv"));
  CHECK(testutil::slurp(dir.path() / "r1" / "epochs.csv") ==
        testutil::slurp(dir.path() / "r2" / "epochs.csv"));
  // report.json differs only in the echoed output_dir; check the folds block
  json r1, r2;
  std::ifstream(dir.path() / "r1" / "report.json") >> r1;
  std::ifstream(dir.path() / "r2" / "report.json") >> r2;
  CHECK(r1.at("folds").dump() == r2.at("folds").dump());
  CHECK(r1.at("dataset").dump() == r2.at("dataset").dump());
}

TEST_CASE("unknown method exits with a config error naming the options") {
  testutil::TempDir dir("cli_badmethod");
  const std::string log = (dir.path() / "log.txt").string();
  json cfg = tiny_config((dir.path() / "out").string());
  cfg["method"] = "alchemy";
  const std::string cfg_path = (dir.path() / "cfg.json").string();
  write_json(cfg_path, cfg);
  std::string msg;
  CHECK(run_cli("run --config " + cfg_path, log, &msg) == 2);
  CHECK(msg.find("alchemy") != std::string::npos);
  CHECK(msg.find("imil") != std::string::npos);
}

TEST_CASE("compare tabulates runs and refuses mismatched datasets") {
  testutil::TempDir dir("cli_compare");
  const std::string log = (dir.path() / "log.txt").string();

  json cfg_a = tiny_config((dir.path() / "run_a").string());
  cfg_a["method"] = "simple";
  json cfg_b = tiny_config((dir.path() / "run_b").string());
  cfg_b["method"] = "imil";
  json cfg_c = tiny_config((dir.path() / "run_c").string());
  cfg_c["dataset"]["synthetic"]["seed"] = 99;  // different dataset

  for (const auto& [name, cfg] : {std::pair<std::string, json>{"a", cfg_a},
                                  {"b", cfg_b},
                                  {"c", cfg_c}}) {
    const std::string p = (dir.path() / ("cfg_" + name + ".json")).string();
    write_json(p, cfg);
    REQUIRE(run_cli("run --config " + p, log) == 0);
  }

  const std::string table = (dir.path() / "cmp.csv").string();
  CHECK(run_cli("compare " + (dir.path() / "run_a").string() + " " +
                    (dir.path() / "run_b").string() + " --out " + table,
                log) == 0);
  const std::string csv = testutil::slurp(table);
  CHECK(csv.find("delta_precision") != std::string::npos);
  CHECK(csv.find("simple") != std::string::npos);
  CHECK(csv.find("imil+ci") != std::string::npos);
  // header + two rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  std::string msg;
  CHECK(run_cli("compare " + (dir.path() / "run_a").string() + " " +
                    (dir.path() / "run_c").string() + " --out " + table,
                log, &msg) == 3);
  CHECK(msg.find("hash mismatch") != std::string::npos);
}

TEST_CASE("ablate-augment emits the full remove/add grid") {
  testutil::TempDir dir("cli_ablate");
  const std::string log = (dir.path() / "log.txt").string();
  json cfg = tiny_config((dir.path() / "out").string());
  cfg["dataset"]["synthetic"]["payload"] =
      json{{"kind", "image"}, {"height", 8}, {"width", 8}, {"channels", 3}};
  cfg["optim"]["epochs"] = 1;
  cfg["augment"] = {{"strong", {{"blur", false}, {"rotate", false}}}};
  const std::string cfg_path = (dir.path() / "cfg.json").string();
  write_json(cfg_path, cfg);

  const std::string table = (dir.path() / "ablation.csv").string();
  CHECK(run_cli("ablate-augment --config " + cfg_path + " --out " + table,
                log) == 0);
  const std::string csv = testutil::slurp(table);
  // base row + one cell per transform in the universe
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + 6);
  // disabled transforms appear as additions, enabled ones as removals
  CHECK(csv.find("+blur") != std::string::npos);
  CHECK(csv.find("+rotate") != std::string::npos);
  CHECK(csv.find("-crop") != std::string::npos);
  CHECK(csv.find("-jitter") != std::string::npos);
  CHECK(csv.find("base") != std::string::npos);
}

TEST_CASE("missing dataset manifest exits with the data error code") {
  testutil::TempDir dir("cli_baddata");
  const std::string log = (dir.path() / "log.txt").string();
  json cfg = tiny_config((dir.path() / "out").string());
  cfg["dataset"] = {{"manifest", (dir.path() / "no_such_dir").string()}};
  const std::string cfg_path = (dir.path() / "cfg.json").string();
  write_json(cfg_path, cfg);
  CHECK(run_cli("run --config " + cfg_path, log) == 3);
}

}  // TEST_SUITE
