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

#include "imil/config.hpp"

#include <fstream>
#include <set>

#include "imil/errors.hpp"

using nlohmann::json;

namespace imil {

namespace {

// Walks the config object carrying the field path for error messages and
// rejecting unknown keys.
class Cursor {
 public:
  Cursor(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  bool has(const std::string& key) const {
    return j_->is_object() && j_->contains(key);
  }
  Cursor child(const std::string& key) const {
    require_object();
    if (!j_->contains(key)) fail("missing required field");
    return Cursor((*j_)[key], path_.empty() ? key : path_ + "." + key);
  }
  void check_keys(const std::set<std::string>& allowed) const {
    require_object();
    for (const auto& [key, _] : j_->items())
      if (!allowed.count(key))
        throw ConfigError((path_.empty() ? key : path_ + "." + key) +
                          ": unknown field");
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  double number(double lo, double hi) const {
    const double v = number();
    if (v < lo || v > hi)
      fail("value " + std::to_string(v) + " outside [" + std::to_string(lo) +
           ", " + std::to_string(hi) + "]");
    return v;
  }
  int integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<int>();
  }
  int integer_min(int lo) const {
    const int v = integer();
    if (v < lo) fail("must be >= " + std::to_string(lo));
    return v;
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected a boolean");
    return j_->get<bool>();
  }
  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  std::pair<double, double> range() const {
    if (!j_->is_array() || j_->size() != 2 || !(*j_)[0].is_number() ||
        !(*j_)[1].is_number())
      fail("expected [lo, hi]");
    const double lo = (*j_)[0].get<double>(), hi = (*j_)[1].get<double>();
    if (lo > hi) fail("lo > hi");
    return {lo, hi};
  }
  std::vector<int> int_array() const {
    if (!j_->is_array()) fail("expected an array of integers");
    std::vector<int> out;
    for (const auto& v : *j_) {
      if (!v.is_number_integer()) fail("expected an array of integers");
      out.push_back(v.get<int>());
    }
    return out;
  }
  std::uint64_t u64() const {
    if (!j_->is_number_unsigned() && !j_->is_number_integer())
      fail("expected a non-negative integer");
    const auto v = j_->get<std::int64_t>();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(path_ + ": " + msg);
  }
  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

 private:
  void require_object() const {
    if (!j_->is_object()) fail("expected an object");
  }
  const json* j_;
  std::string path_;
};

void parse_image_policy(const Cursor& c, AugmentPolicy& p) {
  c.check_keys({"crop", "crop_scale", "flip", "flip_prob", "jitter",
                "jitter_prob", "brightness", "contrast", "saturation", "hue",
                "grayscale", "grayscale_prob", "blur", "blur_prob",
                "blur_sigma", "rotate", "rotate_prob"});
  if (c.has("crop")) p.crop = c.child("crop").boolean();
  if (c.has("crop_scale")) {
    auto [lo, hi] = c.child("crop_scale").range();
    if (lo <= 0.0 || hi > 1.0) c.child("crop_scale").fail("must be within (0,1]");
    p.crop_scale_lo = lo;
    p.crop_scale_hi = hi;
  }
  if (c.has("flip")) p.flip = c.child("flip").boolean();
  if (c.has("flip_prob")) p.flip_prob = c.child("flip_prob").number(0.0, 1.0);
  if (c.has("jitter")) p.jitter = c.child("jitter").boolean();
  if (c.has("jitter_prob"))
    p.jitter_prob = c.child("jitter_prob").number(0.0, 1.0);
  if (c.has("brightness"))
    std::tie(p.brightness_lo, p.brightness_hi) = c.child("brightness").range();
  if (c.has("contrast"))
    std::tie(p.contrast_lo, p.contrast_hi) = c.child("contrast").range();
  if (c.has("saturation"))
    std::tie(p.saturation_lo, p.saturation_hi) = c.child("saturation").range();
  if (c.has("hue")) p.hue_max = c.child("hue").number(0.0, 0.5);
  if (c.has("grayscale")) p.grayscale = c.child("grayscale").boolean();
  if (c.has("grayscale_prob"))
    p.grayscale_prob = c.child("grayscale_prob").number(0.0, 1.0);
  if (c.has("blur")) p.blur = c.child("blur").boolean();
  if (c.has("blur_prob")) p.blur_prob = c.child("blur_prob").number(0.0, 1.0);
  if (c.has("blur_sigma")) {
    auto [lo, hi] = c.child("blur_sigma").range();
    if (lo <= 0.0) c.child("blur_sigma").fail("sigma must be > 0");
    p.blur_sigma_lo = lo;
    p.blur_sigma_hi = hi;
  }
  if (c.has("rotate")) p.rotate = c.child("rotate").boolean();
  if (c.has("rotate_prob"))
    p.rotate_prob = c.child("rotate_prob").number(0.0, 1.0);
}

json image_policy_json(const AugmentPolicy& p) {
  return json{{"crop", p.crop},
              {"crop_scale", {p.crop_scale_lo, p.crop_scale_hi}},
              {"flip", p.flip},
              {"flip_prob", p.flip_prob},
              {"jitter", p.jitter},
              {"jitter_prob", p.jitter_prob},
              {"brightness", {p.brightness_lo, p.brightness_hi}},
              {"contrast", {p.contrast_lo, p.contrast_hi}},
              {"saturation", {p.saturation_lo, p.saturation_hi}},
              {"hue", p.hue_max},
              {"grayscale", p.grayscale},
              {"grayscale_prob", p.grayscale_prob},
              {"blur", p.blur},
              {"blur_prob", p.blur_prob},
              {"blur_sigma", {p.blur_sigma_lo, p.blur_sigma_hi}},
              {"rotate", p.rotate},
              {"rotate_prob", p.rotate_prob}};
}

PayloadShape parse_payload(const Cursor& c) {
  c.check_keys({"kind", "dim", "height", "width", "channels"});
  const std::string kind = c.child("kind").str();
  if (kind == "vector")
    return PayloadShape::vector(c.child("dim").integer_min(1));
  if (kind == "image")
    return PayloadShape::image(c.child("height").integer_min(1),
                               c.child("width").integer_min(1),
                               c.child("channels").integer_min(1));
  c.child("kind").fail("expected 'vector' or 'image'");
}

SynthParams parse_synth(const Cursor& c) {
  c.check_keys({"num_pos_bags", "num_neg_bags", "bag_size", "positive_rate",
                "confounder_strength", "signal_strength", "noise_sigma",
                "payload", "seed"});
  SynthParams p;
  if (c.has("num_pos_bags"))
    p.num_pos_bags = c.child("num_pos_bags").integer_min(0);
  if (c.has("num_neg_bags"))
    p.num_neg_bags = c.child("num_neg_bags").integer_min(0);
  if (c.has("bag_size")) {
    auto [lo, hi] = c.child("bag_size").range();
    p.bag_size_min = static_cast<int>(lo);
    p.bag_size_max = static_cast<int>(hi);
  }
  if (c.has("positive_rate")) {
    p.positive_rate = c.child("positive_rate").number();
    if (p.positive_rate <= 0.0 || p.positive_rate > 1.0)
      c.child("positive_rate").fail("must be in (0,1]");
  }
  if (c.has("confounder_strength"))
    p.confounder_strength = c.child("confounder_strength").number(0.0, 1e9);
  if (c.has("signal_strength")) {
    p.signal_strength = c.child("signal_strength").number();
    if (p.signal_strength <= 0.0)
      c.child("signal_strength").fail("must be > 0");
  }
  if (c.has("noise_sigma"))
    p.noise_sigma = c.child("noise_sigma").number(0.0, 1e9);
  if (c.has("payload")) p.payload = parse_payload(c.child("payload"));
  if (c.has("seed")) p.seed = c.child("seed").u64();
  return p;
}

json synth_json(const SynthParams& p) {
  json payload = p.payload.kind == PayloadKind::kVector
                     ? json{{"kind", "vector"}, {"dim", p.payload.dim}}
                     : json{{"kind", "image"},
                            {"height", p.payload.height},
                            {"width", p.payload.width},
                            {"channels", p.payload.channels}};
  return json{{"num_pos_bags", p.num_pos_bags},
              {"num_neg_bags", p.num_neg_bags},
              {"bag_size", {p.bag_size_min, p.bag_size_max}},
              {"positive_rate", p.positive_rate},
              {"confounder_strength", p.confounder_strength},
              {"signal_strength", p.signal_strength},
              {"noise_sigma", p.noise_sigma},
              {"payload", payload},
              {"seed", p.seed}};
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::kSimple: return "simple";
    case Method::kTopK: return "topk";
    case Method::kBagThreshold: return "bag_threshold";
    case Method::kOracle: return "oracle";
    case Method::kImil: return "imil";
  }
  return "imil";
}

Method method_from_name(const std::string& name) {
  if (name == "simple") return Method::kSimple;
  if (name == "topk") return Method::kTopK;
  if (name == "bag_threshold") return Method::kBagThreshold;
  if (name == "oracle") return Method::kOracle;
  if (name == "imil") return Method::kImil;
  throw ConfigError(
      "method: unknown method '" + name +
      "' (valid: simple, topk, bag_threshold, oracle, imil)");
}

ExperimentConfig parse_config(const json& j) {
  Cursor root(j, "");
  root.check_keys({"dataset", "method", "intervention", "augment", "model",
                   "optim", "selection", "topk_k", "eval", "seed",
                   "output_dir"});
  ExperimentConfig cfg;

  {
    Cursor d = root.child("dataset");
    d.check_keys({"manifest", "synthetic"});
    if (d.has("manifest") == d.has("synthetic"))
      d.fail("exactly one of 'manifest' or 'synthetic' is required");
    if (d.has("manifest"))
      cfg.dataset.manifest_dir = d.child("manifest").str();
    else
      cfg.dataset.synthetic = parse_synth(d.child("synthetic"));
  }

  if (root.has("method"))
    cfg.engine.method = method_from_name(root.child("method").str());
  if (root.has("intervention"))
    cfg.engine.intervention = root.child("intervention").boolean();
  if (root.has("seed")) cfg.engine.seed = root.child("seed").u64();
  if (root.has("output_dir")) cfg.output_dir = root.child("output_dir").str();
  if (root.has("topk_k")) cfg.engine.topk_k = root.child("topk_k").integer_min(1);

  if (root.has("augment")) {
    Cursor a = root.child("augment");
    a.check_keys({"strong", "weak", "vector", "escore_policy", "escore_draws"});
    if (a.has("strong")) parse_image_policy(a.child("strong"), cfg.engine.strong_policy);
    if (a.has("weak")) parse_image_policy(a.child("weak"), cfg.engine.weak_policy);
    if (a.has("vector")) {
      Cursor v = a.child("vector");
      v.check_keys({"sigma", "rescale", "rescale_range", "signal_dims"});
      double sigma = cfg.engine.strong_policy.vec_sigma;
      bool rescale = cfg.engine.strong_policy.vec_rescale;
      double lo = cfg.engine.strong_policy.vec_rescale_lo;
      double hi = cfg.engine.strong_policy.vec_rescale_hi;
      int sd = cfg.engine.strong_policy.vec_signal_dims;
      if (v.has("sigma")) sigma = v.child("sigma").number(0.0, 1e9);
      if (v.has("rescale")) rescale = v.child("rescale").boolean();
      if (v.has("rescale_range")) std::tie(lo, hi) = v.child("rescale_range").range();
      if (v.has("signal_dims")) sd = v.child("signal_dims").integer_min(-1);
      for (AugmentPolicy* p : {&cfg.engine.strong_policy, &cfg.engine.weak_policy}) {
        p->vec_sigma = sigma;
        p->vec_rescale_lo = lo;
        p->vec_rescale_hi = hi;
        p->vec_signal_dims = sd;
      }
      cfg.engine.strong_policy.vec_rescale = rescale;
    }
    if (a.has("escore_policy")) {
      const std::string s = a.child("escore_policy").str();
      if (s == "weak") cfg.engine.escore_policy = EScorePolicy::kWeak;
      else if (s == "none") cfg.engine.escore_policy = EScorePolicy::kNone;
      else a.child("escore_policy").fail("expected 'weak' or 'none'");
    }
    if (a.has("escore_draws"))
      cfg.engine.escore_draws = a.child("escore_draws").integer_min(1);
  }

  if (root.has("model")) {
    Cursor m = root.child("model");
    m.check_keys({"arch", "hidden"});
    if (m.has("arch")) {
      const std::string s = m.child("arch").str();
      if (s == "linear") cfg.engine.arch = Arch::kLinear;
      else if (s == "mlp") cfg.engine.arch = Arch::kMlp;
      else m.child("arch").fail("expected 'linear' or 'mlp'");
    }
    if (m.has("hidden")) {
      cfg.engine.hidden = m.child("hidden").int_array();
      for (int h : cfg.engine.hidden)
        if (h < 1) m.child("hidden").fail("hidden sizes must be >= 1");
    }
  }

  if (root.has("optim")) {
    Cursor o = root.child("optim");
    o.check_keys({"lr", "batch_size", "epochs"});
    if (o.has("lr")) {
      cfg.engine.base_lr = o.child("lr").number();
      if (cfg.engine.base_lr <= 0.0) o.child("lr").fail("must be > 0");
    }
    if (o.has("batch_size"))
      cfg.engine.batch_size = o.child("batch_size").integer_min(1);
    if (o.has("epochs")) cfg.engine.epochs = o.child("epochs").integer_min(0);
  }

  if (root.has("selection")) {
    Cursor s = root.child("selection");
    s.check_keys({"momentum", "ratio_decay", "stop_threshold", "min_ratio",
                  "soft_weight", "pool", "freeze_mode"});
    if (s.has("momentum")) {
      cfg.engine.momentum = s.child("momentum").number(0.0, 1.0);
      if (cfg.engine.momentum >= 1.0)
        s.child("momentum").fail("must be in [0,1)");
    }
    if (s.has("ratio_decay")) {
      cfg.engine.tau = s.child("ratio_decay").number();
      if (cfg.engine.tau <= 0.0) s.child("ratio_decay").fail("must be > 0");
    }
    if (s.has("stop_threshold"))
      cfg.engine.stop_threshold = s.child("stop_threshold").number();
    if (s.has("min_ratio"))
      cfg.engine.r_min = s.child("min_ratio").number(0.0, 1.0);
    if (s.has("soft_weight"))
      cfg.engine.soft_weight = s.child("soft_weight").number(0.0, 1.0);
    if (s.has("pool")) {
      const std::string p = s.child("pool").str();
      if (p == "positive") cfg.engine.pool_mode = PoolMode::kPositiveBags;
      else if (p == "all") cfg.engine.pool_mode = PoolMode::kAll;
      else s.child("pool").fail("expected 'positive' or 'all'");
    }
    if (s.has("freeze_mode")) {
      const std::string f = s.child("freeze_mode").str();
      if (f == "ratio") cfg.engine.freeze_mode = FreezeMode::kRatio;
      else if (f == "set") cfg.engine.freeze_mode = FreezeMode::kSet;
      else s.child("freeze_mode").fail("expected 'ratio' or 'set'");
    }
  }

  if (root.has("eval")) {
    Cursor e = root.child("eval");
    e.check_keys({"folds", "threshold", "bag_pool", "eval_every"});
    if (e.has("folds")) cfg.eval.folds = e.child("folds").integer_min(1);
    if (e.has("threshold"))
      cfg.eval.threshold = e.child("threshold").number(0.0, 1.0);
    if (e.has("bag_pool")) {
      const std::string b = e.child("bag_pool").str();
      if (b == "max") cfg.eval.bag_pool = BagPoolMode::kMax;
      else if (b == "mean") cfg.eval.bag_pool = BagPoolMode::kMean;
      else if (b == "voting") cfg.eval.bag_pool = BagPoolMode::kVoting;
      else e.child("bag_pool").fail("expected 'max', 'mean' or 'voting'");
    }
    if (e.has("eval_every"))
      cfg.eval.eval_every = e.child("eval_every").integer_min(0);
  }

  if (cfg.output_dir.empty())
    throw ConfigError("output_dir: missing required field");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

json serialize_config(const ExperimentConfig& cfg) {
  json dataset;
  if (cfg.dataset.manifest_dir)
    dataset = json{{"manifest", *cfg.dataset.manifest_dir}};
  else
    dataset = json{{"synthetic", synth_json(*cfg.dataset.synthetic)}};

  json vector_block{
      {"sigma", cfg.engine.strong_policy.vec_sigma},
      {"rescale", cfg.engine.strong_policy.vec_rescale},
      {"rescale_range",
       {cfg.engine.strong_policy.vec_rescale_lo,
        cfg.engine.strong_policy.vec_rescale_hi}},
      {"signal_dims", cfg.engine.strong_policy.vec_signal_dims}};

  return json{
      {"dataset", dataset},
      {"method", method_name(cfg.engine.method)},
      {"intervention", cfg.engine.intervention},
      {"augment",
       {{"strong", image_policy_json(cfg.engine.strong_policy)},
        {"weak", image_policy_json(cfg.engine.weak_policy)},
        {"vector", vector_block},
        {"escore_policy",
         cfg.engine.escore_policy == EScorePolicy::kWeak ? "weak" : "none"},
        {"escore_draws", cfg.engine.escore_draws}}},
      {"model",
       {{"arch", cfg.engine.arch == Arch::kLinear ? "linear" : "mlp"},
        {"hidden", cfg.engine.hidden}}},
      {"optim",
       {{"lr", cfg.engine.base_lr},
        {"batch_size", cfg.engine.batch_size},
        {"epochs", cfg.engine.epochs}}},
      {"selection",
       {{"momentum", cfg.engine.momentum},
        {"ratio_decay", cfg.engine.tau},
        {"stop_threshold", cfg.engine.stop_threshold},
        {"min_ratio", cfg.engine.r_min},
        {"soft_weight", cfg.engine.soft_weight},
        {"pool",
         cfg.engine.pool_mode == PoolMode::kPositiveBags ? "positive" : "all"},
        {"freeze_mode",
         cfg.engine.freeze_mode == FreezeMode::kRatio ? "ratio" : "set"}}},
      {"topk_k", cfg.engine.topk_k},
      {"eval",
       {{"folds", cfg.eval.folds},
        {"threshold", cfg.eval.threshold},
        {"bag_pool", cfg.eval.bag_pool == BagPoolMode::kMax
                         ? "max"
                         : cfg.eval.bag_pool == BagPoolMode::kMean ? "mean"
                                                                   : "voting"},
        {"eval_every", cfg.eval.eval_every}}},
      {"seed", cfg.engine.seed},
      {"output_dir", cfg.output_dir}};
}

}  // namespace imil
