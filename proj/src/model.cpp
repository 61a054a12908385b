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

#include "imil/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "imil/rng.hpp"

namespace imil {

namespace {

constexpr double kScoreLo = 1e-12;  // forward output open-interval clamp
constexpr double kBceLo = 1e-7;     // clamp inside the loss

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

using WMap = Eigen::Map<const MatX>;
using BMap = Eigen::Map<const VecX>;

// Column-major weight slices of the flat parameter vector, layer by layer:
// W0, b0, W1, b1, ...
struct LayerView {
  WMap w;
  BMap b;
};

std::vector<LayerView> layers(const ScorerModel& model) {
  std::vector<LayerView> out;
  const auto dims = model.layer_dims();
  const double* p = model.params.data();
  std::ptrdiff_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], outc = dims[l + 1];
    out.push_back({WMap(p + off, outc, in),
                   BMap(p + off + static_cast<std::ptrdiff_t>(outc) * in, outc)});
    off += static_cast<std::ptrdiff_t>(outc) * in + outc;
  }
  return out;
}

}  // namespace

std::vector<int> ScorerModel::layer_dims() const {
  std::vector<int> dims{input_dim};
  if (arch == Arch::kMlp)
    dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_classes);
  return dims;
}

int param_count(Arch arch, int input_dim, int num_classes,
                const std::vector<int>& hidden) {
  std::vector<int> dims{input_dim};
  if (arch == Arch::kMlp) dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_classes);
  int count = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    count += dims[l] * dims[l + 1] + dims[l + 1];
  return count;
}

ScorerModel make_scorer(Arch arch, int input_dim, int num_classes,
                        const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_dim <= 0 || num_classes <= 0)
    throw std::invalid_argument("make_scorer: non-positive dimensions");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("make_scorer: bad hidden size");

  ScorerModel model;
  model.arch = arch;
  model.input_dim = input_dim;
  model.num_classes = num_classes;
  model.hidden = arch == Arch::kMlp ? hidden : std::vector<int>{};
  model.params.resize(param_count(arch, input_dim, num_classes, model.hidden));

  const auto dims = model.layer_dims();
  std::ptrdiff_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    CounterRng rng(seed, Stream::kModelInit, l);
    const double limit = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in * out; ++i)
      model.params(off + i) = rng.uniform(-limit, limit);
    off += static_cast<std::ptrdiff_t>(in) * out;
    model.params.segment(off, out).setZero();
    off += out;
  }
  return model;
}

MatX forward(const ScorerModel& model, const MatX& inputs) {
  if (inputs.cols() != model.input_dim)
    throw std::invalid_argument("forward: input width mismatch");
  MatX a = inputs;
  const auto views = layers(model);
  for (std::size_t l = 0; l < views.size(); ++l) {
    MatX z = a * views[l].w.transpose();
    z.rowwise() += views[l].b.transpose();
    if (l + 1 < views.size())
      a = z.cwiseMax(0.0);
    else
      a = z.unaryExpr([](double v) {
        return std::min(1.0 - kScoreLo, std::max(kScoreLo, sigmoid(v)));
      });
  }
  return a;
}

LossGrad loss_and_grad(const ScorerModel& model, const MatX& inputs,
                       const MatX& targets, const MatX& weights) {
  const Eigen::Index batch = inputs.rows();
  if (batch == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (inputs.cols() != model.input_dim ||
      targets.rows() != batch || weights.rows() != batch ||
      targets.cols() != model.num_classes ||
      weights.cols() != model.num_classes)
    throw std::invalid_argument("loss_and_grad: shape mismatch");
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any())
    throw std::invalid_argument("loss_and_grad: weight outside [0,1]");

  const auto views = layers(model);
  const std::size_t num_layers = views.size();

  // forward, keeping activations
  std::vector<MatX> acts(num_layers + 1);
  acts[0] = inputs;
  for (std::size_t l = 0; l < num_layers; ++l) {
    MatX z = acts[l] * views[l].w.transpose();
    z.rowwise() += views[l].b.transpose();
    if (l + 1 < num_layers) z = z.cwiseMax(0.0);
    acts[l + 1] = std::move(z);
  }
  const MatX probs = acts[num_layers].unaryExpr(
      [](double z) { return sigmoid(z); });

  const double norm = static_cast<double>(batch * model.num_classes);
  double loss = 0.0;
  MatX delta(batch, model.num_classes);
  for (Eigen::Index i = 0; i < batch; ++i) {
    for (int c = 0; c < model.num_classes; ++c) {
      const double p = probs(i, c);
      const double pc = std::min(1.0 - kBceLo, std::max(kBceLo, p));
      const double y = targets(i, c);
      const double w = weights(i, c);
      loss += -w * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
      // gradient of the clamped objective: zero where the clamp is active
      const bool inside = p > kBceLo && p < 1.0 - kBceLo;
      delta(i, c) = inside ? w * (p - y) / norm : 0.0;
    }
  }
  loss /= norm;

  LossGrad result;
  result.loss = loss;
  result.grad = VecX::Zero(model.params.size());

  // backward; gradient layout mirrors the parameter layout
  const auto dims = model.layer_dims();
  std::vector<std::ptrdiff_t> offsets(num_layers);
  std::ptrdiff_t off = 0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::ptrdiff_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  for (std::size_t l = num_layers; l-- > 0;) {
    const int in = dims[l], out = dims[l + 1];
    Eigen::Map<MatX> dw(result.grad.data() + offsets[l], out, in);
    Eigen::Map<VecX> db(
        result.grad.data() + offsets[l] + static_cast<std::ptrdiff_t>(out) * in,
        out);
    dw = delta.transpose() * acts[l];
    db = delta.colwise().sum().transpose();
    if (l > 0) {
      MatX da = delta * views[l].w;
      // relu mask from the stored post-activation (post == 0 iff pre <= 0)
      delta = da.cwiseProduct(
          acts[l].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
  }
  return result;
}

OptimizerState make_optimizer(const ScorerModel& model) {
  OptimizerState opt;
  opt.m = VecX::Zero(model.params.size());
  opt.v = VecX::Zero(model.params.size());
  return opt;
}

void adam_step(ScorerModel& model, OptimizerState& opt, const VecX& grad,
               double lr) {
  if (grad.size() != model.params.size() || opt.m.size() != grad.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grad.allFinite())
    throw std::invalid_argument("adam_step: non-finite gradient");

  opt.step += 1;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  model.params.array() -=
      lr * (opt.m.array() / bc1) /
      ((opt.v.array() / bc2).sqrt() + opt.eps);
}

double cosine_lr(int epoch, int total_epochs, double base_lr) {
  if (total_epochs <= 0)
    throw std::invalid_argument("cosine_lr: total_epochs must be > 0");
  if (epoch < 0 || epoch >= total_epochs)
    throw std::invalid_argument("cosine_lr: epoch out of range");
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * epoch / total_epochs));
}

void save_checkpoint(const ScorerModel& model, const std::string& path) {
  nlohmann::json j;
  j["arch"] = model.arch == Arch::kLinear ? "linear" : "mlp";
  j["input_dim"] = model.input_dim;
  j["num_classes"] = model.num_classes;
  j["hidden"] = model.hidden;
  j["params"] = std::vector<double>(model.params.data(),
                                    model.params.data() + model.params.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

ScorerModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  ScorerModel model;
  model.arch = j.at("arch").get<std::string>() == "linear" ? Arch::kLinear
                                                           : Arch::kMlp;
  model.input_dim = j.at("input_dim").get<int>();
  model.num_classes = j.at("num_classes").get<int>();
  model.hidden = j.at("hidden").get<std::vector<int>>();
  const auto params = j.at("params").get<std::vector<double>>();
  const int expected = param_count(model.arch, model.input_dim,
                                   model.num_classes, model.hidden);
  if (static_cast<int>(params.size()) != expected)
    throw std::runtime_error("checkpoint parameter count mismatch");
  model.params = Eigen::Map<const VecX>(params.data(), params.size());
  return model;
}

}  // namespace imil
