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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "imil/model.hpp"
#include "imil/rng.hpp"
#include "test_util.hpp"

using namespace imil;

namespace {

// central finite differences of the weighted BCE loss
VecX fd_gradient(ScorerModel model, const MatX& x, const MatX& y,
                 const MatX& w, double h = 1e-4) {
  VecX grad(model.params.size());
  for (Eigen::Index i = 0; i < model.params.size(); ++i) {
    const double saved = model.params(i);
    model.params(i) = saved + h;
    const double up = loss_and_grad(model, x, y, w).loss;
    model.params(i) = saved - h;
    const double down = loss_and_grad(model, x, y, w).loss;
    model.params(i) = saved;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

void check_gradient(Arch arch, std::uint64_t seed) {
  CounterRng rng(seed, Stream::kDataGen, 55);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 3 + static_cast<int>(rng.uniform_int(5));
    const int classes = 1 + static_cast<int>(rng.uniform_int(3));
    const int batch = 2 + static_cast<int>(rng.uniform_int(6));
    ScorerModel model =
        make_scorer(arch, dim, classes, {5}, rng.next_u64());
    // move off the zero-bias init so the test hits generic points
    for (Eigen::Index i = 0; i < model.params.size(); ++i)
      model.params(i) += 0.1 * rng.normal();

    MatX x(batch, dim), y(batch, classes), w(batch, classes);
    for (int b = 0; b < batch; ++b) {
      for (int d = 0; d < dim; ++d) x(b, d) = rng.normal();
      for (int c = 0; c < classes; ++c) {
        y(b, c) = static_cast<double>(rng.uniform_int(2));
        w(b, c) = rng.uniform();
      }
    }
    const LossGrad lg = loss_and_grad(model, x, y, w);
    const VecX fd = fd_gradient(model, x, y, w);
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      const double rel =
          std::abs(lg.grad(i) - fd(i)) / std::max(std::abs(fd(i)), 1e-6);
      CHECK(rel < 1e-4);
    }
  }
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero parameters score one half") {
  ScorerModel model = make_scorer(Arch::kMlp, 4, 1, {3}, 1);
  model.params.setZero();
  MatX x(2, 4);
  x << 1, 2, 3, 4, -1, 0, 1, 0;
  const MatX p = forward(model, x);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("linear unit weight recovers the sigmoid") {
  ScorerModel model = make_scorer(Arch::kLinear, 3, 1, {}, 1);
  model.params.setZero();
  model.params(0) = 1.0;  // weight on the first input
  MatX x = MatX::Zero(1, 3);
  x(0, 0) = 1.0;
  CHECK(forward(model, x)(0, 0) ==
        doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("multi-label forward is per-class sigmoid in (0,1)") {
  ScorerModel model = make_scorer(Arch::kMlp, 6, 3, {4}, 7);
  CounterRng rng(2, Stream::kDataGen);
  MatX x(5, 6);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = 10.0 * rng.normal();
  const MatX p = forward(model, x);
  REQUIRE(p.rows() == 5);
  REQUIRE(p.cols() == 3);
  CHECK((p.array() > 0.0).all());
  CHECK((p.array() < 1.0).all());
}

TEST_CASE("forward rejects width mismatch") {
  ScorerModel model = make_scorer(Arch::kMlp, 4, 1, {3}, 1);
  CHECK_THROWS_AS(forward(model, MatX::Zero(1, 5)), std::invalid_argument);
}

TEST_CASE("loss basics") {
  ScorerModel model = make_scorer(Arch::kLinear, 2, 1, {}, 3);
  MatX x(2, 2), y(2, 1), w(2, 1);
  x << 5, 0, -5, 0;
  y << 1, 0;
  w << 1, 1;
  model.params << 4.0, 0.0, 0.0;  // strong weight drives scores to 0/1

  SUBCASE("near-perfect predictions give near-zero loss") {
    const LossGrad lg = loss_and_grad(model, x, y, w);
    CHECK(lg.loss < 1e-6);
  }
  SUBCASE("zero weights zero out loss and gradient") {
    w.setZero();
    const LossGrad lg = loss_and_grad(model, x, y, w);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grad.norm() == 0.0);
  }
  SUBCASE("weights outside [0,1] are rejected") {
    w(0, 0) = 1.5;
    CHECK_THROWS_AS(loss_and_grad(model, x, y, w), std::invalid_argument);
  }
  SUBCASE("empty batch is rejected") {
    CHECK_THROWS_AS(
        loss_and_grad(model, MatX(0, 2), MatX(0, 1), MatX(0, 1)),
        std::invalid_argument);
  }
}

TEST_CASE("analytic gradients match central differences (mlp)") {
  check_gradient(Arch::kMlp, 101);
}

TEST_CASE("analytic gradients match central differences (linear)") {
  check_gradient(Arch::kLinear, 102);
}

TEST_CASE("adam") {
  ScorerModel model = make_scorer(Arch::kLinear, 3, 1, {}, 5);
  const VecX before = model.params;
  OptimizerState opt = make_optimizer(model);

  SUBCASE("zero gradient leaves parameters unchanged") {
    adam_step(model, opt, VecX::Zero(model.params.size()), 0.1);
    CHECK(model.params == before);
  }
  SUBCASE("first step is roughly -lr * sign(gradient)") {
    VecX g(model.params.size());
    g << 3.0, -0.5, 0.0004, -2.0;
    adam_step(model, opt, g, 0.01);
    const VecX delta = model.params - before;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      // bias-corrected first step: -lr * g / (|g| + eps')
      const double expected = -0.01 * (g(i) > 0 ? 1.0 : (g(i) < 0 ? -1.0 : 0.0));
      CHECK(delta(i) == doctest::Approx(expected).epsilon(1e-3));
    }
  }
  SUBCASE("identical calls from identical state produce identical results") {
    ScorerModel m2 = make_scorer(Arch::kLinear, 3, 1, {}, 5);
    OptimizerState o2 = make_optimizer(m2);
    VecX g(model.params.size());
    g << 1.0, -1.0, 0.5, 0.25;
    for (int i = 0; i < 5; ++i) {
      adam_step(model, opt, g, 0.01);
      adam_step(m2, o2, g, 0.01);
    }
    CHECK(model.params == m2.params);
  }
  SUBCASE("non-finite gradients are rejected") {
    VecX g = VecX::Zero(model.params.size());
    g(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(model, opt, g, 0.01), std::invalid_argument);
  }
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 50, 0.001) == doctest::Approx(0.001));
  CHECK(cosine_lr(25, 50, 0.001) == doctest::Approx(0.0005));
  // direct evaluation: 0.001 * 0.5 * (1 + cos(49 pi / 50))
  const double expected = 0.001 * 0.5 * (1.0 + std::cos(M_PI * 49.0 / 50.0));
  CHECK(cosine_lr(49, 50, 0.001) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(9.87e-7).epsilon(0.01));
  CHECK_THROWS_AS(cosine_lr(0, 0, 0.001), std::invalid_argument);
  CHECK_THROWS_AS(cosine_lr(50, 50, 0.001), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ScorerModel model = make_scorer(Arch::kMlp, 7, 2, {5, 3}, 9);
  CounterRng rng(4, Stream::kDataGen);
  for (Eigen::Index i = 0; i < model.params.size(); ++i)
    model.params(i) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));

  testutil::TempDir dir("ckpt");
  const std::string path = (dir.path() / "model.json").string();
  save_checkpoint(model, path);
  const ScorerModel loaded = load_checkpoint(path);
  CHECK(loaded.arch == model.arch);
  CHECK(loaded.input_dim == model.input_dim);
  CHECK(loaded.num_classes == model.num_classes);
  CHECK(loaded.hidden == model.hidden);
  REQUIRE(loaded.params.size() == model.params.size());
  for (Eigen::Index i = 0; i < model.params.size(); ++i)
    CHECK(std::memcmp(&loaded.params(i), &model.params(i), sizeof(double)) == 0);
}

TEST_CASE("parameter counts agree with layer shapes") {
  CHECK(param_count(Arch::kLinear, 10, 1, {}) == 11);
  CHECK(param_count(Arch::kMlp, 10, 1, {64}) == 10 * 64 + 64 + 64 + 1);
  CHECK(param_count(Arch::kMlp, 4, 3, {5, 6}) ==
        (4 * 5 + 5) + (5 * 6 + 6) + (6 * 3 + 3));
  ScorerModel m = make_scorer(Arch::kMlp, 4, 3, {5, 6}, 1);
  CHECK(m.params.size() == param_count(Arch::kMlp, 4, 3, {5, 6}));
}

}  // TEST_SUITE
