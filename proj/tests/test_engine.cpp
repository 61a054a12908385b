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
// The pure selection math against its spec'd worked examples and independent
// brute-force implementations.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imil/engine.hpp"
#include "imil/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace imil;

TEST_SUITE("engine") {

TEST_CASE("ema worked examples") {
  CHECK(ema_update(0.6, 0.8, 0.5) == doctest::Approx(0.7));
  CHECK(ema_update(0.6, 0.8, 0.0) == 0.8);       // no memory
  CHECK(ema_update(0.37, 0.37, 0.9) == doctest::Approx(0.37));  // fixed point
}

TEST_CASE("ema contraction toward a constant score") {
  const double target = 0.42, m = 0.7;
  double s = 0.95;
  const double initial_gap = std::abs(s - target);
  for (int t = 1; t <= 30; ++t) {
    s = ema_update(s, target, m);
    CHECK(std::abs(s - target) <= std::pow(m, t) * initial_gap + 1e-15);
  }
}

TEST_CASE("energy worked examples") {
  Dataset ds = testutil::make_dataset({3}, {1});
  MatX ema(3, 1);
  ema << 0.8, 0.2, 0.5;
  const MatX e = compute_energy(ema, ds);
  CHECK(e(0, 0) == doctest::Approx(1.6));
  CHECK(e(1, 0) == doctest::Approx(0.4));
  CHECK(e(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("equal scores in a bag all get energy one") {
  Dataset ds = testutil::make_dataset({5}, {1});
  const MatX e = compute_energy(MatX::Constant(5, 1, 0.37), ds);
  for (int i = 0; i < 5; ++i) CHECK(e(i, 0) == doctest::Approx(1.0));
}

TEST_CASE("energy is scale-free per bag: the deconfounding identity") {
  // two bags whose scores differ by a factor of ten produce identical
  // energy patterns
  Dataset ds = testutil::make_dataset({2, 2}, {1, 1});
  MatX ema(4, 1);
  ema << 0.9, 0.1, 0.09, 0.01;
  const MatX e = compute_energy(ema, ds);
  CHECK(e(0, 0) == doctest::Approx(1.8));
  CHECK(e(1, 0) == doctest::Approx(0.2));
  CHECK(e(2, 0) == doctest::Approx(1.8));
  CHECK(e(3, 0) == doctest::Approx(0.2));
}

TEST_CASE("per-bag mean energy is one whenever the guard is inactive") {
  CounterRng rng(201, Stream::kDataGen);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset ds = testutil::random_dataset(rng, 8, 6);
    const MatX ema = testutil::random_scores(rng, ds.instance_count(), 1);
    const MatX e = compute_energy(ema, ds);
    for (const Bag& bag : ds.bags) {
      double mean = 0.0;
      for (int id : bag.instance_ids) mean += e(id, 0);
      mean /= bag.size();
      CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("all-zero bag hits the guard instead of dividing by zero") {
  Dataset ds = testutil::make_dataset({3}, {0});
  const MatX e = compute_energy(MatX::Zero(3, 1), ds);
  CHECK(std::isfinite(e(0, 0)));
  CHECK(e(0, 0) == 0.0);
}

TEST_CASE("curriculum ratio worked examples") {
  CHECK(curriculum_ratio(3, 0.05, 0.0) == doctest::Approx(0.85));
  CHECK(curriculum_ratio(0, 0.05, 0.0) == 1.0);
  CHECK(curriculum_ratio(100, 0.05, 0.2) == doctest::Approx(0.2));
  CHECK_THROWS_AS(curriculum_ratio(-1, 0.05, 0.0), std::invalid_argument);
}

TEST_CASE("ratio sequence is non-increasing and bounded") {
  double prev = 1.0;
  for (int t = 0; t <= 60; ++t) {
    const double r = curriculum_ratio(t, 0.05, 0.2);
    CHECK(r <= prev);
    CHECK(r >= 0.2);
    CHECK(r <= 1.0);
    prev = r;
  }
}

TEST_CASE("selection worked examples") {
  VecX e(4);
  e << 1.6, 0.4, 1.0, 0.9;
  const std::vector<int> pool{0, 1, 2, 3};

  SUBCASE("R=0.5 keeps the top half; epsilon is the selection floor") {
    const Selection s = select_instances(e, 0.5, pool);
    CHECK(s.selected == std::vector<int>{0, 2});
    CHECK(s.epsilon == doctest::Approx(1.0));
  }
  SUBCASE("R=1 keeps everything; epsilon is the global min") {
    const Selection s = select_instances(e, 1.0, pool);
    CHECK(s.selected == pool);
    CHECK(s.epsilon == doctest::Approx(0.4));
    for (int id : s.selected) CHECK(e(id) - s.epsilon >= 0.0);  // TE >= 0
  }
  SUBCASE("ties break toward smaller ids") {
    VecX tie = VecX::Constant(4, 0.7);
    const Selection s = select_instances(tie, 0.5, pool);
    CHECK(s.selected == std::vector<int>{0, 1});
  }
  SUBCASE("empty selection is an error") {
    CHECK_THROWS_WITH_AS(select_instances(e, 0.1, pool),
                         "select_instances: empty selection",
                         std::runtime_error);
  }
}

TEST_CASE("selection matches the extraction oracle on random inputs") {
  CounterRng rng(202, Stream::kDataGen);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(40));
    VecX e(n);
    for (int i = 0; i < n; ++i)
      e(i) = std::floor(rng.uniform(0.0, 4.0) * 4.0) / 4.0;  // with ties
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    const double r = rng.uniform(1.0 / n + 1e-9, 1.0);
    const Selection got = select_instances(e, r, pool);
    const oracles::SelectResult want = oracles::select(e, r, pool);
    CHECK(got.selected == want.selected);
    CHECK(got.epsilon == want.epsilon);
  }
}

TEST_CASE("total effect is non-negative exactly on the selected set") {
  CounterRng rng(203, Stream::kDataGen);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(30));
    VecX e(n);
    for (int i = 0; i < n; ++i) e(i) = rng.uniform();  // distinct w.p. 1
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    const Selection s = select_instances(e, 0.5, pool);
    std::vector<bool> in(n, false);
    for (int id : s.selected) in[id] = true;
    for (int i = 0; i < n; ++i)
      CHECK((e(i) - s.epsilon >= 0.0) == in[i]);
  }
}

TEST_CASE("selection is permutation-equivariant") {
  CounterRng rng(204, Stream::kDataGen);
  const int n = 20;
  VecX e(n);
  for (int i = 0; i < n; ++i) e(i) = rng.uniform();
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  const Selection base = select_instances(e, 0.4, pool);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);  // perm[old] = new id
  VecX pe(n);
  for (int i = 0; i < n; ++i) pe(perm[i]) = e(i);
  const Selection mapped = select_instances(pe, 0.4, pool);

  std::vector<int> expected;
  for (int id : base.selected) expected.push_back(perm[id]);
  std::sort(expected.begin(), expected.end());
  CHECK(mapped.selected == expected);
  CHECK(mapped.epsilon == base.epsilon);
}

TEST_CASE("stop check worked examples") {
  VecX e(4);
  e << 1.2, 1.1, 0.9, 0.8;
  const std::vector<int> selected{0, 1, 2, 3};
  // tau * k_pool = 2 -> mean of the two smallest selected energies
  CHECK(stop_check(e, selected, 0.5, 4, 0.95) == false);  // 0.85 < 0.95
  CHECK(stop_check(e, selected, 0.5, 4, 0.80) == true);
  // n = 1, boundary is inclusive
  VecX one(1);
  one << 0.95;
  CHECK(stop_check(one, {0}, 0.05, 4, 0.95) == true);
}

TEST_CASE("stop check matches the sort oracle on random inputs") {
  CounterRng rng(205, Stream::kDataGen);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(40));
    VecX e(n);
    for (int i = 0; i < n; ++i) e(i) = rng.uniform(0.0, 2.0);
    std::vector<int> selected;
    for (int i = 0; i < n; ++i)
      if (rng.bernoulli(0.6)) selected.push_back(i);
    if (selected.empty()) selected.push_back(0);
    const double tau = rng.uniform(0.01, 0.5);
    const double threshold = rng.uniform(0.5, 1.5);
    CHECK(stop_check(e, selected, tau, n, threshold) ==
          oracles::stop(e, selected, tau, n, threshold));
  }
}

TEST_CASE("bag-offset invariance: scaling one bag changes nothing that matters") {
  CounterRng rng(206, Stream::kDataGen);
  Dataset ds = testutil::make_dataset({5, 4, 6, 5}, {1, 1, 1, 0});
  const int k = ds.instance_count();
  const MatX ema = testutil::random_scores(rng, k, 1);
  const MatX base_energy = compute_energy(ema, ds);

  std::vector<int> pool;
  for (int b = 0; b < 3; ++b)
    pool.insert(pool.end(), ds.bags[b].instance_ids.begin(),
                ds.bags[b].instance_ids.end());
  const Selection base_sel = select_instances(base_energy.col(0), 0.5, pool);

  for (const double c : {0.1, 10.0, 0.5, 2.0}) {
    MatX scaled = ema;
    for (int id : ds.bags[1].instance_ids) scaled(id, 0) *= c;
    const MatX e2 = compute_energy(scaled, ds);
    CHECK((e2 - base_energy).cwiseAbs().maxCoeff() < 1e-12);
    const Selection s2 = select_instances(e2.col(0), 0.5, pool);
    CHECK(s2.selected == base_sel.selected);
    CHECK(s2.epsilon == doctest::Approx(base_sel.epsilon).epsilon(1e-12));
    if (c == 0.5 || c == 2.0) {
      // powers of two scale without rounding: bitwise identical
      CHECK(e2 == base_energy);
      CHECK(s2.epsilon == base_sel.epsilon);
    }
  }
}

TEST_CASE("epsilon is non-decreasing in t on a frozen energy table") {
  CounterRng rng(207, Stream::kDataGen);
  const int n = 50;
  VecX e(n);
  for (int i = 0; i < n; ++i) e(i) = rng.uniform();
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);

  double prev_eps = -1.0;
  for (int t = 0; t <= 15; ++t) {
    const double r = curriculum_ratio(t, 0.05, 0.2);
    const Selection s = select_instances(e, r, pool);
    CHECK(s.epsilon >= prev_eps);
    prev_eps = s.epsilon;
  }
}

}  // TEST_SUITE
