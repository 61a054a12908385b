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
#include <set>

#include "imil/metrics.hpp"
#include "imil/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace imil;

TEST_SUITE("metrics") {

TEST_CASE("auc basics") {
  VecX s(4);
  VecXi y(4);
  SUBCASE("perfect separation") {
    s << 0.9, 0.8, 0.2, 0.1;
    y << 1, 1, 0, 0;
    CHECK(roc_auc(s, y) == doctest::Approx(1.0));
  }
  SUBCASE("constant scores give 0.5") {
    s << 0.4, 0.4, 0.4, 0.4;
    y << 1, 0, 1, 0;
    CHECK(roc_auc(s, y) == doctest::Approx(0.5));
  }
  SUBCASE("worked example") {
    s << 0.9, 0.8, 0.3, 0.2;
    y << 1, 0, 1, 0;
    // pairwise oracle over all pos/neg pairs gives 3/4
    CHECK(oracles::auc(s, y) == doctest::Approx(0.75));
    CHECK(roc_auc(s, y) == doctest::Approx(0.75));
  }
  SUBCASE("single class throws") {
    s << 0.1, 0.2, 0.3, 0.4;
    y << 1, 1, 1, 1;
    CHECK_THROWS_AS(roc_auc(s, y), std::invalid_argument);
  }
}

TEST_CASE("auc agrees with the pairwise oracle on random inputs") {
  CounterRng rng(77, Stream::kDataGen);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(199));
    VecX s(n);
    VecXi y(n);
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      // coarse grid so ties actually happen
      s(i) = std::floor(rng.uniform() * 8.0) / 8.0;
      y(i) = static_cast<int>(rng.uniform_int(2));
      (y(i) != 0 ? pos : neg) = true;
    }
    if (!pos) y(0) = 1;
    if (!neg) y(n - 1) = 0;
    CHECK(std::abs(roc_auc(s, y) - oracles::auc(s, y)) < 1e-12);
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  CounterRng rng(78, Stream::kDataGen);
  VecX s(50);
  VecXi y(50);
  for (int i = 0; i < 50; ++i) {
    s(i) = rng.uniform();
    y(i) = i % 3 == 0 ? 1 : 0;
  }
  const double base = roc_auc(s, y);
  VecX t1 = s.unaryExpr([](double v) { return 3.0 * v + 7.0; });
  VecX t2 = s.unaryExpr([](double v) { return std::exp(v); });
  VecX t3 = s.unaryExpr([](double v) { return std::atan(v - 0.5); });
  CHECK(roc_auc(t1, y) == doctest::Approx(base).epsilon(1e-14));
  CHECK(roc_auc(t2, y) == doctest::Approx(base).epsilon(1e-14));
  CHECK(roc_auc(t3, y) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("threshold metrics") {
  VecX s(4);
  VecXi y(4);
  SUBCASE("all correct") {
    s << 0.9, 0.8, 0.2, 0.1;
    y << 1, 1, 0, 0;
    const MetricsRecord m = threshold_metrics(s, y);
    CHECK(m.acc == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.support_pos == 2);
    CHECK(m.support_neg == 2);
  }
  SUBCASE("no positive predictions gives zero precision/recall/f1") {
    s << 0.1, 0.2, 0.3, 0.4;
    y << 1, 1, 0, 0;
    const MetricsRecord m = threshold_metrics(s, y);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
  }
  SUBCASE("hand confusion matrix") {
    s << 0.9, 0.4, 0.6, 0.1;
    y << 1, 1, 0, 0;
    const MetricsRecord m = threshold_metrics(s, y);
    CHECK(m.acc == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(0.5));
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.5));
  }
  SUBCASE("prediction uses score >= threshold") {
    s << 0.5, 0.499, 0.5, 0.1;
    y << 1, 1, 0, 0;
    const MetricsRecord m = threshold_metrics(s, y, 0.5);
    CHECK(m.recall == doctest::Approx(0.5));   // only the 0.5 positive counts
    CHECK(m.precision == doctest::Approx(0.5));
  }
}

TEST_CASE("f1 consistency property") {
  CounterRng rng(79, Stream::kDataGen);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + static_cast<int>(rng.uniform_int(50));
    VecX s(n);
    VecXi y(n);
    for (int i = 0; i < n; ++i) {
      s(i) = rng.uniform();
      y(i) = static_cast<int>(rng.uniform_int(2));
    }
    const MetricsRecord m = threshold_metrics(s, y);
    if (m.precision + m.recall > 0.0)
      CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall /
                                    (m.precision + m.recall)));
    else
      CHECK(m.f1 == 0.0);
  }
}

TEST_CASE("bag pooling") {
  VecX two(2);
  two << 0.9, 0.1;
  CHECK(bag_pool(two, BagPoolMode::kMax) == doctest::Approx(0.9));
  CHECK(bag_pool(two, BagPoolMode::kMean) == doctest::Approx(0.5));
  VecX three(3);
  three << 0.9, 0.6, 0.1;
  CHECK(bag_pool(three, BagPoolMode::kVoting) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(bag_pool(VecX(0), BagPoolMode::kMax), std::invalid_argument);
}

TEST_CASE("max pool dominates mean pool for non-negative scores") {
  CounterRng rng(80, Stream::kDataGen);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(20));
    VecX s(n);
    for (int i = 0; i < n; ++i) s(i) = rng.uniform();
    CHECK(bag_pool(s, BagPoolMode::kMax) >= bag_pool(s, BagPoolMode::kMean));
    CHECK(bag_pool(s, BagPoolMode::kMean) >= 0.0);
  }
}

TEST_CASE("average precision on a small ranked list") {
  VecX s(5);
  VecXi y(5);
  s << 0.9, 0.8, 0.7, 0.6, 0.5;
  y << 1, 0, 1, 0, 0;
  // hits at ranks 1 and 3: (1/1 + 2/3) / 2
  CHECK(average_precision(s, y) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("stratified k-fold splits") {
  Dataset ds = testutil::make_dataset(
      std::vector<int>(20, 2),
      {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const auto folds = kfold_split(ds, 5, 123);
  REQUIRE(folds.size() == 5);

  std::set<int> seen;
  for (const auto& fold : folds) {
    int pos = 0, neg = 0;
    for (int b : fold.test_bags) {
      (ds.bags[b].label(0) != 0 ? pos : neg) += 1;
      CHECK(!seen.count(b));
      seen.insert(b);
    }
    CHECK(pos == 2);
    CHECK(neg == 2);
    CHECK(fold.train_bags.size() == 16);
  }
  CHECK(seen.size() == 20);  // exact partition

  const auto again = kfold_split(ds, 5, 123);
  for (int f = 0; f < 5; ++f) CHECK(again[f].test_bags == folds[f].test_bags);
  const auto other = kfold_split(ds, 5, 124);
  bool all_same = true;
  for (int f = 0; f < 5; ++f)
    all_same = all_same && other[f].test_bags == folds[f].test_bags;
  CHECK(!all_same);
}

TEST_CASE("k-fold refuses too few bags per class") {
  Dataset ds = testutil::make_dataset({2, 2, 2, 2, 2, 2}, {1, 1, 1, 0, 0, 0});
  CHECK_THROWS_AS(kfold_split(ds, 5, 1), std::invalid_argument);
}

TEST_CASE("confounding diagnostic") {
  // 20 positive bags and 5 negative bags, 10 instances each, 3 positives per
  // positive bag
  std::vector<int> sizes(25, 10), labels(25, 1);
  for (int b = 20; b < 25; ++b) labels[b] = 0;
  Dataset ds = testutil::make_dataset(sizes, labels);
  HiddenLabels hidden;
  hidden.labels = MatXi::Zero(250, 1);
  for (int b = 0; b < 20; ++b)
    for (int j = 0; j < 3; ++j) hidden.labels(b * 10 + j, 0) = 1;

  SUBCASE("exact scorer separates the groups") {
    VecX scores(250);
    for (int i = 0; i < 250; ++i) scores(i) = hidden.labels(i, 0);
    const ConfoundingDiagnostic d = confounding_diagnostic(scores, ds, hidden);
    CHECK(d.pos_bag_positive.mean == doctest::Approx(1.0));
    CHECK(d.pos_bag_negative.mean == doctest::Approx(0.0));
    CHECK(d.pos_bag_all.mean == doctest::Approx(0.3));
    CHECK(d.neg_bag_all.mean == doctest::Approx(0.0));
  }
  SUBCASE("constant scorer collapses") {
    VecX scores = VecX::Constant(250, 0.42);
    const ConfoundingDiagnostic d = confounding_diagnostic(scores, ds, hidden);
    CHECK(d.pos_bag_positive.mean == doctest::Approx(0.42));
    CHECK(d.pos_bag_negative.mean == doctest::Approx(0.42));
    CHECK(d.neg_bag_all.mean == doctest::Approx(0.42));
    CHECK(d.mean_within_bag_std == doctest::Approx(0.0));
  }
  SUBCASE("group means recover generating distributions") {
    CounterRng rng(81, Stream::kDataGen);
    const double mu_pos = 0.8, mu_neg = 0.3, sigma = 0.05;
    VecX scores(250);
    for (int i = 0; i < 250; ++i)
      scores(i) =
          (hidden.labels(i, 0) != 0 ? mu_pos : mu_neg) + sigma * rng.normal();
    const ConfoundingDiagnostic d = confounding_diagnostic(scores, ds, hidden);
    // bag-level unit of analysis: se of the P group mean over 20 bags of 3
    const double se_p = sigma / std::sqrt(3.0) / std::sqrt(20.0);
    const double se_n = sigma / std::sqrt(7.0) / std::sqrt(20.0);
    CHECK(std::abs(d.pos_bag_positive.mean - mu_pos) < 2 * se_p + 1e-9);
    CHECK(std::abs(d.pos_bag_negative.mean - mu_neg) < 2 * se_n + 1e-9);
    CHECK(d.pos_bag_positive.ci_low < d.pos_bag_positive.mean);
    CHECK(d.pos_bag_positive.ci_high > d.pos_bag_positive.mean);
  }
  SUBCASE("no positive bags throws") {
    Dataset neg_only = testutil::make_dataset({4, 4}, {0, 0});
    HiddenLabels h;
    h.labels = MatXi::Zero(8, 1);
    CHECK_THROWS_AS(
        confounding_diagnostic(VecX::Zero(8), neg_only, h),
        std::invalid_argument);
  }
}

}  // TEST_SUITE
