#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairhp/fairness.hpp"
#include "helpers.hpp"

using namespace fairhp;
using fairhp::testing::ivec;

TEST_CASE("perfect classifier has unit tpr and zero fpr in both groups") {
  const auto labels = ivec({1, 0, 1, 0, 1, 0});
  const auto groups = ivec({0, 0, 0, 1, 1, 1});
  const auto r = group_rates_from_predictions(labels, labels, groups);
  CHECK(r.tpr0 == 1.0);
  CHECK(r.tpr1 == 1.0);
  CHECK(r.fpr0 == 0.0);
  CHECK(r.fpr1 == 0.0);
  CHECK(eod(r) == 0.0);
  CHECK(aod(r) == 0.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("hand confusion matrix: two positives hit, one of two negatives false") {
  // group 0: positives predicted {1,1}, negatives predicted {1,0}
  const auto pred = ivec({1, 1, 1, 0, /*group 1*/ 1, 0});
  const auto labels = ivec({1, 1, 0, 0, /*group 1*/ 1, 0});
  const auto groups = ivec({0, 0, 0, 0, 1, 1});
  const auto r = group_rates_from_predictions(pred, labels, groups);
  CHECK(r.tpr0 == 1.0);
  CHECK(r.fpr0 == 0.5);
  CHECK(r.pos0 == 2);
  CHECK(r.neg0 == 2);
}

TEST_CASE("constant-1 predictor saturates both rates") {
  const auto labels = ivec({1, 0, 1, 0});
  const auto groups = ivec({0, 0, 1, 1});
  const auto pred = ivec({1, 1, 1, 1});
  const auto r = group_rates_from_predictions(pred, labels, groups);
  CHECK(r.tpr0 == 1.0);
  CHECK(r.fpr0 == 1.0);
  CHECK(r.tpr1 == 1.0);
  CHECK(r.fpr1 == 1.0);
}

TEST_CASE("eod formula") {
  GroupRates r;
  r.tpr0 = 1.0;
  r.tpr1 = 0.5;
  CHECK(eod(r) == 0.5);
  r.tpr1 = 1.0;
  CHECK(eod(r) == 0.0);
  r.tpr0 = 0.0;
  CHECK(eod(r) == 1.0);
}

TEST_CASE("aod formula") {
  GroupRates r;
  r.tpr0 = 0.5;
  r.tpr1 = 0.0;
  r.fpr0 = 0.5;
  r.fpr1 = 0.0;
  CHECK(aod(r) == 0.5);

  r.tpr1 = 0.5;
  r.fpr1 = 0.5;
  CHECK(aod(r) == 0.0);

  r = GroupRates{};
  r.tpr0 = 1.0;
  CHECK(aod(r) == 0.5);
}

TEST_CASE("accuracy examples") {
  const auto labels = ivec({1, 0, 1, 0});
  CHECK(accuracy_from_predictions(labels, labels) == 1.0);
  CHECK(accuracy_from_predictions(ivec({0, 1, 0, 1}), labels) == 0.0);
  CHECK(accuracy_from_predictions(ivec({1, 0, 1, 1}), labels) == 0.75);
}

TEST_CASE("bounds and algebraic relations over random rates") {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 8 + static_cast<int>(rng.uniform_int(40));
    Eigen::VectorXi pred(n), labels(n), groups(n);
    // force both groups and both labels per group to avoid degeneracy
    for (int i = 0; i < n; ++i) {
      groups[i] = i % 2;
      labels[i] = (i / 2) % 2;
      pred[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const auto r = group_rates_from_predictions(pred, labels, groups);
    const double e = eod(r), a = aod(r);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(a >= e / 2.0 - 1e-15);
    CHECK(a <= (e + 1.0) / 2.0 + 1e-15);

    // relabeling the groups leaves both metrics unchanged
    Eigen::VectorXi swapped = groups;
    for (int i = 0; i < n; ++i) swapped[i] = 1 - swapped[i];
    const auto rs = group_rates_from_predictions(pred, labels, swapped);
    CHECK(eod(rs) == doctest::Approx(e).epsilon(1e-15));
    CHECK(aod(rs) == doctest::Approx(a).epsilon(1e-15));
  }
}

TEST_CASE("degenerate group rates are zeroed and flagged") {
  // group 1 has no positives
  const auto labels = ivec({1, 0, 0, 0});
  const auto groups = ivec({0, 0, 1, 1});
  const auto pred = ivec({1, 0, 1, 0});
  const auto r = group_rates_from_predictions(pred, labels, groups);
  CHECK(r.tpr1 == 0.0);
  CHECK(r.degenerate);
}

TEST_CASE("absent group is an error") {
  const auto labels = ivec({1, 0});
  const auto groups = ivec({0, 0});
  CHECK_THROWS_AS(group_rates_from_predictions(labels, labels, groups), ArgumentError);
}

TEST_CASE("group denominators reproduce the displayed form") {
  // group 0: 4 rows, 2 positives both predicted 1 -> TP/n = 0.5
  const auto pred = ivec({1, 1, 0, 0, 1, 0});
  const auto labels = ivec({1, 1, 0, 0, 1, 0});
  const auto groups = ivec({0, 0, 0, 0, 1, 1});
  const auto r = group_rates_from_predictions(pred, labels, groups, RatesDenominator::Group);
  CHECK(r.tpr0 == 0.5);  // 2 true positives over group size 4
  CHECK(r.fpr0 == 0.0);
  CHECK(r.tpr1 == 0.5);
}

TEST_CASE("model-based rates agree with prediction-based rates") {
  const auto ds = fairhp::testing::small_classifier_dataset(120, 5);
  const auto space = hp_space(Algorithm::DecisionTree);
  const auto model = train(Algorithm::DecisionTree, default_config(space), ds, 3);
  const auto direct = group_rates(model, ds);
  const auto via_pred = group_rates_from_predictions(predict(model, ds.rows), ds.labels, ds.groups);
  CHECK(direct.tpr0 == via_pred.tpr0);
  CHECK(direct.fpr1 == via_pred.fpr1);
  CHECK(accuracy(model, ds) ==
        accuracy_from_predictions(predict(model, ds.rows), ds.labels));
}
