#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "fairhp/hp_space.hpp"

using namespace fairhp;

namespace {

bool has_dim(const HPSpace& s, const std::string& name) { return s.index_of(name) >= 0; }

}  // namespace

TEST_CASE("decision tree space carries the documented dimensions") {
  const auto s = hp_space("decision_tree");
  for (const char* name : {"max_depth", "min_samples_split", "min_samples_leaf",
                           "min_weight_fraction_leaf", "criterion", "splitter", "max_features"})
    CHECK(has_dim(s, name));
  CHECK(s.dims.size() == 7);
}

TEST_CASE("logistic regression space carries the documented dimensions") {
  const auto s = hp_space("logistic_regression");
  for (const char* name : {"tol", "C", "intercept_scaling", "max_iteration", "l1_ratio", "solver",
                           "penalty", "dual_prime", "fit_intercept", "multi_class"})
    CHECK(has_dim(s, name));
}

TEST_CASE("svm space carries the documented dimensions") {
  const auto s = hp_space("svm");
  for (const char* name :
       {"tol", "C", "intercept_scaling", "penalty", "loss", "degree", "fit_intercept",
        "class_weight"})
    CHECK(has_dim(s, name));
}

TEST_CASE("random forest space carries the documented dimensions") {
  const auto s = hp_space("random_forest");
  for (const char* name :
       {"max_depth", "min_samples_split", "min_samples_leaf", "min_weight_fraction_leaf",
        "n_estimators", "max_samples", "criterion", "max_features", "oob_score", "warm_start"})
    CHECK(has_dim(s, name));
}

TEST_CASE("discriminant analysis space carries the documented dimensions") {
  const auto s = hp_space("discriminant_analysis");
  for (const char* name : {"tol", "reg_param", "linear(0)_quadratic(1)", "solve_Linear",
                           "Shrinkage_Linear", "component", "store_covariance", "type_dataset"})
    CHECK(has_dim(s, name));
}

TEST_CASE("unknown algorithm is rejected") {
  CHECK_THROWS_AS(hp_space("knn"), ArgumentError);
}

TEST_CASE("all spaces validate and have unique dimension names") {
  for (auto a : all_algorithms()) CHECK_NOTHROW(hp_space(a).validate());
}

TEST_CASE("documented defaults") {
  const auto dt = hp_space(Algorithm::DecisionTree);
  const auto dt_default = default_config(dt);
  CHECK(dt.level(dt_default, "criterion") == "gini");
  CHECK(dt.level(dt_default, "splitter") == "best");
  CHECK(dt.numeric(dt_default, "max_depth") == 64.0);  // the unlimited-equivalent cap

  const auto lr = hp_space(Algorithm::LogisticRegression);
  const auto lr_default = default_config(lr);
  CHECK(lr.numeric(lr_default, "C") == 1.0);
  CHECK(lr.level(lr_default, "penalty") == "l2");

  for (auto a : all_algorithms()) {
    const auto space = hp_space(a);
    CHECK_NOTHROW(space.validate_config(default_config(space)));
  }
}

TEST_CASE("uniform samples always validate") {
  Rng rng(77);
  for (auto a : all_algorithms()) {
    const auto space = hp_space(a);
    for (int i = 0; i < 1000; ++i) CHECK_NOTHROW(space.validate_config(sample_config(space, rng)));
  }
}

TEST_CASE("config validation rejects out-of-range and ill-typed values") {
  const auto space = hp_space(Algorithm::DecisionTree);
  HPConfig c = default_config(space);
  c.values[static_cast<size_t>(space.index_of("max_depth"))] = 1000.0;
  CHECK_THROWS_AS(space.validate_config(c), ArgumentError);

  c = default_config(space);
  c.values[static_cast<size_t>(space.index_of("max_depth"))] = 3.5;  // integer dim
  CHECK_THROWS_AS(space.validate_config(c), ArgumentError);

  c = default_config(space);
  c.values[static_cast<size_t>(space.index_of("criterion"))] = 99;
  CHECK_THROWS_AS(space.validate_config(c), ArgumentError);

  c = default_config(space);
  c.values.pop_back();
  CHECK_THROWS_AS(space.validate_config(c), ArgumentError);
}

TEST_CASE("config json round trip keyed by dimension name") {
  Rng rng(3);
  for (auto a : all_algorithms()) {
    const auto space = hp_space(a);
    for (int i = 0; i < 50; ++i) {
      const auto c = sample_config(space, rng);
      const auto j = config_to_json(space, c);
      const auto back = config_from_json(space, j);
      CHECK(config_to_json(space, back) == j);
    }
  }
}

TEST_CASE("config json rejects unknown and missing dimensions") {
  const auto space = hp_space(Algorithm::Svm);
  auto j = config_to_json(space, default_config(space));
  j["mystery_dim"] = 1.0;
  CHECK_THROWS_AS(config_from_json(space, j), FileFormatError);

  auto j2 = config_to_json(space, default_config(space));
  j2.erase("tol");
  CHECK_THROWS_AS(config_from_json(space, j2), FileFormatError);

  auto j3 = config_to_json(space, default_config(space));
  j3["loss"] = "cubic_hinge";
  CHECK_THROWS_AS(config_from_json(space, j3), FileFormatError);
}

TEST_CASE("space json round trip") {
  for (auto a : all_algorithms()) {
    const auto space = hp_space(a);
    const auto back = HPSpace::from_json(space.to_json());
    CHECK(back.to_json() == space.to_json());
    CHECK(back.version == kHpSpaceVersion);
  }
}
