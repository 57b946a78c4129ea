#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "fairhp/surrogates.hpp"
#include "helpers.hpp"

using namespace fairhp;
using fairhp::testing::dvec;
namespace fs = std::filesystem;

namespace {

// deterministic feature matrix with mild structure
Eigen::MatrixXd random_inputs(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
  return x;
}

Eigen::VectorXd smooth_targets(const Eigen::MatrixXd& x) {
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    y[i] = clamp01(0.5 + 0.3 * std::sin(x(i, 0)) + 0.1 * x(i, 1 % x.cols()));
  return y;
}

}  // namespace

TEST_CASE("encoding passes numerics through, logs log dims, codes categoricals") {
  const auto space = hp_space(Algorithm::LogisticRegression);
  auto config = default_config(space);
  config.values[static_cast<size_t>(space.index_of("l1_ratio"))] = 0.75;
  config.values[static_cast<size_t>(space.index_of("C"))] = 100.0;
  config.values[static_cast<size_t>(space.index_of("penalty"))] = 2;  // elasticnet
  const auto enc = encode(config, space);
  CHECK(enc[space.index_of("l1_ratio")] == 0.75);
  CHECK(enc[space.index_of("C")] == doctest::Approx(4.60517).epsilon(1e-5));
  CHECK(enc[space.index_of("penalty")] == 2.0);
}

TEST_CASE("baseline stores the mean and predicts it everywhere") {
  Eigen::MatrixXd x = random_inputs(2, 3, 1);
  const auto s = fit_surrogate(SurrogateKind::Baseline, x, dvec({0.2, 0.4}), "t:1", 0);
  CHECK(std::get<BaselineModel>(s.model).mean == doctest::Approx(0.3));
  const auto pred = s.predict(random_inputs(5, 3, 2));
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(pred[i] == doctest::Approx(0.3));
}

TEST_CASE("baseline beats every other constant on its training mse") {
  Eigen::MatrixXd x = random_inputs(40, 3, 3);
  Eigen::VectorXd y = smooth_targets(x);
  const auto s = fit_surrogate(SurrogateKind::Baseline, x, y, "t:1", 0);
  const double mean = std::get<BaselineModel>(s.model).mean;
  const double base_mse = (y.array() - mean).square().mean();
  for (double c = 0.0; c <= 1.0; c += 0.001) {
    const double mse = (y.array() - c).square().mean();
    CHECK(base_mse <= mse + 1e-15);
  }
}

TEST_CASE("single unbootstrapped tree memorizes distinct points") {
  Eigen::MatrixXd x = random_inputs(10, 2, 7);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions opts;
  opts.forest_trees = 1;
  opts.forest_bootstrap = false;
  opts.forest_max_depth = 64;
  const auto s = fit_surrogate(SurrogateKind::Forest, x, y, "t:1", 0, opts);
  const auto pred = s.predict_raw(x);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(pred[i] == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("forest prediction is exactly the mean of its trees") {
  Eigen::MatrixXd x = random_inputs(60, 4, 9);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions opts;
  opts.forest_trees = 11;
  const auto s = fit_surrogate(SurrogateKind::Forest, x, y, "t:1", 5, opts);
  const auto& forest = std::get<ForestModel>(s.model);
  const auto probe = random_inputs(20, 4, 10);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(20);
  for (const auto& tree : forest.trees) acc += tree.predict(probe);
  acc /= static_cast<double>(forest.trees.size());
  const auto pred = s.predict_raw(probe);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(pred[i] == acc[i]);
}

TEST_CASE("one boosting round at unit shrinkage equals a single residual tree") {
  Eigen::MatrixXd x = random_inputs(20, 3, 21);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions opts;
  opts.gbt_rounds = 1;
  opts.gbt_learning_rate = 1.0;
  opts.gbt_max_depth = 32;
  const auto s = fit_surrogate(SurrogateKind::Gbt, x, y, "t:1", 0, opts);

  // independent route: the mean plus one regression tree on the residuals
  const double mean = y.mean();
  const RegressionTree oracle = fit_regression_tree(x, y.array() - mean, 32);
  const Eigen::VectorXd expected = oracle.predict(x).array() + mean;
  const Eigen::VectorXd got = s.predict_raw(x);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    CHECK(std::abs(got[i] - expected[i]) <= 1e-9);
}

TEST_CASE("boosting training error is non-increasing per round") {
  Eigen::MatrixXd x = random_inputs(80, 4, 31);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions opts;
  opts.gbt_rounds = 60;
  const auto s = fit_surrogate(SurrogateKind::Gbt, x, y, "t:1", 0, opts);
  const auto& mse = std::get<GbtModel>(s.model).train_mse_per_round;
  REQUIRE(mse.size() == 60);
  for (size_t r = 1; r < mse.size(); ++r) CHECK(mse[r] <= mse[r - 1] + 1e-12);
}

TEST_CASE("mlp analytic gradients match central finite differences") {
  Rng rng(12);
  MlpModel m = MlpModel::initialize(3, 2, 8, rng);
  const Eigen::MatrixXd x = random_inputs(5, 3, 13);
  const Eigen::VectorXd y = smooth_targets(x);

  const Eigen::VectorXd analytic = m.mse_gradient(x, y);
  Eigen::VectorXd theta = m.flat_parameters();
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < theta.size(); ++p) {
    Eigen::VectorXd up = theta, down = theta;
    up[p] += h;
    down[p] -= h;
    m.set_flat_parameters(up);
    const double lu = m.mse(x, y);
    m.set_flat_parameters(down);
    const double ld = m.mse(x, y);
    m.set_flat_parameters(theta);
    const double fd = (lu - ld) / (2.0 * h);
    const double rel = std::abs(fd - analytic[p]) /
                       std::max({1e-8, std::abs(fd), std::abs(analytic[p])});
    worst = std::max(worst, rel);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("mlp divergence raises an error naming the epoch") {
  Eigen::MatrixXd x = random_inputs(30, 3, 17);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions opts;
  opts.mlp_learning_rate = 1e200;  // one Adam step overflows the forward pass
  opts.mlp_epochs = 3;
  CHECK_THROWS_WITH_AS(fit_surrogate(SurrogateKind::Mlp, x, y, "t:1", 1, opts),
                       doctest::Contains("epoch"), TrainingError);
}

TEST_CASE("svr satisfies its kkt tolerance or reports the iteration cap") {
  Eigen::MatrixXd x = random_inputs(50, 3, 19);
  Eigen::VectorXd y = smooth_targets(x);
  const auto s = fit_surrogate(SurrogateKind::Svr, x, y, "t:1", 0);
  const auto& svr = std::get<SvrModel>(s.model);
  if (!svr.hit_iteration_cap) CHECK(svr.max_kkt_violation <= 1e-3);
  CHECK(svr.sweeps >= 1);

  // a tiny iteration budget must set the cap flag instead of failing
  SurrogateOptions strict;
  strict.svr_max_iterations = 1;
  strict.svr_tol = 1e-12;
  const auto s2 = fit_surrogate(SurrogateKind::Svr, x, y, "t:1", 0, strict);
  CHECK(std::get<SvrModel>(s2.model).hit_iteration_cap);
}

TEST_CASE("predictions are clamped to the unit interval") {
  Surrogate s;
  s.kind = SurrogateKind::Baseline;
  s.model = BaselineModel{1.3};
  const auto pred = s.predict(random_inputs(3, 2, 23));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(pred[i] == 1.0);
  CHECK(s.predict_raw(random_inputs(3, 2, 23))[0] == 1.3);
}

TEST_CASE("fitting is deterministic given the seed") {
  Eigen::MatrixXd x = random_inputs(60, 4, 29);
  Eigen::VectorXd y = smooth_targets(x);
  const auto probe = random_inputs(25, 4, 30);
  for (auto kind : all_surrogate_kinds()) {
    SurrogateOptions opts;
    opts.forest_trees = 20;
    opts.gbt_rounds = 40;
    opts.mlp_epochs = 10;
    const auto a = fit_surrogate(kind, x, y, "t:1", 777, opts);
    const auto b = fit_surrogate(kind, x, y, "t:1", 777, opts);
    CHECK(a.predict(probe) == b.predict(probe));
  }
}

TEST_CASE("parallel forest fitting equals sequential") {
  Eigen::MatrixXd x = random_inputs(80, 4, 47);
  Eigen::VectorXd y = smooth_targets(x);
  SurrogateOptions seq, par;
  seq.forest_trees = par.forest_trees = 24;
  par.jobs = 4;
  const auto a = fit_surrogate(SurrogateKind::Forest, x, y, "t:1", 5, seq);
  const auto b = fit_surrogate(SurrogateKind::Forest, x, y, "t:1", 5, par);
  const auto probe = random_inputs(15, 4, 48);
  CHECK(a.predict(probe) == b.predict(probe));
}

TEST_CASE("serialization round-trips for every kind") {
  const fs::path dir =
      fs::temp_directory_path() / ("fairhp-sur-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Eigen::MatrixXd x = random_inputs(40, 3, 51);
  Eigen::VectorXd y = smooth_targets(x);
  const auto probe = random_inputs(12, 3, 52);
  for (auto kind : all_surrogate_kinds()) {
    SurrogateOptions opts;
    opts.forest_trees = 8;
    opts.gbt_rounds = 15;
    opts.mlp_epochs = 5;
    const auto s = fit_surrogate(kind, x, y, "decision_tree:1", 31, opts);
    const std::string path = (dir / (to_string(kind) + ".json")).string();
    s.save(path);
    const auto back = Surrogate::load(path);
    CHECK(back.kind == s.kind);
    CHECK(back.space == s.space);
    CHECK(back.predict(probe) == s.predict(probe));
  }
  fs::remove_all(dir);
}

TEST_CASE("space tags are checked when predicting from configs") {
  const auto dt = hp_space(Algorithm::DecisionTree);
  const auto lr = hp_space(Algorithm::LogisticRegression);
  Rng rng(5);
  std::vector<HPConfig> dt_configs{sample_config(dt, rng)};
  const auto x = encode_batch(dt_configs, dt);
  const auto s = fit_surrogate(SurrogateKind::Baseline, x, dvec({0.5}), space_tag(dt), 0);
  CHECK_NOTHROW(predict_configs(s, dt, dt_configs));
  std::vector<HPConfig> lr_configs{sample_config(lr, rng)};
  CHECK_THROWS_AS(predict_configs(s, lr, lr_configs), ArgumentError);
}

TEST_CASE("fit rejects empty training sets and out-of-range targets") {
  CHECK_THROWS_AS(
      fit_surrogate(SurrogateKind::Baseline, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), "t:1", 0),
      ArgumentError);
  Eigen::MatrixXd x = random_inputs(3, 2, 53);
  CHECK_THROWS_AS(fit_surrogate(SurrogateKind::Baseline, x, dvec({0.1, 0.5, 1.4}), "t:1", 0),
                  ArgumentError);
}
