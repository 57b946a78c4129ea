#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairhp/hp_space.hpp"

namespace fairhp {

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Numeric dims pass through (log dims natural-log transformed), categorical
/// dims become their level code, in dimension order.
Eigen::VectorXd encode(const HPConfig& config, const HPSpace& space);
Eigen::MatrixXd encode_batch(const std::vector<HPConfig>& configs, const HPSpace& space);

/// Tag stored in fitted surrogates: algorithm id plus space version.
std::string space_tag(const HPSpace& space);

// ---------------------------------------------------------------------------
// Model kinds
// ---------------------------------------------------------------------------

enum class SurrogateKind { Baseline, Mlp, Svr, Forest, Gbt };

SurrogateKind surrogate_kind_from_string(const std::string& id);
std::string to_string(SurrogateKind k);
const std::vector<SurrogateKind>& all_surrogate_kinds();

struct SurrogateOptions {
  // feedforward regressor
  int mlp_hidden_layers = 4;
  int mlp_hidden_units = 32;
  int mlp_epochs = 50;
  int mlp_batch_size = 64;
  double mlp_learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // kernel regressor
  double svr_epsilon = 0.01;
  double svr_c = 1.0;
  double svr_tol = 1e-3;
  int svr_max_iterations = 10000;  // full coordinate sweeps
  // tree ensemble
  int forest_trees = 100;
  int forest_max_depth = 35;
  bool forest_bootstrap = true;
  // boosted trees
  int gbt_rounds = 200;
  double gbt_learning_rate = 0.1;
  int gbt_max_depth = 30;
  // parallel tree fitting; results are identical to sequential
  int jobs = 1;
};

// ---------------------------------------------------------------------------
// Parameter blocks
// ---------------------------------------------------------------------------

struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   int max_depth, int min_samples_leaf = 1);

struct BaselineModel {
  double mean = 0.0;
};

/// ReLU stack with a linear head. Operates on already standardized inputs;
/// exposes flattened weights and analytic gradients so the training path can
/// be checked against finite differences.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const;
  Eigen::VectorXd mse_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const;

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& theta);
  Eigen::Index parameter_count() const;

  static MlpModel initialize(int in_dim, int hidden_layers, int hidden_units, Rng& rng);
};

struct SvrModel {
  Eigen::MatrixXd support;  // standardized training inputs
  Eigen::VectorXd beta;     // dual coefficients in [-C, C]
  double gamma = 1.0;
  double y_mean = 0.0;
  double max_kkt_violation = 0.0;
  bool hit_iteration_cap = false;
  int sweeps = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct ForestModel {
  std::vector<RegressionTree> trees;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;  // mean over trees
};

struct GbtModel {
  double init = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<double> train_mse_per_round;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

// ---------------------------------------------------------------------------
// Surrogate
// ---------------------------------------------------------------------------

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  static Standardizer fit(const Eigen::MatrixXd& x);
};

class Surrogate {
 public:
  SurrogateKind kind = SurrogateKind::Baseline;
  std::string space = "";  // space_tag of the training space
  std::optional<Standardizer> standardizer;
  std::variant<BaselineModel, MlpModel, SvrModel, ForestModel, GbtModel> model;

  /// Raw model output, before the [0,1] clamp.
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& encoded) const;
  /// Clamped to [0,1].
  Eigen::VectorXd predict(const Eigen::MatrixXd& encoded) const;

  nlohmann::json to_json() const;
  static Surrogate from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Surrogate load(const std::string& path);
};

/// Fits one surrogate on encoded configs. Deterministic given seed. Throws
/// ArgumentError on an empty training set or targets outside [0,1] and
/// TrainingError if the feedforward fit produces a non-finite loss.
Surrogate fit_surrogate(SurrogateKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::string& space, uint64_t seed,
                        const SurrogateOptions& opts = {});

/// Version-checked prediction straight from configs.
Eigen::VectorXd predict_configs(const Surrogate& s, const HPSpace& space,
                                const std::vector<HPConfig>& configs);

}  // namespace fairhp
