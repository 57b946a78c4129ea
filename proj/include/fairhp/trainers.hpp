#pragma once

#include <Eigen/Dense>
#include <array>
#include <variant>
#include <vector>

#include "fairhp/dataset.hpp"
#include "fairhp/hp_space.hpp"

namespace fairhp {

// ---------------------------------------------------------------------------
// Learned parameter blocks
// ---------------------------------------------------------------------------

struct ClassTreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
  int n_samples = 0;
  int depth = 0;
};

struct ClassTree {
  std::vector<ClassTreeNode> nodes;  // nodes[0] is the root

  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int depth() const;
  std::vector<int> leaf_sizes() const;
};

Eigen::VectorXi predict_tree(const ClassTree& tree, const Eigen::MatrixXd& rows);

/// Linear decision function over standardized features; used by the logistic
/// and hinge-loss trainers.
struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double intercept_scaling = 1.0;
  Eigen::VectorXd feat_mean;
  Eigen::VectorXd feat_std;

  Eigen::VectorXd decision(const Eigen::MatrixXd& rows) const;
};

struct ForestClassifier {
  std::vector<ClassTree> trees;
};

struct DiscriminantModel {
  bool quadratic = false;
  std::array<double, 2> log_prior{};
  std::array<Eigen::VectorXd, 2> mean;
  std::array<Eigen::MatrixXd, 2> cov_inv;  // shared matrix stored twice for linear
  std::array<double, 2> log_det{};
};

// ---------------------------------------------------------------------------
// TrainedModel
// ---------------------------------------------------------------------------

struct TrainedModel {
  Algorithm algorithm = Algorithm::DecisionTree;
  Eigen::Index n_features = 0;
  uint64_t seed = 0;
  int iterations = 0;
  bool converged = true;
  std::variant<ClassTree, LinearModel, ForestClassifier, DiscriminantModel> params;
};

/// Trains one classifier. Deterministic given (algorithm, config, data, seed).
/// Throws TrainingError when only one label class is present; optimizers that
/// hit their iteration cap return converged = false instead of failing.
TrainedModel train(Algorithm algorithm, const HPConfig& config, const TabularDataset& data,
                   uint64_t seed);
TrainedModel train(const std::string& algorithm_id, const HPConfig& config,
                   const TabularDataset& data, uint64_t seed);

/// {0,1} predictions, one per row. Throws ArgumentError on a column-count
/// mismatch with the training schema.
Eigen::VectorXi predict(const TrainedModel& model, const Eigen::MatrixXd& rows);

}  // namespace fairhp
