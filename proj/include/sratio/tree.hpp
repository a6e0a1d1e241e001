#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sratio/classifier.hpp"

namespace sratio {

struct TreeParams {
  int max_depth = 5;
  /// Minimum summed weight on each side of a split.
  double min_weight_leaf = 0.0;
  /// Additive smoothing of leaf class weights (classifiers only).
  double laplace_alpha = 1.0;
  /// Features examined per split; 0 means all.
  std::size_t max_features = 0;
  /// Drives feature subsampling only; unused when max_features is 0.
  std::uint64_t seed = 0;

  Json to_json() const;
};

/// Internal node when `feature >= 0`: x routes left iff x[feature] <= threshold.
/// Leaves carry the summed training weight per class (classifier) or the
/// weighted mean target (regressor).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> class_weights;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class TreeClassifier final : public Classifier {
 public:
  TreeClassifier(std::vector<TreeNode> nodes, int n_classes, std::size_t n_features,
                 double laplace_alpha);

  int n_classes() const override { return n_classes_; }
  std::size_t n_features() const override { return n_features_; }
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  Json to_json() const override;
  static TreeClassifier from_json(const Json& j);

  using Classifier::predict_proba;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  double laplace_alpha() const noexcept { return alpha_; }
  int depth() const;
  std::size_t leaf_index(std::span<const double> x) const;
  /// (W_c + alpha) / (W + C alpha) for a leaf.
  void leaf_distribution(std::size_t leaf, std::span<double> out) const;

  /// Same structure, thresholds and leaf class weights.
  bool operator==(const TreeClassifier& other) const;

 private:
  std::vector<TreeNode> nodes_;
  int n_classes_;
  std::size_t n_features_;
  double alpha_;
};

class TreeRegressor final : public Regressor {
 public:
  TreeRegressor(std::vector<TreeNode> nodes, std::size_t n_features);

  std::size_t n_features() const override { return n_features_; }
  double predict(std::span<const double> x) const override;
  Json to_json() const override;
  static TreeRegressor from_json(const Json& j);

  std::size_t leaf_index(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_;
};

/// Greedy top-down induction minimizing weighted Gini impurity. Zero-weight rows
/// are dropped before induction, so they influence neither split candidates nor
/// leaves. Throws FitError on all-zero weights.
TreeClassifier fit_tree_classifier(const Dataset& ds, std::span<const double> weights,
                                   const TreeParams& params);

/// Same induction minimizing weighted squared error; leaves hold the weighted mean.
TreeRegressor fit_tree_regressor(const Dataset& ds, std::span<const double> targets,
                                 std::span<const double> weights, const TreeParams& params);

class TreeLearner final : public Learner {
 public:
  explicit TreeLearner(TreeParams params) : params_(params) {}
  ClassifierPtr fit(const Dataset& ds, std::span<const double> weights) const override;
  std::string name() const override { return "tree"; }
  Json params() const override { return params_.to_json(); }
  const TreeParams& tree_params() const noexcept { return params_; }

 private:
  TreeParams params_;
};

class TreeRegressionLearner final : public RegressionLearner {
 public:
  explicit TreeRegressionLearner(TreeParams params) : params_(params) {}
  RegressorPtr fit(const Dataset& ds, std::span<const double> targets,
                   std::span<const double> weights) const override;
  std::string name() const override { return "tree_regressor"; }

 private:
  TreeParams params_;
};

}  // namespace sratio
