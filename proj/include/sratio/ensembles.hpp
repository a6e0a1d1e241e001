#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sratio/classifier.hpp"
#include "sratio/tree.hpp"

namespace sratio {

struct BoostingParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::uint64_t seed = 0;

  Json to_json() const;
};

/// Multiclass gradient boosting on softmax log-loss. Every stage holds one
/// regression tree per class, fit to the residual onehot(y) - p.
class BoostedModel final : public Classifier {
 public:
  BoostedModel(std::vector<double> initial_scores, double learning_rate,
               std::vector<std::vector<TreeRegressor>> stages, std::size_t n_features,
               std::vector<double> train_loss = {});

  int n_classes() const override { return static_cast<int>(initial_.size()); }
  std::size_t n_features() const override { return n_features_; }
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  Json to_json() const override;
  static BoostedModel from_json(const Json& j);

  using Classifier::predict_proba;

  std::size_t n_stages() const noexcept { return stages_.size(); }
  double learning_rate() const noexcept { return learning_rate_; }
  const std::vector<double>& initial_scores() const noexcept { return initial_; }
  /// Softmax of the initial scores plus the first `n_stages` stages.
  void predict_proba_prefix(std::span<const double> x, std::size_t n_stages, std::span<double> out) const;
  /// Mean training log-loss after 0, 1, ..., M stages.
  const std::vector<double>& train_loss() const noexcept { return train_loss_; }

  /// Calls visit(k, probs) after k stages for every k in `checkpoints` (ascending).
  template <class Visit>
  void for_each_prefix(std::span<const double> x, std::span<const std::size_t> checkpoints, Visit&& visit) const;

 private:
  std::vector<double> initial_;
  double learning_rate_;
  std::vector<std::vector<TreeRegressor>> stages_;
  std::size_t n_features_;
  std::vector<double> train_loss_;
};

/// Throws FitError for datasets with fewer than two present classes.
BoostedModel fit_gradient_boosting(const Dataset& ds, const BoostingParams& params);

enum class TreeOrdering { TrainingAccuracy, OutOfBagAccuracy };

struct ForestParams {
  int n_trees = 100;
  int max_depth = 10;
  /// 0 means floor(sqrt(d)), at least 1.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;

  Json to_json() const;
};

/// Bootstrap-aggregated classification trees; probabilities are the mean of the
/// members' leaf distributions.
class ForestModel final : public Classifier {
 public:
  ForestModel(std::vector<TreeClassifier> trees, std::vector<double> train_accuracy,
              std::vector<double> oob_accuracy);

  int n_classes() const override { return trees_.front().n_classes(); }
  std::size_t n_features() const override { return trees_.front().n_features(); }
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  Json to_json() const override;
  static ForestModel from_json(const Json& j);

  using Classifier::predict_proba;

  const std::vector<TreeClassifier>& trees() const noexcept { return trees_; }
  const std::vector<double>& train_accuracy() const noexcept { return train_accuracy_; }
  /// Falls back to training accuracy for trees without out-of-bag rows.
  const std::vector<double>& oob_accuracy() const noexcept { return oob_accuracy_; }

 private:
  std::vector<TreeClassifier> trees_;
  std::vector<double> train_accuracy_;
  std::vector<double> oob_accuracy_;
};

/// Member i is fit on a bootstrap resample drawn from derive_seed(seed, "forest/tree", {i});
/// the resample enters the tree as integer weights.
ForestModel fit_random_forest(const Dataset& ds, const ForestParams& params);

/// Per-row confidences of every graded classifier at the true label, plus
/// whether each one classifies the row correctly.
struct GradedEvaluation {
  std::size_t n_rows = 0;
  std::size_t n_graded = 0;
  std::vector<double> confidence;  // n_rows x n_graded
  std::vector<char> correct;       // n_rows x n_graded

  double conf(std::size_t row, std::size_t k) const { return confidence[row * n_graded + k]; }
  bool is_correct(std::size_t row, std::size_t k) const { return correct[row * n_graded + k] != 0; }
  /// Error of each graded classifier over the given rows (all rows when empty).
  std::vector<double> errors(std::span<const std::size_t> rows = {}) const;
};

/// Ordered simplifications zeta_1 ... zeta_n of a complex model.
class GradedEnsemble {
 public:
  virtual ~GradedEnsemble() = default;

  virtual std::size_t size() const = 0;
  virtual int n_classes() const = 0;
  /// Writes size() x n_classes() probabilities for x, evaluated in one pass.
  virtual void predict_all(std::span<const double> x, std::span<double> out) const = 0;
  virtual ClassifierPtr member(std::size_t k) const = 0;
  virtual Json describe() const = 0;

  GradedEvaluation evaluate(const Dataset& ds) const;
  /// Training errors epsilon_1 ... epsilon_n on ds.
  std::vector<double> errors(const Dataset& ds) const;
};

using GradedPtr = std::shared_ptr<const GradedEnsemble>;

/// zeta_k uses the first min(k * step, M) boosting stages. Throws on step <= 0.
GradedPtr graded_from_boosting(std::shared_ptr<const BoostedModel> model, int step);

/// Trees sorted ascending by accuracy (ties by original index); zeta_k averages
/// the first min(k * step, M) sorted trees. Throws on step <= 0.
GradedPtr graded_from_forest(std::shared_ptr<const ForestModel> model, int step,
                             TreeOrdering ordering = TreeOrdering::TrainingAccuracy);

/// An explicit list of classifiers; mainly for tests and custom gradations.
GradedPtr graded_from_list(std::vector<ClassifierPtr> members);

/// Fraction of rows where zeta_1(x) <= ... <= zeta_n(x) at the true label
/// (tolerance 1e-12). 1 for a single classifier.
double measure_gradedness(const GradedEnsemble& graded, const Dataset& ds);
double measure_gradedness(const GradedEvaluation& eval);

// ---------------------------------------------------------------------------

template <class Visit>
void BoostedModel::for_each_prefix(std::span<const double> x, std::span<const std::size_t> checkpoints,
                                   Visit&& visit) const {
  const std::size_t c = initial_.size();
  std::vector<double> scores(initial_);
  std::vector<double> probs(c);
  std::size_t done = 0;
  for (const std::size_t k : checkpoints) {
    for (; done < k; ++done)
      for (std::size_t j = 0; j < c; ++j) scores[j] += learning_rate_ * stages_[done][j].predict(x);
    double mx = scores[0];
    for (const double s : scores) mx = std::max(mx, s);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += (probs[j] = std::exp(scores[j] - mx));
    for (auto& p : probs) p /= sum;
    visit(k, std::span<const double>(probs));
  }
}

}  // namespace sratio
