#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sratio/classifier.hpp"
#include "sratio/ensembles.hpp"

namespace sratio {

struct WeightReport {
  std::vector<double> weights;
  double gamma = 0.0;
  double beta = 1.0;
  /// Zero-based indices of the graded classifiers that entered the numerator.
  std::vector<std::size_t> active_set;
  /// #{w_i = 0} / N.
  double zero_fraction = 0.0;
  double simple_error = 0.0;
  std::vector<double> graded_errors;

  Json to_json() const;
};

/// Active set {i : eps_S - eps_i >= gamma}.
std::vector<std::size_t> select_active(double simple_error, std::span<const double> graded_errors, double gamma);

/// Weights from precomputed confidences. `rows` selects the rows of `graded`
/// that line up with `simple_conf` (all rows when empty). An empty active set
/// gives unit weights.
WeightReport sratio_weights_from(const GradedEvaluation& graded, std::span<const std::size_t> rows,
                                 std::span<const double> simple_conf, double simple_error, double gamma,
                                 double beta);

/// Computes the reweighting of every training row: the mean true-class
/// confidence of the qualifying graded classifiers divided by the simple
/// model's true-class confidence, zeroed where it exceeds beta.
/// `simple` must already be trained on `ds` with unit weights.
WeightReport sratio_weights(const GradedEnsemble& graded, const Classifier& simple, const Dataset& ds,
                            double gamma, double beta);

/// Mean confidence of the active graded classifiers without the simple-model
/// denominator and without clipping; unit weights for an empty active set.
std::vector<double> complex_only_weights(const GradedEvaluation& graded, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> active_set);

struct SRatioConfig {
  std::vector<double> gamma_grid{0.0, 0.01, 0.02, 0.05, 0.1};
  std::vector<double> beta_grid = default_beta_grid();
  int cv_folds = 10;
  std::uint64_t seed = 0;
  /// Refit the simple model on every CV training fold (otherwise reuse the
  /// confidences of the model fit on all of `ds`).
  bool refit_simple_per_fold = true;

  /// 1.5, 2.0, ..., 10.0.
  static std::vector<double> default_beta_grid();
  Json to_json() const;
};

struct CvCell {
  double gamma = 0.0;
  double beta = 1.0;
  double mean_error = 0.0;
};

struct SRatioResult {
  ClassifierPtr model;
  WeightReport report;
  std::vector<CvCell> cv;
};

/// Selects (gamma, beta) by k-fold cross-validation on `ds` (lowest mean error;
/// ties prefer smaller beta, then smaller gamma), then recomputes weights on all
/// of `ds` and retrains. Learner failures are rethrown with the offending
/// (gamma, beta) in the message.
SRatioResult sratio_train(const GradedEnsemble& graded, const Learner& learner, const Dataset& ds,
                          const SRatioConfig& cfg);

/// w_i = p_complex(y_i | x_i).
std::vector<double> confweight_weights(const Classifier& complex, const Dataset& ds);

/// Trains `learner` with unit weights on the complex model's argmax labels.
ClassifierPtr distill_proxy1(const Classifier& complex, const Learner& learner, const Dataset& ds);

/// One regressor per class fit to the complex model's probabilities; classifies by argmax.
class RegressorVoteClassifier final : public Classifier {
 public:
  RegressorVoteClassifier(std::vector<RegressorPtr> regressors, std::size_t n_features);

  int n_classes() const override { return static_cast<int>(regressors_.size()); }
  std::size_t n_features() const override { return n_features_; }
  /// Softmax of the regressor outputs; the argmax matches the raw outputs.
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  Json to_json() const override;

  using Classifier::predict_proba;

  const std::vector<RegressorPtr>& regressors() const noexcept { return regressors_; }

 private:
  std::vector<RegressorPtr> regressors_;
  std::size_t n_features_;
};

ClassifierPtr distill_proxy2(const Classifier& complex, const RegressionLearner& learner, const Dataset& ds);

struct BoundTerms {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Empirical sides of the reweighted cross-entropy bound:
///   lhs = mean(-log p_theta)
///   rhs = mean(max(1, r) log(1 / p_theta)) - mean(log r) + log(beta),
///   r = min(p_c / p_theta_star, beta).
/// Entries must lie strictly inside (0, 1) and beta >= 1.
BoundTerms bound_check(std::span<const double> p_theta, std::span<const double> p_c,
                       std::span<const double> p_theta_star, double beta);

}  // namespace sratio

namespace sratio {

struct BoundSweepResult {
  double beta = 1.0;
  std::size_t samples = 0;
  /// Samples where the single-sample bound fails (lhs > rhs + 1e-12).
  std::size_t pointwise_violations = 0;
  BoundTerms aggregate;
  bool aggregate_holds = true;
};

/// Draws `samples` triples uniform in (lo, hi) for each beta and checks the bound
/// both per sample and over the whole draw.
std::vector<BoundSweepResult> bound_sweep(std::size_t samples, std::span<const double> betas, std::uint64_t seed,
                                          double lo = 0.01, double hi = 0.99);

}  // namespace sratio
