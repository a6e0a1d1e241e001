#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sratio/classifier.hpp"

namespace sratio {

struct SvmParams {
  /// L2 penalty against the mean (not summed) weighted loss during training.
  double reg_lambda = 1e-3;
  int epochs = 200;
  /// Step size schedule: eta_t = learning_rate / (1 + reg_lambda * learning_rate * t).
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  /// Width of the insensitive tube for regression.
  double epsilon_insensitive = 0.0;

  Json to_json() const;
};

/// Sigmoid calibration p = 1 / (1 + exp(-(a * margin + b))).
struct PlattScaling {
  double a = 1.0;
  double b = 0.0;

  double operator()(double margin) const;
  /// Minimizes weighted log-loss with Newton steps and backtracking (at most
  /// 100 iterations, gradient tolerance 1e-8). Targets are Platt's smoothed
  /// values (N+ + 1)/(N+ + 2) and 1/(N- + 2).
  static PlattScaling fit(std::span<const double> margins, std::span<const char> positive,
                          std::span<const double> weights);
};

/// One-vs-rest linear classifier with per-class sigmoid calibration.
class LinearModel final : public Classifier {
 public:
  static constexpr double kProbabilityFloor = 1e-6;

  LinearModel(int n_classes, std::size_t n_features, std::vector<double> weights,
              std::vector<double> biases, std::vector<PlattScaling> calibration);

  int n_classes() const override { return n_classes_; }
  std::size_t n_features() const override { return n_features_; }
  /// p_c = floor + (1 - C floor) * s_c / sum(s), s_c the calibrated sigmoid of class c.
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  Json to_json() const override;
  static LinearModel from_json(const Json& j);

  using Classifier::predict_proba;

  double margin(int cls, std::span<const double> x) const;
  std::span<const double> weights(int cls) const {
    return {weights_.data() + static_cast<std::size_t>(cls) * n_features_, n_features_};
  }
  double bias(int cls) const { return biases_[static_cast<std::size_t>(cls)]; }
  const std::vector<PlattScaling>& calibration() const noexcept { return calibration_; }

 private:
  int n_classes_;
  std::size_t n_features_;
  std::vector<double> weights_;  // n_classes x n_features, row-major
  std::vector<double> biases_;
  std::vector<PlattScaling> calibration_;
};

class LinearRegressor final : public Regressor {
 public:
  LinearRegressor(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}

  std::size_t n_features() const override { return weights_.size(); }
  double predict(std::span<const double> x) const override;
  Json to_json() const override;
  static LinearRegressor from_json(const Json& j);

  std::span<const double> weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_;
};

/// sum_i w_i max(0, 1 - y_i (theta . x_i + b)) + lambda |theta|^2 with y_i = +1
/// for rows of class `cls` and -1 otherwise.
double hinge_objective(const Dataset& ds, std::span<const double> weights, int cls,
                       std::span<const double> theta, double bias, double lambda);

/// sum_i w_i max(0, |t_i - (theta . x_i + b)| - eps) + lambda |theta|^2.
double insensitive_objective(const Dataset& ds, std::span<const double> targets,
                             std::span<const double> weights, std::span<const double> theta,
                             double bias, double lambda, double eps);

/// Weights rescaled to mean 1 over all rows.
std::vector<double> normalize_mean_one(std::span<const double> weights);

/// Seeded subgradient descent on the weighted hinge loss, one-vs-rest, followed
/// by Platt calibration on the training margins. The returned parameters are the
/// mean of the final-epoch iterates. Weights are normalized to mean
/// 1 first. Throws FitError on all-zero weights or a single effective class.
LinearModel fit_linear_svm(const Dataset& ds, std::span<const double> weights, const SvmParams& params);

/// Seeded subgradient descent on the weighted epsilon-insensitive loss; returns
/// the mean of the final-epoch iterates.
LinearRegressor fit_linear_svr(const Dataset& ds, std::span<const double> targets,
                               std::span<const double> weights, const SvmParams& params);

class SvmLearner final : public Learner {
 public:
  explicit SvmLearner(SvmParams params) : params_(params) {}
  ClassifierPtr fit(const Dataset& ds, std::span<const double> weights) const override;
  std::string name() const override { return "svm"; }
  Json params() const override { return params_.to_json(); }

 private:
  SvmParams params_;
};

class SvrLearner final : public RegressionLearner {
 public:
  explicit SvrLearner(SvmParams params) : params_(params) {}
  RegressorPtr fit(const Dataset& ds, std::span<const double> targets,
                   std::span<const double> weights) const override;
  std::string name() const override { return "svr"; }

 private:
  SvmParams params_;
};

}  // namespace sratio
