#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sratio/data.hpp"

namespace sratio {

using Json = nlohmann::json;

/// Anything mapping an input to a probability simplex over classes.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int n_classes() const = 0;
  virtual std::size_t n_features() const = 0;
  /// Writes n_classes() probabilities into `out`.
  virtual void predict_proba(std::span<const double> x, std::span<double> out) const = 0;
  virtual Json to_json() const = 0;

  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Argmax class; ties go to the lowest index.
  int predict(std::span<const double> x) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::size_t n_features() const = 0;
  virtual double predict(std::span<const double> x) const = 0;
  virtual Json to_json() const = 0;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

/// A weighted learning algorithm for a simple classifier.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual ClassifierPtr fit(const Dataset& ds, std::span<const double> weights) const = 0;
  virtual std::string name() const = 0;
  virtual Json params() const = 0;

  ClassifierPtr fit_unweighted(const Dataset& ds) const;
};

/// A weighted learning algorithm for real-valued targets (labels of `ds` are ignored).
class RegressionLearner {
 public:
  virtual ~RegressionLearner() = default;
  virtual RegressorPtr fit(const Dataset& ds, std::span<const double> targets,
                           std::span<const double> weights) const = 0;
  virtual std::string name() const = 0;
};

/// Index of the largest entry, lowest index on ties.
int argmax(std::span<const double> values);

/// Fraction of rows whose predicted class differs from the label.
double error_rate(const Classifier& c, const Dataset& ds);

/// p(y_i | x_i) for every row.
std::vector<double> true_class_proba(const Classifier& c, const Dataset& ds);

/// Throws FitError unless weights are finite, nonnegative, sized N and not all zero.
void validate_weights(std::span<const double> weights, std::size_t n);

std::vector<double> unit_weights(std::size_t n);

}  // namespace sratio
