#include "sratio/classifier.hpp"

#include <cmath>

#include "sratio/error.hpp"

namespace sratio {

std::vector<double> Classifier::predict_proba(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(n_classes()));
  predict_proba(x, out);
  return out;
}

int Classifier::predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

ClassifierPtr Learner::fit_unweighted(const Dataset& ds) const {
  const auto w = unit_weights(ds.size());
  return fit(ds, w);
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t c = 1; c < values.size(); ++c)
    if (values[c] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

double error_rate(const Classifier& c, const Dataset& ds) {
  std::vector<double> p(static_cast<std::size_t>(c.n_classes()));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    c.predict_proba(ds.row(i), p);
    if (argmax(p) != ds.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

std::vector<double> true_class_proba(const Classifier& c, const Dataset& ds) {
  std::vector<double> p(static_cast<std::size_t>(c.n_classes()));
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    c.predict_proba(ds.row(i), p);
    out[i] = p[static_cast<std::size_t>(ds.label(i))];
  }
  return out;
}

void validate_weights(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n) throw FitError("weight vector length does not match dataset size");
  bool any_positive = false;
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw FitError("weights must be finite and nonnegative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw FitError("all-zero weights");
}

std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace sratio
