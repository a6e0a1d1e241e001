#include "sratio/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

Json SvmParams::to_json() const {
  return Json{{"reg_lambda", reg_lambda},
              {"epochs", epochs},
              {"learning_rate", learning_rate},
              {"seed", seed},
              {"epsilon_insensitive", epsilon_insensitive}};
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_svm_params(const SvmParams& p) {
  if (!(p.reg_lambda > 0.0)) throw FitError("reg_lambda must be positive");
  if (p.epochs < 1) throw FitError("epochs must be >= 1");
  if (!(p.learning_rate > 0.0)) throw FitError("learning_rate must be positive");
  if (p.epsilon_insensitive < 0.0) throw FitError("epsilon_insensitive must be nonnegative");
}

// Running mean of the iterates seen during the final epoch.
struct TailAverage {
  std::vector<double> theta;
  double bias = 0.0;
  std::size_t count = 0;

  explicit TailAverage(std::size_t d) : theta(d, 0.0) {}
  void add(std::span<const double> th, double b) {
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += th[j];
    bias += b;
    ++count;
  }
  void store(std::span<double> th, double& b) const {
    if (count == 0) return;
    for (std::size_t j = 0; j < theta.size(); ++j) th[j] = theta[j] / static_cast<double>(count);
    b = bias / static_cast<double>(count);
  }
};

}  // namespace

double PlattScaling::operator()(double margin) const { return sigmoid(a * margin + b); }

PlattScaling PlattScaling::fit(std::span<const double> margins, std::span<const char> positive,
                               std::span<const double> weights) {
  const std::size_t n = margins.size();
  double n_pos = 0.0, n_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) (positive[i] ? n_pos : n_neg) += weights[i];
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  const double total = n_pos + n_neg;

  auto loss = [&](double a, double b) {
    double l = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      const double z = a * margins[i] + b;
      const double t = positive[i] ? hi : lo;
      l += weights[i] * (softplus(z) - t * z);
    }
    return l;
  };

  PlattScaling s{0.0, std::log((n_pos + 1.0) / (n_neg + 1.0))};
  double current = loss(s.a, s.b);
  constexpr double kRidge = 1e-12;
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0.0, gb = 0.0, haa = kRidge, hab = 0.0, hbb = kRidge;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      const double p = sigmoid(s.a * margins[i] + s.b);
      const double t = positive[i] ? hi : lo;
      const double g = weights[i] * (p - t);
      const double h = weights[i] * p * (1.0 - p);
      ga += g * margins[i];
      gb += g;
      haa += h * margins[i] * margins[i];
      hab += h * margins[i];
      hbb += h;
    }
    if (std::max(std::abs(ga), std::abs(gb)) < 1e-8 * std::max(total, 1.0)) break;
    const double det = haa * hbb - hab * hab;
    if (!(det > 0.0)) break;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(haa * gb - hab * ga) / det;
    const double slope = ga * da + gb * db;

    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = s.a + step * da, nb = s.b + step * db;
      const double l = loss(na, nb);
      if (l <= current + 1e-4 * step * slope) {
        s = {na, nb};
        current = l;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return s;
}

LinearModel::LinearModel(int n_classes, std::size_t n_features, std::vector<double> weights,
                         std::vector<double> biases, std::vector<PlattScaling> calibration)
    : n_classes_(n_classes),
      n_features_(n_features),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      calibration_(std::move(calibration)) {
  const auto c = static_cast<std::size_t>(n_classes_);
  if (weights_.size() != c * n_features_ || biases_.size() != c || calibration_.size() != c)
    throw DataError("linear model parameter shapes are inconsistent");
  for (const double v : weights_)
    if (!std::isfinite(v)) throw FitError("non-finite linear model weight");
}

double LinearModel::margin(int cls, std::span<const double> x) const {
  return dot(weights(cls), x) + bias(cls);
}

void LinearModel::predict_proba(std::span<const double> x, std::span<double> out) const {
  const auto c = static_cast<std::size_t>(n_classes_);
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    out[k] = calibration_[k](margin(static_cast<int>(k), x));
    sum += out[k];
  }
  const double floor = kProbabilityFloor;
  const double mass = 1.0 - static_cast<double>(c) * floor;
  for (std::size_t k = 0; k < c; ++k)
    out[k] = floor + mass * (sum > 0.0 ? out[k] / sum : 1.0 / static_cast<double>(c));
}

Json LinearModel::to_json() const {
  Json cal = Json::array();
  for (const auto& p : calibration_) cal.push_back({{"a", p.a}, {"b", p.b}});
  return Json{{"type", "linear_svm"},
              {"n_classes", n_classes_},
              {"n_features", n_features_},
              {"weights", weights_},
              {"biases", biases_},
              {"calibration", cal}};
}

LinearModel LinearModel::from_json(const Json& j) {
  if (j.at("type") != "linear_svm") throw DataError("not a linear_svm document");
  std::vector<PlattScaling> cal;
  for (const auto& p : j.at("calibration")) cal.push_back({p.at("a").get<double>(), p.at("b").get<double>()});
  return LinearModel(j.at("n_classes").get<int>(), j.at("n_features").get<std::size_t>(),
                     j.at("weights").get<std::vector<double>>(),
                     j.at("biases").get<std::vector<double>>(), std::move(cal));
}

double LinearRegressor::predict(std::span<const double> x) const { return dot(weights_, x) + bias_; }

Json LinearRegressor::to_json() const {
  return Json{{"type", "linear_svr"}, {"weights", weights_}, {"bias", bias_}};
}

LinearRegressor LinearRegressor::from_json(const Json& j) {
  if (j.at("type") != "linear_svr") throw DataError("not a linear_svr document");
  return LinearRegressor(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
}

double hinge_objective(const Dataset& ds, std::span<const double> weights, int cls,
                       std::span<const double> theta, double bias, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double y = ds.label(i) == cls ? 1.0 : -1.0;
    loss += weights[i] * std::max(0.0, 1.0 - y * (dot(theta, ds.row(i)) + bias));
  }
  return loss + lambda * dot(theta, theta);
}

double insensitive_objective(const Dataset& ds, std::span<const double> targets,
                             std::span<const double> weights, std::span<const double> theta,
                             double bias, double lambda, double eps) {
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double r = targets[i] - (dot(theta, ds.row(i)) + bias);
    loss += weights[i] * std::max(0.0, std::abs(r) - eps);
  }
  return loss + lambda * dot(theta, theta);
}

std::vector<double> normalize_mean_one(std::span<const double> weights) {
  const double mean =
      std::accumulate(weights.begin(), weights.end(), 0.0) / static_cast<double>(weights.size());
  std::vector<double> out(weights.begin(), weights.end());
  if (mean > 0.0)
    for (auto& w : out) w /= mean;
  return out;
}

LinearModel fit_linear_svm(const Dataset& ds, std::span<const double> weights, const SvmParams& params) {
  check_svm_params(params);
  validate_weights(weights, ds.size());
  const auto w = normalize_mean_one(weights);

  std::vector<double> class_weight(static_cast<std::size_t>(ds.n_classes()), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) class_weight[static_cast<std::size_t>(ds.label(i))] += w[i];
  if (std::count_if(class_weight.begin(), class_weight.end(), [](double v) { return v > 0.0; }) < 2)
    throw FitError("single effective class");

  const std::size_t n = ds.size();
  const std::size_t d = ds.n_features();
  const auto n_classes = static_cast<std::size_t>(ds.n_classes());
  std::vector<double> all_weights(n_classes * d, 0.0);
  std::vector<double> biases(n_classes, 0.0);
  std::vector<PlattScaling> calibration;
  std::vector<double> margins(n);
  std::vector<char> positive(n);

  for (std::size_t c = 0; c < n_classes; ++c) {
    std::span<double> theta(all_weights.data() + c * d, d);
    double& b = biases[c];
    TailAverage avg(d);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
      const auto order = permutation(n, derive_seed(params.seed, "svm/epoch", {c, static_cast<std::uint64_t>(epoch)}));
      for (const auto i : order) {
        if (w[i] == 0.0) continue;
        ++t;
        const double eta = params.learning_rate /
                           (1.0 + params.reg_lambda * params.learning_rate * static_cast<double>(t));
        const auto x = ds.row(i);
        const double y = ds.label(i) == static_cast<int>(c) ? 1.0 : -1.0;
        const double m = y * (dot(theta, x) + b);
        const double shrink = 1.0 - 2.0 * eta * params.reg_lambda;
        for (auto& v : theta) v *= shrink;
        if (m < 1.0) {
          const double g = eta * w[i] * y;
          for (std::size_t j = 0; j < d; ++j) theta[j] += g * x[j];
          b += g;
        }
        if (epoch + 1 == params.epochs) avg.add(theta, b);
      }
    }
    avg.store(theta, b);
    for (std::size_t i = 0; i < n; ++i) {
      margins[i] = dot(theta, ds.row(i)) + b;
      positive[i] = ds.label(i) == static_cast<int>(c) ? 1 : 0;
    }
    calibration.push_back(PlattScaling::fit(margins, positive, w));
  }
  return LinearModel(ds.n_classes(), d, std::move(all_weights), std::move(biases), std::move(calibration));
}

LinearRegressor fit_linear_svr(const Dataset& ds, std::span<const double> targets,
                               std::span<const double> weights, const SvmParams& params) {
  check_svm_params(params);
  validate_weights(weights, ds.size());
  if (targets.size() != ds.size()) throw FitError("target vector length does not match dataset size");
  for (const double v : targets)
    if (!std::isfinite(v)) throw FitError("targets must be finite");
  const auto w = normalize_mean_one(weights);

  const std::size_t n = ds.size();
  const std::size_t d = ds.n_features();
  std::vector<double> theta(d, 0.0);
  double b = 0.0;
  TailAverage avg(d);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto order = permutation(n, derive_seed(params.seed, "svr/epoch", {static_cast<std::uint64_t>(epoch)}));
    for (const auto i : order) {
      if (w[i] == 0.0) continue;
      ++t;
      const double eta = params.learning_rate /
                         (1.0 + params.reg_lambda * params.learning_rate * static_cast<double>(t));
      const auto x = ds.row(i);
      const double r = targets[i] - (dot(theta, x) + b);
      const double shrink = 1.0 - 2.0 * eta * params.reg_lambda;
      for (auto& v : theta) v *= shrink;
      if (std::abs(r) > params.epsilon_insensitive) {
        const double g = eta * w[i] * (r > 0.0 ? 1.0 : -1.0);
        for (std::size_t j = 0; j < d; ++j) theta[j] += g * x[j];
        b += g;
      }
      if (epoch + 1 == params.epochs) avg.add(theta, b);
    }
  }
  avg.store(theta, b);
  return LinearRegressor(std::move(theta), b);
}

ClassifierPtr SvmLearner::fit(const Dataset& ds, std::span<const double> weights) const {
  return std::make_shared<LinearModel>(fit_linear_svm(ds, weights, params_));
}

RegressorPtr SvrLearner::fit(const Dataset& ds, std::span<const double> targets,
                             std::span<const double> weights) const {
  return std::make_shared<LinearRegressor>(fit_linear_svr(ds, targets, weights, params_));
}

}  // namespace sratio
