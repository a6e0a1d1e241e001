#pragma once
// Reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "sratio/classifier.hpp"
#include "sratio/data.hpp"
#include "sratio/rng.hpp"
#include "sratio/tree.hpp"

namespace oracle {

/// Row i repeated weights[i] times (weights must be integers).
inline sratio::Dataset replicate(const sratio::Dataset& ds, const std::vector<double>& weights) {
  std::vector<double> f;
  std::vector<int> y;
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (int r = 0; r < static_cast<int>(weights[i]); ++r) {
      const auto row = ds.row(i);
      f.insert(f.end(), row.begin(), row.end());
      y.push_back(ds.label(i));
    }
  return sratio::Dataset(std::move(f), ds.n_features(), std::move(y), ds.n_classes());
}

struct RootSplit {
  int feature = -1;
  double threshold = 0.0;
};

/// Every (feature, midpoint) candidate evaluated from scratch; lowest total
/// weighted Gini wins, earlier feature and then smaller threshold on ties.
inline RootSplit brute_force_root(const sratio::Dataset& ds, const std::vector<double>& w) {
  const auto c = static_cast<std::size_t>(ds.n_classes());
  auto gini = [&](const std::vector<double>& h) {
    double t = 0.0, sq = 0.0;
    for (double v : h) t += v, sq += v * v;
    return t > 0.0 ? t - sq / t : 0.0;
  };
  std::vector<double> all(c, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(ds.label(i))] += w[i];
  if (std::count_if(all.begin(), all.end(), [](double v) { return v > 0.0; }) <= 1) return {};
  double total = 0.0;
  for (double v : all) total += v;
  const double tol = 1e-12 * total;

  RootSplit best;
  double best_imp = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (w[i] > 0.0) values.insert(ds.at(i, f));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double thr = v[k] + (v[k + 1] - v[k]) / 2.0;
      std::vector<double> l(c, 0.0), r(c, 0.0);
      for (std::size_t i = 0; i < ds.size(); ++i)
        if (w[i] > 0.0) (ds.at(i, f) <= thr ? l : r)[static_cast<std::size_t>(ds.label(i))] += w[i];
      const double imp = gini(l) + gini(r);
      if (imp < best_imp - tol) {
        best_imp = imp;
        best = {static_cast<int>(f), thr};
      }
    }
  }
  return best;
}

/// Small dataset with integer-valued features (plenty of ties) and integer
/// weights in [0, max_weight], at least one of them positive.
struct SmallCase {
  sratio::Dataset ds;
  std::vector<double> weights;
};

inline SmallCase random_small_case(std::uint64_t seed, std::size_t max_n, std::size_t max_d, int max_weight) {
  sratio::Rng rng(seed);
  const std::size_t n = 2 + static_cast<std::size_t>(rng.below(max_n - 1));
  const std::size_t d = 1 + static_cast<std::size_t>(rng.below(max_d));
  const int c = 2 + static_cast<int>(rng.below(2));
  std::vector<double> f(n * d);
  for (auto& v : f) v = static_cast<double>(rng.below(5));
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
  std::vector<double> w(n);
  for (auto& v : w) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(max_weight) + 1));
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[0] = 1.0;
  return {sratio::Dataset(std::move(f), d, std::move(y), c), std::move(w)};
}

/// Weighted-dataset fit vs. replicated fit: same nodes, thresholds and leaf weights.
inline bool replication_matches(const SmallCase& sc, const sratio::TreeParams& p) {
  const auto a = sratio::fit_tree_classifier(sc.ds, sc.weights, p);
  const auto rep = replicate(sc.ds, sc.weights);
  const auto b = sratio::fit_tree_classifier(rep, sratio::unit_weights(rep.size()), p);
  return a == b;
}

/// Classifier backed by a callable.
class FnClassifier final : public sratio::Classifier {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FnClassifier(int c, std::size_t d, Fn fn) : c_(c), d_(d), fn_(std::move(fn)) {}
  int n_classes() const override { return c_; }
  std::size_t n_features() const override { return d_; }
  void predict_proba(std::span<const double> x, std::span<double> out) const override { fn_(x, out); }
  sratio::Json to_json() const override { return {{"type", "fn"}}; }
  using Classifier::predict_proba;

 private:
  int c_;
  std::size_t d_;
  Fn fn_;
};

}  // namespace oracle
