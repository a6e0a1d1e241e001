#include "sratio/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

Json TreeParams::to_json() const {
  return Json{{"max_depth", max_depth},
              {"min_weight_leaf", min_weight_leaf},
              {"laplace_alpha", laplace_alpha},
              {"max_features", max_features},
              {"seed", seed}};
}

namespace {

using Index = std::uint32_t;
using SortedLists = std::vector<std::vector<Index>>;

// Weighted class histogram; impurity is the total weighted Gini W_L*G_L + W_R*G_R.
struct GiniCriterion {
  const Dataset& ds;
  std::span<const double> w;
  std::size_t n_classes;

  struct Stats {
    std::vector<double> per_class;
    double total = 0.0;
  };

  Stats empty() const { return {std::vector<double>(n_classes, 0.0), 0.0}; }
  void add(Stats& s, Index i) const {
    s.per_class[static_cast<std::size_t>(ds.label(i))] += w[i];
    s.total += w[i];
  }
  Stats minus(const Stats& all, const Stats& part) const {
    Stats out = empty();
    for (std::size_t c = 0; c < n_classes; ++c) out.per_class[c] = all.per_class[c] - part.per_class[c];
    out.total = all.total - part.total;
    return out;
  }
  static double gini_total(const Stats& s) {
    double sq = 0.0;
    for (const double v : s.per_class) sq += v * v;
    return s.total - sq / s.total;
  }
  double impurity(const Stats& left, const Stats& right) const {
    return gini_total(left) + gini_total(right);
  }
  double scale(const Stats& all) const { return all.total; }
  bool pure(const Stats& all, std::span<const Index>) const {
    int present = 0;
    for (const double v : all.per_class) present += v > 0.0 ? 1 : 0;
    return present <= 1;
  }
  TreeNode leaf(const Stats& all) const {
    TreeNode node;
    node.class_weights = all.per_class;
    return node;
  }
};

// Weighted sum of squared errors around the weighted mean.
struct SquaredErrorCriterion {
  std::span<const double> y;
  std::span<const double> w;

  struct Stats {
    double total = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };

  Stats empty() const { return {}; }
  void add(Stats& s, Index i) const {
    s.total += w[i];
    s.sum += w[i] * y[i];
    s.sum_sq += w[i] * y[i] * y[i];
  }
  Stats minus(const Stats& all, const Stats& part) const {
    return {all.total - part.total, all.sum - part.sum, all.sum_sq - part.sum_sq};
  }
  static double sse(const Stats& s) { return s.sum_sq - s.sum * s.sum / s.total; }
  double impurity(const Stats& left, const Stats& right) const { return sse(left) + sse(right); }
  double scale(const Stats& all) const { return std::max(all.sum_sq, all.total); }
  bool pure(const Stats&, std::span<const Index> members) const {
    const double first = y[members.front()];
    return std::all_of(members.begin(), members.end(), [&](Index i) { return y[i] == first; });
  }
  TreeNode leaf(const Stats& all) const {
    TreeNode node;
    node.value = all.sum / all.total;
    return node;
  }
};

template <class Criterion>
class Builder {
 public:
  Builder(const Dataset& ds, std::span<const double> w, const TreeParams& params, Criterion crit)
      : ds_(ds), w_(w), params_(params), crit_(std::move(crit)), rng_(params.seed),
        goes_left_(ds.size(), 0) {}

  std::vector<TreeNode> run() {
    const std::size_t d = ds_.n_features();
    std::vector<Index> active;
    for (std::size_t i = 0; i < ds_.size(); ++i)
      if (w_[i] > 0.0) active.push_back(static_cast<Index>(i));

    SortedLists sorted(d, active);
    for (std::size_t f = 0; f < d; ++f)
      std::sort(sorted[f].begin(), sorted[f].end(), [&](Index a, Index b) {
        const double va = ds_.at(a, f), vb = ds_.at(b, f);
        return va < vb || (va == vb && a < b);
      });
    grow(std::move(sorted), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  int grow(SortedLists sorted, int depth) {
    const auto& members = sorted.front();
    auto total = crit_.empty();
    for (const Index i : members) crit_.add(total, i);

    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(crit_.leaf(total));
    if (depth >= params_.max_depth || crit_.pure(total, members)) return id;

    const Split best = find_split(sorted, total);
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    for (const Index i : members) goes_left_[i] = ds_.at(i, f) <= best.threshold ? 1 : 0;

    SortedLists left(sorted.size()), right(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      for (const Index i : sorted[k]) (goes_left_[i] ? left[k] : right[k]).push_back(i);
      std::vector<Index>().swap(sorted[k]);
    }

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node = TreeNode{};
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = ds_.n_features();
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    if (params_.max_features == 0 || params_.max_features >= d) return feats;
    for (std::size_t k = 0; k < params_.max_features; ++k) {
      const auto j = k + static_cast<std::size_t>(rng_.below(d - k));
      std::swap(feats[k], feats[j]);
    }
    feats.resize(params_.max_features);
    std::sort(feats.begin(), feats.end());
    return feats;
  }

  Split find_split(const SortedLists& sorted, const typename Criterion::Stats& total) {
    Split best;
    const double tol = 1e-12 * crit_.scale(total);
    auto feats = candidate_features();
    scan(sorted, total, feats, tol, best);
    if (best.feature < 0 && feats.size() < ds_.n_features()) {
      // Every sampled feature was constant here; fall back to the remaining ones.
      std::vector<std::size_t> rest;
      for (std::size_t f = 0; f < ds_.n_features(); ++f)
        if (!std::binary_search(feats.begin(), feats.end(), f)) rest.push_back(f);
      scan(sorted, total, rest, tol, best);
    }
    return best;
  }

  void scan(const SortedLists& sorted, const typename Criterion::Stats& total,
            const std::vector<std::size_t>& feats, double tol, Split& best) {
    for (const std::size_t f : feats) {
      const auto& order = sorted[f];
      auto left = crit_.empty();
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        crit_.add(left, order[k]);
        const double a = ds_.at(order[k], f);
        const double b = ds_.at(order[k + 1], f);
        if (!(a < b)) continue;
        const auto right = crit_.minus(total, left);
        if (left.total < params_.min_weight_leaf || right.total < params_.min_weight_leaf) continue;
        const double imp = crit_.impurity(left, right);
        if (imp < best.impurity - tol) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = Split{static_cast<int>(f), mid, imp};
        }
      }
    }
  }

  const Dataset& ds_;
  std::span<const double> w_;
  TreeParams params_;
  Criterion crit_;
  Rng rng_;
  std::vector<char> goes_left_;
  std::vector<TreeNode> nodes_;
};

void check_params(const TreeParams& p) {
  if (p.max_depth < 1) throw FitError("tree max_depth must be >= 1");
  if (p.min_weight_leaf < 0.0) throw FitError("min_weight_leaf must be nonnegative");
  if (p.laplace_alpha < 0.0) throw FitError("laplace_alpha must be nonnegative");
}

std::size_t route(const std::vector<TreeNode>& nodes, std::span<const double> x) {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return k;
}

int node_depth(const std::vector<TreeNode>& nodes, std::size_t k) {
  if (nodes[k].is_leaf()) return 0;
  return 1 + std::max(node_depth(nodes, static_cast<std::size_t>(nodes[k].left)),
                      node_depth(nodes, static_cast<std::size_t>(nodes[k].right)));
}

Json nodes_to_json(const std::vector<TreeNode>& nodes, bool classifier) {
  Json arr = Json::array();
  for (const auto& n : nodes) {
    if (!n.is_leaf())
      arr.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    else if (classifier)
      arr.push_back({{"class_weights", n.class_weights}});
    else
      arr.push_back({{"value", n.value}});
  }
  return arr;
}

std::vector<TreeNode> nodes_from_json(const Json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& j : arr) {
    TreeNode n;
    if (j.contains("feature")) {
      n.feature = j.at("feature").get<int>();
      n.threshold = j.at("threshold").get<double>();
      n.left = j.at("left").get<int>();
      n.right = j.at("right").get<int>();
    } else if (j.contains("class_weights")) {
      n.class_weights = j.at("class_weights").get<std::vector<double>>();
    } else {
      n.value = j.at("value").get<double>();
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

}  // namespace

TreeClassifier::TreeClassifier(std::vector<TreeNode> nodes, int n_classes, std::size_t n_features,
                               double laplace_alpha)
    : nodes_(std::move(nodes)), n_classes_(n_classes), n_features_(n_features), alpha_(laplace_alpha) {
  if (nodes_.empty()) throw DataError("tree has no nodes");
}

std::size_t TreeClassifier::leaf_index(std::span<const double> x) const { return route(nodes_, x); }

void TreeClassifier::leaf_distribution(std::size_t leaf, std::span<double> out) const {
  const auto& cw = nodes_[leaf].class_weights;
  const double total = std::accumulate(cw.begin(), cw.end(), 0.0);
  const double denom = total + static_cast<double>(n_classes_) * alpha_;
  if (denom <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(n_classes_));
    return;
  }
  for (std::size_t c = 0; c < cw.size(); ++c) out[c] = (cw[c] + alpha_) / denom;
}

void TreeClassifier::predict_proba(std::span<const double> x, std::span<double> out) const {
  leaf_distribution(route(nodes_, x), out);
}

int TreeClassifier::depth() const { return node_depth(nodes_, 0); }

bool TreeClassifier::operator==(const TreeClassifier& other) const {
  return n_classes_ == other.n_classes_ && n_features_ == other.n_features_ &&
         alpha_ == other.alpha_ && nodes_ == other.nodes_;
}

Json TreeClassifier::to_json() const {
  return Json{{"type", "tree_classifier"},
              {"n_classes", n_classes_},
              {"n_features", n_features_},
              {"laplace_alpha", alpha_},
              {"nodes", nodes_to_json(nodes_, true)}};
}

TreeClassifier TreeClassifier::from_json(const Json& j) {
  if (j.at("type") != "tree_classifier") throw DataError("not a tree_classifier document");
  return TreeClassifier(nodes_from_json(j.at("nodes")), j.at("n_classes").get<int>(),
                        j.at("n_features").get<std::size_t>(), j.at("laplace_alpha").get<double>());
}

TreeRegressor::TreeRegressor(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw DataError("tree has no nodes");
}

double TreeRegressor::predict(std::span<const double> x) const { return nodes_[route(nodes_, x)].value; }

std::size_t TreeRegressor::leaf_index(std::span<const double> x) const { return route(nodes_, x); }

int TreeRegressor::depth() const { return node_depth(nodes_, 0); }

Json TreeRegressor::to_json() const {
  return Json{{"type", "tree_regressor"},
              {"n_features", n_features_},
              {"nodes", nodes_to_json(nodes_, false)}};
}

TreeRegressor TreeRegressor::from_json(const Json& j) {
  if (j.at("type") != "tree_regressor") throw DataError("not a tree_regressor document");
  return TreeRegressor(nodes_from_json(j.at("nodes")), j.at("n_features").get<std::size_t>());
}

TreeClassifier fit_tree_classifier(const Dataset& ds, std::span<const double> weights,
                                   const TreeParams& params) {
  check_params(params);
  validate_weights(weights, ds.size());
  Builder<GiniCriterion> builder(ds, weights, params,
                                 GiniCriterion{ds, weights, static_cast<std::size_t>(ds.n_classes())});
  return TreeClassifier(builder.run(), ds.n_classes(), ds.n_features(), params.laplace_alpha);
}

TreeRegressor fit_tree_regressor(const Dataset& ds, std::span<const double> targets,
                                 std::span<const double> weights, const TreeParams& params) {
  check_params(params);
  validate_weights(weights, ds.size());
  if (targets.size() != ds.size()) throw FitError("target vector length does not match dataset size");
  for (const double t : targets)
    if (!std::isfinite(t)) throw FitError("targets must be finite");
  Builder<SquaredErrorCriterion> builder(ds, weights, params, SquaredErrorCriterion{targets, weights});
  return TreeRegressor(builder.run(), ds.n_features());
}

ClassifierPtr TreeLearner::fit(const Dataset& ds, std::span<const double> weights) const {
  return std::make_shared<TreeClassifier>(fit_tree_classifier(ds, weights, params_));
}

RegressorPtr TreeRegressionLearner::fit(const Dataset& ds, std::span<const double> targets,
                                        std::span<const double> weights) const {
  return std::make_shared<TreeRegressor>(fit_tree_regressor(ds, targets, weights, params_));
}

}  // namespace sratio
