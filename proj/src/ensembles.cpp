#include "sratio/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

Json BoostingParams::to_json() const {
  return Json{{"n_trees", n_trees}, {"learning_rate", learning_rate}, {"max_depth", max_depth}, {"seed", seed}};
}

Json ForestParams::to_json() const {
  return Json{{"n_trees", n_trees}, {"max_depth", max_depth}, {"max_features", max_features}, {"seed", seed}};
}

// ---------------------------------------------------------------------------
// Boosting

BoostedModel::BoostedModel(std::vector<double> initial_scores, double learning_rate,
                           std::vector<std::vector<TreeRegressor>> stages, std::size_t n_features,
                           std::vector<double> train_loss)
    : initial_(std::move(initial_scores)),
      learning_rate_(learning_rate),
      stages_(std::move(stages)),
      n_features_(n_features),
      train_loss_(std::move(train_loss)) {
  if (initial_.size() < 2) throw DataError("boosted model needs at least two classes");
  for (const auto& stage : stages_)
    if (stage.size() != initial_.size()) throw DataError("boosting stage must hold one tree per class");
}

void BoostedModel::predict_proba_prefix(std::span<const double> x, std::size_t n_stages,
                                        std::span<double> out) const {
  const std::size_t k = std::min(n_stages, stages_.size());
  for_each_prefix(x, std::span<const std::size_t>(&k, 1),
                  [&](std::size_t, std::span<const double> p) { std::copy(p.begin(), p.end(), out.begin()); });
}

void BoostedModel::predict_proba(std::span<const double> x, std::span<double> out) const {
  predict_proba_prefix(x, stages_.size(), out);
}

Json BoostedModel::to_json() const {
  Json stages = Json::array();
  for (const auto& stage : stages_) {
    Json trees = Json::array();
    for (const auto& t : stage) trees.push_back(t.to_json());
    stages.push_back(std::move(trees));
  }
  return Json{{"type", "gradient_boosting"},
              {"n_features", n_features_},
              {"initial_scores", initial_},
              {"learning_rate", learning_rate_},
              {"train_loss", train_loss_},
              {"stages", std::move(stages)}};
}

BoostedModel BoostedModel::from_json(const Json& j) {
  if (j.at("type") != "gradient_boosting") throw DataError("not a gradient_boosting document");
  std::vector<std::vector<TreeRegressor>> stages;
  for (const auto& s : j.at("stages")) {
    std::vector<TreeRegressor> trees;
    for (const auto& t : s) trees.push_back(TreeRegressor::from_json(t));
    stages.push_back(std::move(trees));
  }
  return BoostedModel(j.at("initial_scores").get<std::vector<double>>(), j.at("learning_rate").get<double>(),
                      std::move(stages), j.at("n_features").get<std::size_t>(),
                      j.value("train_loss", std::vector<double>{}));
}

namespace {

void softmax_row(std::span<const double> scores, std::span<double> out) {
  double mx = scores[0];
  for (const double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) sum += (out[j] = std::exp(scores[j] - mx));
  for (auto& p : out) p /= sum;
}

}  // namespace

BoostedModel fit_gradient_boosting(const Dataset& ds, const BoostingParams& params) {
  if (params.n_trees < 1) throw FitError("boosting needs n_trees >= 1");
  if (!(params.learning_rate > 0.0)) throw FitError("boosting learning_rate must be positive");
  if (ds.n_present_classes() < 2) throw FitError("single-class dataset");

  const std::size_t n = ds.size();
  const auto c = static_cast<std::size_t>(ds.n_classes());
  const auto counts = ds.class_counts();
  // Absent classes get a small pseudo-count so their log-prior stays finite.
  std::vector<double> init(c);
  for (std::size_t k = 0; k < c; ++k)
    init[k] = std::log(std::max(static_cast<double>(counts[k]), 1e-3) / static_cast<double>(n));

  std::vector<double> scores(n * c);
  for (std::size_t i = 0; i < n; ++i) std::copy(init.begin(), init.end(), scores.begin() + i * c);

  std::vector<double> probs(n * c);
  auto refresh = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> p(probs.data() + i * c, c);
      softmax_row(std::span<const double>(scores.data() + i * c, c), p);
      loss -= std::log(std::max(p[static_cast<std::size_t>(ds.label(i))], 1e-300));
    }
    return loss / static_cast<double>(n);
  };

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.seed = params.seed;
  const auto unit = unit_weights(n);
  std::vector<double> residual(n);
  std::vector<std::vector<TreeRegressor>> stages;
  stages.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<double> losses{refresh()};

  for (int m = 0; m < params.n_trees; ++m) {
    std::vector<TreeRegressor> stage;
    stage.reserve(c);
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (ds.label(i) == static_cast<int>(k) ? 1.0 : 0.0) - probs[i * c + k];
      stage.push_back(fit_tree_regressor(ds, residual, unit, tp));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k)
        scores[i * c + k] += params.learning_rate * stage[k].predict(ds.row(i));
    stages.push_back(std::move(stage));
    losses.push_back(refresh());
  }
  return BoostedModel(std::move(init), params.learning_rate, std::move(stages), ds.n_features(),
                      std::move(losses));
}

// ---------------------------------------------------------------------------
// Forest

ForestModel::ForestModel(std::vector<TreeClassifier> trees, std::vector<double> train_accuracy,
                         std::vector<double> oob_accuracy)
    : trees_(std::move(trees)),
      train_accuracy_(std::move(train_accuracy)),
      oob_accuracy_(std::move(oob_accuracy)) {
  if (trees_.empty()) throw DataError("forest needs at least one tree");
  if (train_accuracy_.size() != trees_.size() || oob_accuracy_.size() != trees_.size())
    throw DataError("forest accuracy records must have one entry per tree");
}

void ForestModel::predict_proba(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> p(out.size());
  for (const auto& t : trees_) {
    t.predict_proba(x, p);
    for (std::size_t k = 0; k < p.size(); ++k) out[k] += p[k];
  }
  for (auto& v : out) v /= static_cast<double>(trees_.size());
}

Json ForestModel::to_json() const {
  Json trees = Json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return Json{{"type", "random_forest"},
              {"train_accuracy", train_accuracy_},
              {"oob_accuracy", oob_accuracy_},
              {"trees", std::move(trees)}};
}

ForestModel ForestModel::from_json(const Json& j) {
  if (j.at("type") != "random_forest") throw DataError("not a random_forest document");
  std::vector<TreeClassifier> trees;
  for (const auto& t : j.at("trees")) trees.push_back(TreeClassifier::from_json(t));
  return ForestModel(std::move(trees), j.at("train_accuracy").get<std::vector<double>>(),
                     j.at("oob_accuracy").get<std::vector<double>>());
}

ForestModel fit_random_forest(const Dataset& ds, const ForestParams& params) {
  if (params.n_trees < 1) throw FitError("forest needs n_trees >= 1");
  if (ds.n_present_classes() < 2) throw FitError("single-class dataset");

  const std::size_t n = ds.size();
  const std::size_t d = ds.n_features();
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.max_features = params.max_features != 0
                        ? params.max_features
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

  std::vector<TreeClassifier> trees;
  std::vector<double> train_acc, oob_acc;
  std::vector<double> counts(n);
  for (int t = 0; t < params.n_trees; ++t) {
    const auto ti = static_cast<std::uint64_t>(t);
    std::fill(counts.begin(), counts.end(), 0.0);
    Rng rng(derive_seed(params.seed, "forest/tree", {ti}));
    for (std::size_t k = 0; k < n; ++k) counts[rng.below(n)] += 1.0;
    tp.seed = derive_seed(params.seed, "forest/split", {ti});
    auto tree = fit_tree_classifier(ds, counts, tp);

    std::size_t right = 0, oob_n = 0, oob_right = 0;
    std::vector<double> p(static_cast<std::size_t>(ds.n_classes()));
    for (std::size_t i = 0; i < n; ++i) {
      tree.predict_proba(ds.row(i), p);
      const bool ok = argmax(p) == ds.label(i);
      right += ok ? 1 : 0;
      if (counts[i] == 0.0) {
        ++oob_n;
        oob_right += ok ? 1 : 0;
      }
    }
    const double acc = static_cast<double>(right) / static_cast<double>(n);
    train_acc.push_back(acc);
    oob_acc.push_back(oob_n > 0 ? static_cast<double>(oob_right) / static_cast<double>(oob_n) : acc);
    trees.push_back(std::move(tree));
  }
  return ForestModel(std::move(trees), std::move(train_acc), std::move(oob_acc));
}

// ---------------------------------------------------------------------------
// Graded ensembles

std::vector<double> GradedEvaluation::errors(std::span<const std::size_t> rows) const {
  std::vector<double> wrong(n_graded, 0.0);
  std::size_t count = 0;
  auto tally = [&](std::size_t i) {
    for (std::size_t k = 0; k < n_graded; ++k) wrong[k] += is_correct(i, k) ? 0.0 : 1.0;
    ++count;
  };
  if (rows.empty())
    for (std::size_t i = 0; i < n_rows; ++i) tally(i);
  else
    for (const auto i : rows) tally(i);
  for (auto& v : wrong) v /= static_cast<double>(std::max<std::size_t>(count, 1));
  return wrong;
}

GradedEvaluation GradedEnsemble::evaluate(const Dataset& ds) const {
  const std::size_t n = size();
  const auto c = static_cast<std::size_t>(n_classes());
  GradedEvaluation ev{ds.size(), n, std::vector<double>(ds.size() * n), std::vector<char>(ds.size() * n)};
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    predict_all(ds.row(i), out);
    const auto y = static_cast<std::size_t>(ds.label(i));
    for (std::size_t k = 0; k < n; ++k) {
      const std::span<const double> p(out.data() + k * c, c);
      ev.confidence[i * n + k] = p[y];
      ev.correct[i * n + k] = argmax(p) == ds.label(i) ? 1 : 0;
    }
  }
  return ev;
}

std::vector<double> GradedEnsemble::errors(const Dataset& ds) const { return evaluate(ds).errors(); }

namespace {

std::vector<std::size_t> checkpoints(std::size_t total, int step) {
  if (step <= 0) throw DataError("graded step must be positive");
  std::vector<std::size_t> out;
  for (std::size_t k = static_cast<std::size_t>(step); k < total; k += static_cast<std::size_t>(step))
    out.push_back(k);
  out.push_back(total);
  return out;
}

class PrefixBoosted final : public Classifier {
 public:
  PrefixBoosted(std::shared_ptr<const BoostedModel> m, std::size_t stages) : m_(std::move(m)), stages_(stages) {}
  int n_classes() const override { return m_->n_classes(); }
  std::size_t n_features() const override { return m_->n_features(); }
  void predict_proba(std::span<const double> x, std::span<double> out) const override {
    m_->predict_proba_prefix(x, stages_, out);
  }
  Json to_json() const override { return Json{{"type", "boosting_prefix"}, {"stages", stages_}}; }

 private:
  std::shared_ptr<const BoostedModel> m_;
  std::size_t stages_;
};

class BoostingGrades final : public GradedEnsemble {
 public:
  BoostingGrades(std::shared_ptr<const BoostedModel> m, int step)
      : m_(std::move(m)), step_(step), cuts_(checkpoints(m_->n_stages(), step)) {}

  std::size_t size() const override { return cuts_.size(); }
  int n_classes() const override { return m_->n_classes(); }
  void predict_all(std::span<const double> x, std::span<double> out) const override {
    const auto c = static_cast<std::size_t>(n_classes());
    std::size_t k = 0;
    m_->for_each_prefix(x, cuts_, [&](std::size_t, std::span<const double> p) {
      std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(k * c));
      ++k;
    });
  }
  ClassifierPtr member(std::size_t k) const override { return std::make_shared<PrefixBoosted>(m_, cuts_.at(k)); }
  Json describe() const override {
    return Json{{"source", "gradient_boosting"}, {"step", step_}, {"cutoffs", cuts_}};
  }

 private:
  std::shared_ptr<const BoostedModel> m_;
  int step_;
  std::vector<std::size_t> cuts_;
};

class SubsetForest final : public Classifier {
 public:
  SubsetForest(std::shared_ptr<const ForestModel> m, std::vector<std::size_t> members)
      : m_(std::move(m)), members_(std::move(members)) {}
  int n_classes() const override { return m_->n_classes(); }
  std::size_t n_features() const override { return m_->n_features(); }
  void predict_proba(std::span<const double> x, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> p(out.size());
    for (const auto t : members_) {
      m_->trees()[t].predict_proba(x, p);
      for (std::size_t k = 0; k < p.size(); ++k) out[k] += p[k];
    }
    for (auto& v : out) v /= static_cast<double>(members_.size());
  }
  Json to_json() const override { return Json{{"type", "forest_subset"}, {"members", members_}}; }

 private:
  std::shared_ptr<const ForestModel> m_;
  std::vector<std::size_t> members_;
};

class ForestGrades final : public GradedEnsemble {
 public:
  ForestGrades(std::shared_ptr<const ForestModel> m, int step, TreeOrdering ordering)
      : m_(std::move(m)), step_(step), ordering_(ordering), cuts_(checkpoints(m_->trees().size(), step)) {
    const auto& acc = ordering == TreeOrdering::TrainingAccuracy ? m_->train_accuracy() : m_->oob_accuracy();
    order_.resize(acc.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return acc[a] < acc[b]; });
  }

  std::size_t size() const override { return cuts_.size(); }
  int n_classes() const override { return m_->n_classes(); }
  void predict_all(std::span<const double> x, std::span<double> out) const override {
    const auto c = static_cast<std::size_t>(n_classes());
    std::vector<double> sum(c, 0.0), p(c);
    std::size_t done = 0;
    for (std::size_t k = 0; k < cuts_.size(); ++k) {
      for (; done < cuts_[k]; ++done) {
        m_->trees()[order_[done]].predict_proba(x, p);
        for (std::size_t j = 0; j < c; ++j) sum[j] += p[j];
      }
      for (std::size_t j = 0; j < c; ++j) out[k * c + j] = sum[j] / static_cast<double>(done);
    }
  }
  ClassifierPtr member(std::size_t k) const override {
    return std::make_shared<SubsetForest>(
        m_, std::vector<std::size_t>(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(cuts_.at(k))));
  }
  Json describe() const override {
    return Json{{"source", "random_forest"},
                {"step", step_},
                {"ordering", ordering_ == TreeOrdering::TrainingAccuracy ? "training" : "out_of_bag"},
                {"tree_order", order_},
                {"cutoffs", cuts_}};
  }
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  std::shared_ptr<const ForestModel> m_;
  int step_;
  TreeOrdering ordering_;
  std::vector<std::size_t> cuts_;
  std::vector<std::size_t> order_;
};

class ListGrades final : public GradedEnsemble {
 public:
  explicit ListGrades(std::vector<ClassifierPtr> members) : members_(std::move(members)) {
    if (members_.empty()) throw DataError("graded list must be nonempty");
    for (const auto& m : members_)
      if (m->n_classes() != members_.front()->n_classes())
        throw DataError("graded classifiers disagree on n_classes");
  }
  std::size_t size() const override { return members_.size(); }
  int n_classes() const override { return members_.front()->n_classes(); }
  void predict_all(std::span<const double> x, std::span<double> out) const override {
    const auto c = static_cast<std::size_t>(n_classes());
    for (std::size_t k = 0; k < members_.size(); ++k) members_[k]->predict_proba(x, out.subspan(k * c, c));
  }
  ClassifierPtr member(std::size_t k) const override { return members_.at(k); }
  Json describe() const override { return Json{{"source", "list"}, {"size", members_.size()}}; }

 private:
  std::vector<ClassifierPtr> members_;
};

}  // namespace

GradedPtr graded_from_boosting(std::shared_ptr<const BoostedModel> model, int step) {
  if (step <= 0) throw DataError("graded step must be positive");
  return std::make_shared<BoostingGrades>(std::move(model), step);
}

GradedPtr graded_from_forest(std::shared_ptr<const ForestModel> model, int step, TreeOrdering ordering) {
  if (step <= 0) throw DataError("graded step must be positive");
  return std::make_shared<ForestGrades>(std::move(model), step, ordering);
}

GradedPtr graded_from_list(std::vector<ClassifierPtr> members) {
  return std::make_shared<ListGrades>(std::move(members));
}

double measure_gradedness(const GradedEvaluation& ev) {
  if (ev.n_rows == 0) return 1.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ev.n_rows; ++i) {
    bool chain = true;
    for (std::size_t k = 0; k + 1 < ev.n_graded && chain; ++k)
      chain = ev.conf(i, k) <= ev.conf(i, k + 1) + 1e-12;
    ok += chain ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(ev.n_rows);
}

double measure_gradedness(const GradedEnsemble& graded, const Dataset& ds) {
  return measure_gradedness(graded.evaluate(ds));
}

}  // namespace sratio
