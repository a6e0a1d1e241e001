#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "sratio/analysis.hpp"
#include "sratio/bench.hpp"
#include "sratio/error.hpp"
#include "sratio/transfer.hpp"

using namespace sratio;

namespace {

// Feature 0 holds the row index so callables can look rows up.
Dataset indexed(std::vector<int> labels, int c = 2) {
  std::vector<double> f(labels.size());
  std::iota(f.begin(), f.end(), 0.0);
  return Dataset(std::move(f), 1, std::move(labels), c);
}

// Puts `conf(i)` on row i's true class and spreads the rest evenly.
ClassifierPtr true_class(const Dataset& ds, std::function<double(std::size_t)> conf) {
  std::vector<int> y(ds.labels().begin(), ds.labels().end());
  const int c = ds.n_classes();
  return std::make_shared<const oracle::FnClassifier>(c, 1, [y, c, conf](std::span<const double> x, std::span<double> out) {
    const auto i = static_cast<std::size_t>(x[0]);
    const double p = conf(i);
    for (auto& v : out) v = (1.0 - p) / (c - 1);
    out[static_cast<std::size_t>(y[i])] = p;
  });
}

Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    f.push_back((c ? 2.0 : -2.0) + 0.4 * rng.normal());
    f.push_back(rng.normal());
    y[i] = c;
  }
  return Dataset(std::move(f), 2, std::move(y), 2);
}

// Trains normally on unit weights, fails on anything else.
class UnitOnlyLearner final : public Learner {
 public:
  ClassifierPtr fit(const Dataset& ds, std::span<const double> w) const override {
    for (double v : w)
      if (v != 1.0) throw FitError("boom");
    return TreeLearner(TreeParams{}).fit(ds, w);
  }
  std::string name() const override { return "unit-only"; }
  Json params() const override { return Json::object(); }
};

}  // namespace

TEST_CASE("sratio weights: ratio identity") {
  const auto ds = indexed({0, 1, 0, 1, 1, 0});
  const auto s = true_class(ds, [](std::size_t i) { return 0.3 + 0.1 * static_cast<double>(i); });
  const auto g = graded_from_list({s, s});
  const auto r = sratio_weights(*g, *s, ds, 0.0, 10.0);
  CHECK(r.active_set == std::vector<std::size_t>{0, 1});
  for (double w : r.weights) CHECK(w == 1.0);
}

TEST_CASE("sratio weights: hand evaluation and clipping") {
  const auto ds = indexed({0, 1});
  const auto simple = true_class(ds, [](std::size_t i) { return i == 0 ? 0.4 : 0.05; });
  const auto z1 = true_class(ds, [](std::size_t) { return 0.8; });
  const auto z2 = true_class(ds, [](std::size_t i) { return i == 0 ? 0.9 : 0.4; });
  const auto g = graded_from_list({z1, z2});
  const auto r = sratio_weights(*g, *simple, ds, 0.5, 10.0);
  CHECK(r.simple_error == 1.0);
  CHECK(r.graded_errors == std::vector<double>{0.0, 0.5});
  CHECK(r.active_set == std::vector<std::size_t>{0, 1});
  CHECK(r.weights[0] == doctest::Approx(2.125));
  // Row 1 has ratio 0.6 / 0.05 = 12 > 10.
  CHECK(r.weights[1] == 0.0);
  CHECK(r.zero_fraction == 0.5);
  CHECK(zero_weight_fraction(r.weights) == 100.0 * r.zero_fraction);

  // gamma 0.75 keeps only z1: 0.8 / 0.4 = 2 and 0.8 / 0.05 = 16 -> clipped.
  const auto r2 = sratio_weights(*g, *simple, ds, 0.75, 10.0);
  CHECK(r2.active_set == std::vector<std::size_t>{0});
  CHECK(r2.weights[0] == doctest::Approx(2.0));
  CHECK(r2.weights[1] == 0.0);
  CHECK_THROWS_AS(sratio_weights(*g, *simple, ds, 0.0, 0.5), ConfigError);
}

TEST_CASE("sratio weights: empty active set falls back to unit weights") {
  const auto ds = indexed({0, 1, 1});
  const auto s = true_class(ds, [](std::size_t) { return 0.9; });
  const auto g = graded_from_list({s});
  const auto r = sratio_weights(*g, *s, ds, 0.5, 2.0);
  CHECK(r.active_set.empty());
  CHECK(r.weights == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(r.zero_fraction == 0.0);
}

TEST_CASE("sratio weights: clip monotonicity and complex-only consistency") {
  const auto ds = make_synthetic("gaussian-blobs-3", 300, 3);
  BoostingParams bp;
  bp.n_trees = 30;
  const auto m = std::make_shared<const BoostedModel>(fit_gradient_boosting(ds, bp));
  const auto g = graded_from_boosting(m, 10);
  TreeParams tp;
  tp.max_depth = 2;
  const auto simple = TreeLearner(tp).fit_unweighted(ds);
  WeightReport prev;
  bool first = true;
  for (double beta : {1.0, 1.5, 2.0, 3.0, 10.0, 1e9}) {
    const auto r = sratio_weights(*g, *simple, ds, 0.0, beta);
    for (double w : r.weights) {
      CHECK(std::isfinite(w));
      CHECK(w >= 0.0);
    }
    if (!first)
      for (std::size_t i = 0; i < ds.size(); ++i)
        if (prev.weights[i] > 0.0) CHECK(r.weights[i] == prev.weights[i]);
    prev = r;
    first = false;
  }

  // A simple model that is certain of the truth leaves only the numerator.
  const auto ev = g->evaluate(ds);
  std::vector<double> ones(ds.size(), 1.0);
  const auto r = sratio_weights_from(ev, {}, ones, 0.0, 0.0, 1e9);
  const auto co = complex_only_weights(ev, {}, r.active_set);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(r.weights[i] == doctest::Approx(co[i]).epsilon(1e-15));
  CHECK(weight_change_fraction(r.weights, co) == 0.0);
}

TEST_CASE("sratio_train: fallback identity, single cell, failures") {
  const auto ds = make_synthetic("gaussian-blobs-3", 240, 9);
  BoostingParams bp;
  bp.n_trees = 30;
  const auto m = std::make_shared<const BoostedModel>(fit_gradient_boosting(ds, bp));
  const auto g = graded_from_boosting(m, 10);
  const TreeLearner learner(TreeParams{});
  const auto standard = learner.fit_unweighted(ds);

  SRatioConfig cfg;
  cfg.gamma_grid = {2.0};
  cfg.beta_grid = {3.0};
  const auto res = sratio_train(*g, learner, ds, cfg);
  CHECK(res.report.active_set.empty());
  CHECK(res.report.gamma == 2.0);
  CHECK(res.report.beta == 3.0);
  CHECK(res.cv.size() <= 1);
  CHECK(*std::dynamic_pointer_cast<const TreeClassifier>(res.model) ==
        *std::dynamic_pointer_cast<const TreeClassifier>(standard));

  SRatioConfig grid;
  grid.gamma_grid = {0.0, 0.05};
  grid.beta_grid = {1.5, 4.0};
  grid.cv_folds = 3;
  const auto r2 = sratio_train(*g, learner, ds, grid);
  CHECK(r2.cv.size() == 4);
  double best = 1e9;
  for (const auto& c : r2.cv) best = std::min(best, c.mean_error);
  CHECK(std::ranges::any_of(r2.cv, [&](const CvCell& c) {
    return c.gamma == r2.report.gamma && c.beta == r2.report.beta && c.mean_error == best;
  }));
  const auto again = sratio_train(*g, learner, ds, grid);
  CHECK(again.report.weights == r2.report.weights);

  SRatioConfig reweighting;
  reweighting.gamma_grid = {0.0};
  reweighting.beta_grid = {10.0};
  // A memorizing graded classifier beats the tree, so I is nonempty and weights move off 1.
  std::vector<int> y(ds.labels().begin(), ds.labels().end());
  const ClassifierPtr memo = std::make_shared<const oracle::FnClassifier>(
      3, ds.n_features(), [&ds, y](std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.05);
        for (std::size_t i = 0; i < ds.size(); ++i)
          if (ds.at(i, 0) == x[0]) out[static_cast<std::size_t>(y[i])] = 0.9;
      });
  try {
    sratio_train(*graded_from_list({memo}), UnitOnlyLearner{}, ds, reweighting);
    FAIL("expected a FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  SRatioConfig empty;
  empty.beta_grid.clear();
  CHECK_THROWS_AS(sratio_train(*g, learner, ds, empty), ConfigError);
}

TEST_CASE("sratio_train: 2-blob benchmark, sratio <= standard over 10 splits") {
  const auto full = make_synthetic("gaussian-blobs-2", 2000, 7);
  double standard = 0.0, sratio = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto [tr0, te0] = train_test_split(full, {0.7, derive_seed(0, "split", {0, r}), true});
    const auto st = standardize(tr0, te0);
    const auto m = std::make_shared<const BoostedModel>(fit_gradient_boosting(st.train, BoostingParams{}));
    const auto g = graded_from_boosting(m, 10);
    const TreeLearner learner(TreeParams{});
    standard += error_rate(*learner.fit_unweighted(st.train), st.test);
    sratio += error_rate(*sratio_train(*g, learner, st.train, SRatioConfig{}).model, st.test);
  }
  MESSAGE("standard " << standard * 10 << "%  sratio " << sratio * 10 << "%");
  CHECK(sratio <= standard);
}

TEST_CASE("confweight") {
  const auto ds = indexed({0, 1, 1, 0});
  CHECK(confweight_weights(*true_class(ds, [](std::size_t) { return 1.0; }), ds) == std::vector<double>(4, 1.0));
  CHECK(confweight_weights(*true_class(ds, [](std::size_t) { return 0.5; }), ds) == std::vector<double>(4, 0.5));
  const auto blobs = make_synthetic("gaussian-blobs-3", 200, 1);
  BoostingParams bp;
  bp.n_trees = 20;
  for (double w : confweight_weights(fit_gradient_boosting(blobs, bp), blobs)) {
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("distill proxy 1") {
  const auto ds = separable(120, 2);
  const TreeLearner learner(TreeParams{});
  // Perfect complex model: the true labels, looked up by feature values.
  std::vector<int> y(ds.labels().begin(), ds.labels().end());
  const oracle::FnClassifier truth(2, 2, [&](std::span<const double> x, std::span<double> out) {
    int l = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.at(i, 0) == x[0] && ds.at(i, 1) == x[1]) l = y[i];
    out[0] = l == 0 ? 1.0 : 0.0;
    out[1] = 1.0 - out[0];
  });
  const auto d1 = distill_proxy1(truth, learner, ds);
  const auto standard = learner.fit_unweighted(ds);
  CHECK(*std::dynamic_pointer_cast<const TreeClassifier>(d1) == *std::dynamic_pointer_cast<const TreeClassifier>(standard));

  const oracle::FnClassifier flip(2, 2, [&](std::span<const double> x, std::span<double> out) {
    std::vector<double> t(2);
    truth.predict_proba(x, t);
    out[0] = t[1];
    out[1] = t[0];
  });
  const auto flipped = distill_proxy1(flip, learner, ds);
  CHECK(error_rate(*flipped, ds) == doctest::Approx(1.0 - error_rate(*standard, ds)));

  const oracle::FnClassifier constant(2, 2, [](std::span<const double>, std::span<double> out) {
    out[0] = out[1] = 0.5;
  });
  CHECK_THROWS_AS(distill_proxy1(constant, learner, ds), FitError);
}

TEST_CASE("distill proxy 2") {
  const auto ds = separable(120, 4);
  const TreeLearner learner(TreeParams{});
  TreeParams rp;
  const TreeRegressionLearner reg(rp);
  std::vector<int> y(ds.labels().begin(), ds.labels().end());
  const oracle::FnClassifier onehot(2, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] < 0.0 ? 1.0 : 0.0;
    out[1] = 1.0 - out[0];
  });
  const auto d2 = distill_proxy2(onehot, reg, ds);
  const auto d1 = distill_proxy1(onehot, learner, ds);
  const auto* vote = dynamic_cast<const RegressorVoteClassifier*>(d2.get());
  REQUIRE(vote != nullptr);
  CHECK(vote->regressors().size() == 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(d2->predict(ds.row(i)) == d1->predict(ds.row(i)));
    const auto p = d2->predict_proba(ds.row(i));
    CHECK(p[0] + p[1] == doctest::Approx(1.0));
    // Complementary targets give complementary regressors.
    CHECK(vote->regressors()[0]->predict(ds.row(i)) + vote->regressors()[1]->predict(ds.row(i)) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  const oracle::FnClassifier fixed(2, 2, [](std::span<const double>, std::span<double> out) {
    out[0] = 0.7;
    out[1] = 0.3;
  });
  const auto c = distill_proxy2(fixed, reg, ds);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(c->predict(ds.row(i)) == 0);

  const auto svr = distill_proxy2(onehot, SvrLearner(SvmParams{}), ds);
  CHECK(error_rate(*svr, ds) < 0.05);
}

TEST_CASE("bound check: hand values and sweep") {
  const std::vector<double> pt{0.5}, pc{0.9}, ps{0.3};
  const auto b = bound_check(pt, pc, ps, 10.0);
  CHECK(b.lhs == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(b.rhs == doctest::Approx(3.0 * std::log(2.0) - std::log(3.0) + std::log(10.0)).epsilon(1e-14));

  const std::vector<double> a{0.2, 0.6, 0.9}, s{0.3, 0.5, 0.7};
  const auto eq = bound_check(a, s, s, 1.0);
  CHECK(eq.rhs == doctest::Approx(eq.lhs).epsilon(1e-14));

  CHECK_THROWS_AS(bound_check(std::vector<double>{1.0}, pc, ps, 2.0), DataError);
  CHECK_THROWS_AS(bound_check(std::vector<double>{0.0}, pc, ps, 2.0), DataError);
  CHECK_THROWS_AS(bound_check(pt, pc, std::vector<double>{0.3, 0.4}, 2.0), DataError);
  CHECK_THROWS_AS(bound_check(pt, pc, ps, 0.9), ConfigError);

  const std::vector<double> betas{1.0, 1.5, 2.0, 10.0};
  for (const auto& r : bound_sweep(20000, betas, 3)) {
    CHECK(r.pointwise_violations == 0);
    CHECK(r.aggregate_holds);
    CHECK(r.aggregate.lhs <= r.aggregate.rhs + 1e-12);
  }
}

TEST_CASE("weight report json") {
  const auto ds = indexed({0, 1});
  const auto s = true_class(ds, [](std::size_t) { return 0.6; });
  const auto r = sratio_weights(*graded_from_list({s}), *s, ds, 0.0, 2.0);
  const auto j = r.to_json();
  CHECK(j.at("weights").size() == 2);
  CHECK(j.contains("active_set"));
  CHECK(j.contains("zero_fraction"));
}
