#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "sratio/error.hpp"
#include "sratio/linear.hpp"

using namespace sratio;

namespace {

// Two gaussian clouds with a wide margin along the first axis.
Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    f.push_back((c == 0 ? -2.0 : 2.0) + 0.3 * rng.normal());
    f.push_back(rng.normal());
    y[i] = c;
  }
  return Dataset(std::move(f), 2, std::move(y), 2);
}

}  // namespace

TEST_CASE("svm: separable data reaches zero training error") {
  const auto ds = separable(100, 1);
  SvmParams p;
  p.reg_lambda = 1e-4;
  const auto m = fit_linear_svm(ds, unit_weights(ds.size()), p);
  CHECK(error_rate(m, ds) == 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto pr = m.predict_proba(ds.row(i));
    CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : pr) CHECK(v >= LinearModel::kProbabilityFloor);
  }
}

TEST_CASE("svm: deterministic given seed") {
  const auto ds = separable(60, 2);
  SvmParams p;
  p.seed = 9;
  p.epochs = 20;
  const auto a = fit_linear_svm(ds, unit_weights(60), p), b = fit_linear_svm(ds, unit_weights(60), p);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("svm: errors") {
  const auto ds = separable(10, 3);
  CHECK_THROWS_AS(fit_linear_svm(ds, std::vector<double>(10, 0.0), SvmParams{}), FitError);
  std::vector<double> only0(10, 0.0);
  for (std::size_t i = 0; i < 10; i += 2) only0[i] = 1.0;
  CHECK_THROWS_WITH_AS(fit_linear_svm(ds, only0, SvmParams{}), doctest::Contains("single effective class"), FitError);
}

TEST_CASE("svm: objective ignores zero-weight rows and matches replication") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto sc = oracle::random_small_case(700 + s, 30, 3, 4);
    const auto rep = oracle::replicate(sc.ds, sc.weights);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < sc.ds.size(); ++i)
      if (sc.weights[i] > 0.0) keep.push_back(i);
    const auto kept = sc.ds.subset(keep);
    std::vector<double> kept_w;
    for (auto i : keep) kept_w.push_back(sc.weights[i]);
    std::vector<double> targets(sc.ds.size()), rep_targets;
    for (std::size_t i = 0; i < sc.ds.size(); ++i) {
      targets[i] = 0.3 * sc.ds.at(i, 0) - 1.0;
      for (int r = 0; r < static_cast<int>(sc.weights[i]); ++r) rep_targets.push_back(targets[i]);
    }
    std::vector<double> kept_t;
    for (auto i : keep) kept_t.push_back(targets[i]);

    Rng rng(s);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> theta(sc.ds.n_features());
      for (auto& v : theta) v = rng.uniform(-2, 2);
      const double b = rng.uniform(-1, 1);
      for (int c = 0; c < sc.ds.n_classes(); ++c) {
        const double h = hinge_objective(sc.ds, sc.weights, c, theta, b, 0.01);
        CHECK(std::abs(h - hinge_objective(rep, unit_weights(rep.size()), c, theta, b, 0.01)) <= 1e-9);
        CHECK(std::abs(h - hinge_objective(kept, kept_w, c, theta, b, 0.01)) <= 1e-9);
      }
      const double e = insensitive_objective(sc.ds, targets, sc.weights, theta, b, 0.01, 0.1);
      CHECK(std::abs(e - insensitive_objective(rep, rep_targets, unit_weights(rep.size()), theta, b, 0.01, 0.1)) <= 1e-9);
      CHECK(std::abs(e - insensitive_objective(kept, kept_t, kept_w, theta, b, 0.01, 0.1)) <= 1e-9);
    }
  }
}

TEST_CASE("svm: probability output rules") {
  const PlattScaling cal{1.5, 0.0};
  // Class 1 uses the mirrored margin of class 0.
  const LinearModel m(2, 1, {1.0, -1.0}, {0.0, 0.0}, {cal, cal});
  const auto p = m.predict_proba(std::vector<double>{0.7});
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
  CHECK(p[0] > p[1]);
  CHECK(p[0] == doctest::Approx(cal(0.7)).epsilon(1e-5));

  const LinearModel z(3, 2, std::vector<double>(6, 0.0), {0.0, 0.0, 0.0}, std::vector<PlattScaling>(3, cal));
  for (double v : z.predict_proba(std::vector<double>{4.0, -2.0})) CHECK(v == doctest::Approx(1.0 / 3.0));

  const LinearModel far(2, 1, {50.0, -50.0}, {0.0, 0.0}, {cal, cal});
  const auto q = far.predict_proba(std::vector<double>{10.0});
  CHECK(q[1] >= LinearModel::kProbabilityFloor);
  CHECK(q[0] <= 1.0);
}

TEST_CASE("platt: recovers the sign of the relation") {
  std::vector<double> margins;
  std::vector<char> pos;
  for (int i = -20; i <= 20; ++i) {
    margins.push_back(i / 10.0);
    pos.push_back(i > 0 ? 1 : 0);
  }
  const auto cal = PlattScaling::fit(margins, pos, std::vector<double>(margins.size(), 1.0));
  CHECK(cal.a > 0.0);
  CHECK(cal(2.0) > 0.9);
  CHECK(cal(-2.0) < 0.1);
}

TEST_CASE("svr: linear and constant targets") {
  Rng rng(4);
  std::vector<double> f(200);
  for (auto& v : f) v = rng.normal();
  const Dataset ds(f, 2, std::vector<int>(100, 0), 2);
  std::vector<double> lin(100), con(100, 3.0);
  for (std::size_t i = 0; i < 100; ++i) lin[i] = 2.0 * ds.at(i, 0) - ds.at(i, 1) + 0.5;
  SvmParams p;
  p.reg_lambda = 1e-5;
  const auto l = fit_linear_svr(ds, lin, unit_weights(100), p);
  double loss = 0.0;
  for (std::size_t i = 0; i < 100; ++i) loss += std::abs(l.predict(ds.row(i)) - lin[i]);
  CHECK(loss / 100 < 0.05);

  const auto c = fit_linear_svr(ds, con, unit_weights(100), p);
  CHECK(c.bias() == doctest::Approx(3.0).epsilon(0.02));
  for (double w : c.weights()) CHECK(std::abs(w) < 0.05);
  CHECK_THROWS_AS(fit_linear_svr(ds, con, std::vector<double>(100, 0.0), p), FitError);
}

TEST_CASE("linear: normalize_mean_one and json round trip") {
  const auto w = normalize_mean_one(std::vector<double>{0.0, 2.0, 4.0, 2.0});
  CHECK(w == std::vector<double>{0.0, 1.0, 2.0, 1.0});
  const auto ds = separable(40, 5);
  SvmParams p;
  p.epochs = 10;
  const auto m = fit_linear_svm(ds, unit_weights(40), p);
  const auto back = LinearModel::from_json(Json::parse(m.to_json().dump()));
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.predict_proba(ds.row(i)) == m.predict_proba(ds.row(i)));
  const auto r = fit_linear_svr(ds, std::vector<double>(40, 1.0), unit_weights(40), p);
  CHECK(LinearRegressor::from_json(r.to_json()).predict(ds.row(0)) == r.predict(ds.row(0)));
}
