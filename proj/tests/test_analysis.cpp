#include <algorithm>
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

// Purity by explicit enumeration: standardize, sort every other point by
// (distance, index), count classes among the first k.
std::vector<double> purity_oracle(const Dataset& ds, int k) {
  const auto z = ScalerParams::fit(ds).transform(ds);
  std::vector<double> out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::size_t f = 0; f < z.n_features(); ++f) d += (z.at(i, f) - z.at(j, f)) * (z.at(i, f) - z.at(j, f));
      cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> counts(static_cast<std::size_t>(z.n_classes()), 0);
    for (int t = 0; t < k; ++t) counts[static_cast<std::size_t>(z.label(cand[static_cast<std::size_t>(t)].second))]++;
    const int same = counts[static_cast<std::size_t>(z.label(i))];
    int other = 0;
    for (int c = 0; c < z.n_classes(); ++c)
      if (c != z.label(i)) other = std::max(other, counts[static_cast<std::size_t>(c)]);
    out.push_back(100.0 * same / (same + other));
  }
  return out;
}

}  // namespace

TEST_CASE("summarize: hand values") {
  const auto c = summarize(std::vector<double>{5, 5, 5}, "m");
  CHECK(c.mean == 5.0);
  CHECK(c.ci95_halfwidth == 0.0);
  CHECK(c.method == "m");
  const auto two = summarize(std::vector<double>{0, 10});
  CHECK(two.mean == 5.0);
  CHECK(two.ci95_halfwidth == doctest::Approx(9.8).epsilon(1e-12));
  const auto t = summarize(std::vector<double>{0, 10}, "", IntervalKind::StudentT);
  CHECK(t.ci95_halfwidth == doctest::Approx(12.7062047362 * 5.0).epsilon(1e-9));
  CHECK_THROWS_AS(summarize(std::vector<double>{1}), DataError);
}

TEST_CASE("summarize: permutation invariance") {
  std::vector<double> e{3.1, 0.2, 7.7, 5.5, 1.0, 9.9, 4.4};
  const auto a = summarize(e);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto perm = permutation(e.size(), s);
    std::vector<double> f;
    for (auto i : perm) f.push_back(e[i]);
    const auto b = summarize(f);
    CHECK(a.mean == b.mean);
    CHECK(a.ci95_halfwidth == b.ci95_halfwidth);
  }
}

TEST_CASE("zero weight fraction") {
  CHECK(zero_weight_fraction(std::vector<double>(10, 1.0)) == 0.0);
  std::vector<double> w(200, 1.0);
  w[17] = 0.0;
  CHECK(zero_weight_fraction(w) == doctest::Approx(0.5));
}

TEST_CASE("purity: hand cases") {
  // x = 0, 1, 3 with labels 0, 0, 1 and k = 2: every point sees the other two.
  const Dataset three({0.0, 1.0, 3.0}, 1, {0, 0, 1}, 2);
  CHECK(point_purities(three, 2) == std::vector<double>{50.0, 50.0, 0.0});

  // Eleven points of one class around the origin: purity 100 everywhere.
  std::vector<double> f;
  for (int i = 0; i < 11; ++i) f.push_back(i);
  const Dataset same(f, 1, std::vector<int>(11, 0), 2);
  for (double p : point_purities(same, 10)) CHECK(p == 100.0);

  // Point 0 at the center, five same-class and five other-class neighbours.
  const Dataset half({0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5}, 1, {0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  CHECK(point_purities(half, 10)[0] == 50.0);
  CHECK_THROWS_AS(point_purities(three, 3), DataError);
}

TEST_CASE("purity: matches enumeration on random sets") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    Rng rng(s);
    const std::size_t n = 5 + static_cast<std::size_t>(rng.below(20));
    std::vector<double> f(n * 2);
    for (auto& v : f) v = static_cast<double>(rng.below(4));  // many distance ties
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(3));
    y[0] = 0;
    y[1] = 1;
    const Dataset ds(f, 2, y, 3);
    const int k = 1 + static_cast<int>(rng.below(std::min<std::size_t>(n - 1, 10)));
    const auto got = point_purities(ds, k);
    const auto want = purity_oracle(ds, k);
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("weight buckets") {
  std::vector<double> w(100);
  std::iota(w.begin(), w.end(), 1.0);
  auto b = weight_buckets(w);
  CHECK(std::count(b.begin(), b.end(), Bucket::Top5) == 5);
  CHECK(b[95] == Bucket::Top5);
  CHECK(b[94] == Bucket::Middle);

  w[0] = 0.0;
  b = weight_buckets(w);
  CHECK(b[0] == Bucket::Zero);
  CHECK(std::count(b.begin(), b.end(), Bucket::Zero) == 1);

  const auto u = weight_buckets(std::vector<double>(40, 1.0));
  CHECK(std::all_of(u.begin(), u.end(), [](Bucket x) { return x == Bucket::Middle; }));

  const auto ds = make_synthetic("gaussian-blobs-2", 40, 1);
  const auto np = neighbor_purity(ds, std::vector<double>(40, 1.0), 5);
  REQUIRE(np.size() == 3);
  CHECK(np[0].bucket == Bucket::Zero);
  CHECK(!np[0].purity.has_value());
  CHECK(!np[1].purity.has_value());
  CHECK(np[2].members == 40);
  CHECK(np[2].purity.has_value());
  CHECK(std::string(bucket_name(Bucket::Top5)) != bucket_name(Bucket::Middle));
}

TEST_CASE("weight change fraction") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  CHECK(weight_change_fraction(a, a) == 0.0);
  CHECK(weight_change_fraction(std::vector<double>{1.0, 3.0, 3.0, 4.0}, a) == 25.0);
  CHECK(weight_change_fraction(std::vector<double>{1.0, 2.01, 3.0, 4.0}, a) == 0.0);
  CHECK_THROWS_AS(weight_change_fraction(a, std::vector<double>{1.0}), DataError);
}

TEST_CASE("purity ordering on blob data with sratio weights") {
  const auto ds = make_synthetic("gaussian-blobs-3", 1000, 7);
  const auto st = standardize(ds, ds);
  const auto m = std::make_shared<const BoostedModel>(fit_gradient_boosting(st.train, BoostingParams{}));
  const auto g = graded_from_boosting(m, 10);
  const auto res = sratio_train(*g, TreeLearner(TreeParams{}), st.train, SRatioConfig{});
  const auto np = neighbor_purity(st.train, res.report.weights, 10);
  for (const auto& b : np)
    MESSAGE(std::string(bucket_name(b.bucket)) << ": n=" << b.members << " purity=" << (b.purity ? *b.purity : -1.0));
  REQUIRE(np[1].purity.has_value());
  REQUIRE(np[2].purity.has_value());
  CHECK(*np[2].purity >= *np[1].purity);
  if (np[0].purity) CHECK(*np[1].purity >= *np[0].purity);
}
