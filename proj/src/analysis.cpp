#include "sratio/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "sratio/error.hpp"

namespace sratio {

Json RunSummary::to_json() const {
  return Json{{"method", method}, {"errors", errors}, {"mean", mean}, {"ci95_halfwidth", ci95_halfwidth}};
}

RunSummary summarize(std::span<const double> errors, std::string method, IntervalKind kind) {
  const std::size_t r = errors.size();
  if (r < 2) throw DataError("summarize needs at least two runs");
  RunSummary s;
  s.method = std::move(method);
  s.errors.assign(errors.begin(), errors.end());
  // Sum in sorted order so the result does not depend on run order.
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(r);
  double ss = 0.0;
  for (const double e : sorted) ss += (e - s.mean) * (e - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(r - 1));
  double z = 1.96;
  if (kind == IntervalKind::StudentT)
    z = boost::math::quantile(boost::math::students_t(static_cast<double>(r - 1)), 0.975);
  s.ci95_halfwidth = z * sd / std::sqrt(static_cast<double>(r));
  return s;
}

double zero_weight_fraction(std::span<const double> weights) {
  if (weights.empty()) return 0.0;
  const auto zeros = std::count(weights.begin(), weights.end(), 0.0);
  return 100.0 * static_cast<double>(zeros) / static_cast<double>(weights.size());
}

const char* bucket_name(Bucket b) {
  switch (b) {
    case Bucket::Zero: return "zero";
    case Bucket::Top5: return "top5";
    case Bucket::Middle: return "middle";
  }
  return "?";
}

std::vector<double> point_purities(const Dataset& ds, int k) {
  const std::size_t n = ds.size();
  if (k < 1 || static_cast<std::size_t>(k) >= n) throw DataError("neighbor purity needs 1 <= k < N");
  const auto scaled = ScalerParams::fit(ds).transform(ds);
  const std::size_t d = ds.n_features();
  const auto kk = static_cast<std::size_t>(k);

  std::vector<double> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  std::vector<int> votes(static_cast<std::size_t>(ds.n_classes()));
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    const auto xi = scaled.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = scaled.row(j);
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) s += (xi[f] - xj[f]) * (xi[f] - xj[f]);
      dist.emplace_back(s, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t m = 0; m < kk; ++m) ++votes[static_cast<std::size_t>(ds.label(dist[m].second))];
    const auto own = static_cast<std::size_t>(ds.label(i));
    int other = 0;
    for (std::size_t c = 0; c < votes.size(); ++c)
      if (c != own) other = std::max(other, votes[c]);
    const double same = votes[own];
    out[i] = 100.0 * same / (same + other);
  }
  return out;
}

std::vector<Bucket> weight_buckets(std::span<const double> weights) {
  std::vector<double> positive;
  for (const double w : weights)
    if (w > 0.0) positive.push_back(w);
  std::sort(positive.begin(), positive.end());
  double cut = std::numeric_limits<double>::infinity();
  if (!positive.empty()) {
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(positive.size())));
    cut = positive[std::max<std::size_t>(rank, 1) - 1];
  }
  std::vector<Bucket> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    out[i] = weights[i] == 0.0 ? Bucket::Zero : weights[i] > cut ? Bucket::Top5 : Bucket::Middle;
  return out;
}

std::vector<NeighborPurity> neighbor_purity(const Dataset& ds, std::span<const double> weights, int k) {
  if (weights.size() != ds.size()) throw DataError("weights do not match dataset size");
  const auto purity = point_purities(ds, k);
  const auto buckets = weight_buckets(weights);
  std::array<double, 3> sum{};
  std::array<std::size_t, 3> count{};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto b = static_cast<std::size_t>(buckets[i]);
    sum[b] += purity[i];
    ++count[b];
  }
  std::vector<NeighborPurity> out;
  for (const Bucket b : {Bucket::Zero, Bucket::Top5, Bucket::Middle}) {
    const auto idx = static_cast<std::size_t>(b);
    NeighborPurity np{b, count[idx], std::nullopt};
    if (count[idx] > 0) np.purity = sum[idx] / static_cast<double>(count[idx]);
    out.push_back(np);
  }
  return out;
}

double weight_change_fraction(std::span<const double> full, std::span<const double> complex_only,
                              double threshold, double floor) {
  if (full.size() != complex_only.size()) throw DataError("weight vectors differ in length");
  if (full.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < full.size(); ++i)
    if (std::abs(full[i] - complex_only[i]) / std::max(complex_only[i], floor) > threshold) ++changed;
  return 100.0 * static_cast<double>(changed) / static_cast<double>(full.size());
}

}  // namespace sratio
