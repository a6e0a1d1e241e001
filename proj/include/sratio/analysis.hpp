#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sratio/classifier.hpp"
#include "sratio/data.hpp"

namespace sratio {

enum class IntervalKind { Normal, StudentT };

struct RunSummary {
  std::string method;
  std::vector<double> errors;  // percentages, one per split
  double mean = 0.0;
  double ci95_halfwidth = 0.0;

  Json to_json() const;
};

/// Mean and 95% half-width (1.96 s / sqrt(R), or the t quantile with R-1
/// degrees of freedom) using the sample standard deviation. Needs R >= 2.
RunSummary summarize(std::span<const double> errors, std::string method = {},
                     IntervalKind kind = IntervalKind::Normal);

/// 100 * #{w_i = 0} / N.
double zero_weight_fraction(std::span<const double> weights);

enum class Bucket { Zero, Top5, Middle };
const char* bucket_name(Bucket b);

struct NeighborPurity {
  Bucket bucket = Bucket::Middle;
  std::size_t members = 0;
  /// Mean purity over bucket members; absent for an empty bucket.
  std::optional<double> purity;
};

/// nu_s / (nu_s + nu_d) * 100 per row, where among the k nearest neighbours
/// (Euclidean on standardized features, self excluded, distance ties by lower
/// index) nu_s share the row's class and nu_d belong to the most frequent
/// other class.
std::vector<double> point_purities(const Dataset& ds, int k);

/// Bucket of each row: zero weight, strictly above the nearest-rank 95th
/// percentile of the positive weights, or everything else.
std::vector<Bucket> weight_buckets(std::span<const double> weights);

/// Mean purity per bucket, in the order Zero, Top5, Middle. Requires N > k.
std::vector<NeighborPurity> neighbor_purity(const Dataset& ds, std::span<const double> weights, int k = 10);

/// 100 * #{|w_full - w_co| / max(w_co, floor) > threshold} / N.
double weight_change_fraction(std::span<const double> full, std::span<const double> complex_only,
                              double threshold = 0.01, double floor = 1e-6);

}  // namespace sratio
