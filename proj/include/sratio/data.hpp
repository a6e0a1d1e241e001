#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sratio {

/// Row-major feature matrix with integer class labels in [0, n_classes).
///
/// Construction validates every invariant (finite features, labels in range,
/// at least one row and one column, n_classes >= 2); afterwards the value is
/// immutable.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::size_t n_features, std::vector<int> labels,
          int n_classes, std::vector<std::string> feature_names = {},
          std::vector<std::string> label_names = {});

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept { return n_features_; }
  int n_classes() const noexcept { return n_classes_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {features_.data() + i * n_features_, n_features_};
  }
  double at(std::size_t i, std::size_t j) const noexcept { return features_[i * n_features_ + j]; }
  int label(std::size_t i) const noexcept { return labels_[i]; }

  std::span<const double> features() const noexcept { return features_; }
  std::span<const int> labels() const noexcept { return labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  /// Original label text per class index (empty when labels were numeric).
  const std::vector<std::string>& label_names() const noexcept { return label_names_; }

  /// Number of distinct labels actually present.
  int n_present_classes() const;
  std::vector<std::size_t> class_counts() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  /// Same features, different labels (n_classes kept).
  Dataset relabel(std::vector<int> labels) const;
  /// Same labels, new feature matrix with the same shape.
  Dataset with_features(std::vector<double> features) const;

 private:
  std::vector<double> features_;
  std::size_t n_features_;
  std::vector<int> labels_;
  int n_classes_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_names_;
};

/// Label column selector: a header name or a zero-based column index.
using ColumnRef = std::variant<std::string, std::size_t>;

/// Reads a comma-separated file. A header row is detected when any non-label
/// cell of the first row is not numeric. Integer labels are used as-is;
/// anything else is mapped to 0..C-1 in order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column,
                 std::optional<int> n_classes = std::nullopt);

/// Writes features then a trailing `label` column, with a header row.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

SplitIndices split_indices(const Dataset& ds, const SplitSpec& spec);
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, const SplitSpec& spec);

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> test_indices(int fold) const;
};

FoldAssignment kfold(const Dataset& ds, int k, std::uint64_t seed);
FoldAssignment kfold(std::size_t n, int k, std::uint64_t seed);

struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stds;

  static constexpr double kStdFloor = 1e-8;

  static ScalerParams fit(const Dataset& ds);
  Dataset transform(const Dataset& ds) const;
  Dataset inverse_transform(const Dataset& ds) const;
  void transform_row(std::span<const double> in, std::span<double> out) const;
};

struct Standardized {
  Dataset train;
  Dataset test;
  ScalerParams params;
};

/// Centers and scales both sets with statistics of `train` only (population std,
/// stds below the floor replaced by 1).
Standardized standardize(const Dataset& train, const Dataset& test);

}  // namespace sratio
