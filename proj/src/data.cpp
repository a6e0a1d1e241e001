#include "sratio/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

Dataset::Dataset(std::vector<double> features, std::size_t n_features, std::vector<int> labels,
                 int n_classes, std::vector<std::string> feature_names,
                 std::vector<std::string> label_names)
    : features_(std::move(features)),
      n_features_(n_features),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      feature_names_(std::move(feature_names)),
      label_names_(std::move(label_names)) {
  if (labels_.empty()) throw DataError("empty dataset");
  if (n_features_ == 0) throw DataError("dataset has no feature columns");
  if (features_.size() != labels_.size() * n_features_)
    throw DataError("feature matrix size does not match labels x n_features");
  if (n_classes_ < 2) throw DataError("n_classes must be at least 2");
  for (const int l : labels_)
    if (l < 0 || l >= n_classes_) throw DataError("label out of range [0, n_classes)");
  for (const double v : features_)
    if (!std::isfinite(v)) throw DataError("non-finite feature");
  if (!feature_names_.empty() && feature_names_.size() != n_features_)
    throw DataError("feature_names length does not match n_features");
}

int Dataset::n_present_classes() const {
  const auto counts = class_counts();
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
  for (const int l : labels_) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> f;
  f.reserve(indices.size() * n_features_);
  std::vector<int> l;
  l.reserve(indices.size());
  for (const auto i : indices) {
    const auto r = row(i);
    f.insert(f.end(), r.begin(), r.end());
    l.push_back(labels_[i]);
  }
  return Dataset(std::move(f), n_features_, std::move(l), n_classes_, feature_names_, label_names_);
}

Dataset Dataset::relabel(std::vector<int> labels) const {
  return Dataset(features_, n_features_, std::move(labels), n_classes_, feature_names_,
                 label_names_);
}

Dataset Dataset::with_features(std::vector<double> features) const {
  return Dataset(std::move(features), n_features_, labels_, n_classes_, feature_names_,
                 label_names_);
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (const char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column,
                 std::optional<int> n_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw DataError("empty dataset: " + path.string());

  const std::size_t n_cols = rows.front().size();
  if (n_cols < 2) throw DataError("CSV needs at least one feature column and a label column");

  // Header detection needs the label column index first when it is given by index.
  std::optional<std::size_t> label_idx;
  if (const auto* idx = std::get_if<std::size_t>(&label_column)) label_idx = *idx;

  bool has_header = false;
  if (label_idx) {
    for (std::size_t j = 0; j < n_cols; ++j)
      if (j != *label_idx && !parse_double(rows.front()[j])) has_header = true;
  } else {
    has_header = true;
  }

  std::vector<std::string> header;
  if (has_header) {
    header = rows.front();
    rows.erase(rows.begin());
  }
  if (!label_idx) {
    const auto& name = std::get<std::string>(label_column);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("label column not found: " + name);
    label_idx = static_cast<std::size_t>(it - header.begin());
  }
  if (*label_idx >= n_cols) throw DataError("label column index out of range");
  if (rows.empty()) throw DataError("empty dataset: " + path.string());

  const std::size_t d = n_cols - 1;
  std::vector<double> features;
  features.reserve(rows.size() * d);
  std::vector<std::string> raw_labels;
  raw_labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != n_cols)
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(n_cols));
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (j == *label_idx) continue;
      const auto v = parse_double(cells[j]);
      if (!v) throw DataError("non-numeric feature cell '" + cells[j] + "' at row " +
                              std::to_string(r + 1));
      if (!std::isfinite(*v)) throw DataError("non-finite feature at row " + std::to_string(r + 1));
      features.push_back(*v);
    }
    raw_labels.push_back(cells[*label_idx]);
  }

  bool integral = true;
  for (const auto& s : raw_labels) {
    const auto v = parse_int(s);
    if (!v || *v < 0 || *v > 1'000'000) {
      integral = false;
      break;
    }
  }

  std::vector<int> labels;
  std::vector<std::string> label_names;
  labels.reserve(raw_labels.size());
  if (integral) {
    for (const auto& s : raw_labels) labels.push_back(static_cast<int>(*parse_int(s)));
  } else {
    std::map<std::string, int> mapping;
    for (const auto& s : raw_labels) {
      auto [it, inserted] = mapping.try_emplace(s, static_cast<int>(label_names.size()));
      if (inserted) label_names.push_back(s);
      labels.push_back(it->second);
    }
  }

  const int max_label = *std::max_element(labels.begin(), labels.end());
  const int c = n_classes.value_or(max_label + 1);
  if (c < max_label + 1) throw DataError("n_classes is smaller than max(label) + 1");

  std::vector<std::string> feature_names;
  if (has_header)
    for (std::size_t j = 0; j < n_cols; ++j)
      if (j != *label_idx) feature_names.push_back(header[j]);

  Dataset ds(std::move(features), d, std::move(labels), std::max(c, 2), std::move(feature_names),
             std::move(label_names));
  if (ds.n_present_classes() < 2) throw DataError("single-class dataset: " + path.string());
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  out.precision(17);
  for (std::size_t j = 0; j < ds.n_features(); ++j)
    out << (ds.feature_names().empty() ? "f" + std::to_string(j) : ds.feature_names()[j]) << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const double v : ds.row(i)) out << v << ',';
    out << ds.label(i) << '\n';
  }
}

SplitIndices split_indices(const Dataset& ds, const SplitSpec& spec) {
  const std::size_t n = ds.size();
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw DataError("train_fraction must lie in (0, 1)");
  if (n < 2) throw DataError("degenerate split: need at least two examples");

  std::vector<char> in_train(n, 0);
  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes()));
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& members = by_class[c];
      Rng(derive_seed(spec.seed, "split/class", {c})).shuffle(std::span<std::size_t>(members));
      const auto take = static_cast<std::size_t>(
          std::floor(spec.train_fraction * static_cast<double>(members.size()) + 0.5));
      for (std::size_t k = 0; k < std::min(take, members.size()); ++k) in_train[members[k]] = 1;
    }
  } else {
    const auto order = permutation(n, derive_seed(spec.seed, "split"));
    const auto take = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));
    for (std::size_t k = 0; k < std::min(take, n); ++k) in_train[order[k]] = 1;
  }

  SplitIndices out;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.train : out.test).push_back(i);

  // Rounding can empty a side on tiny inputs; move one example over deterministically.
  if (out.train.empty() || out.test.empty()) {
    auto& from = out.train.empty() ? out.test : out.train;
    auto& to = out.train.empty() ? out.train : out.test;
    const auto pick = from[Rng(derive_seed(spec.seed, "split/fix")).below(from.size())];
    from.erase(std::find(from.begin(), from.end(), pick));
    to.push_back(pick);
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds, spec);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

FoldAssignment kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("kfold requires k >= 2");
  if (static_cast<std::size_t>(k) > n) throw DataError("kfold requires k <= N");
  FoldAssignment out{std::vector<int>(n, 0), k};
  const auto order = permutation(n, derive_seed(seed, "kfold"));
  for (std::size_t pos = 0; pos < n; ++pos)
    out.fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return out;
}

FoldAssignment kfold(const Dataset& ds, int k, std::uint64_t seed) { return kfold(ds.size(), k, seed); }

ScalerParams ScalerParams::fit(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.n_features();
  ScalerParams p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.means[j] += ds.at(i, j);
  for (auto& m : p.means) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = ds.at(i, j) - p.means[j];
      p.stds[j] += dv * dv;
    }
  for (auto& s : p.stds) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < kStdFloor) s = 1.0;
  }
  return p;
}

void ScalerParams::transform_row(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - means[j]) / stds[j];
}

Dataset ScalerParams::transform(const Dataset& ds) const {
  if (ds.n_features() != means.size()) throw DataError("scaler dimension mismatch");
  std::vector<double> f(ds.features().begin(), ds.features().end());
  const std::size_t d = ds.n_features();
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) f[i * d + j] = (f[i * d + j] - means[j]) / stds[j];
  return ds.with_features(std::move(f));
}

Dataset ScalerParams::inverse_transform(const Dataset& ds) const {
  if (ds.n_features() != means.size()) throw DataError("scaler dimension mismatch");
  std::vector<double> f(ds.features().begin(), ds.features().end());
  const std::size_t d = ds.n_features();
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) f[i * d + j] = f[i * d + j] * stds[j] + means[j];
  return ds.with_features(std::move(f));
}

Standardized standardize(const Dataset& train, const Dataset& test) {
  auto params = ScalerParams::fit(train);
  auto tr = params.transform(train);
  auto te = params.transform(test);
  return {std::move(tr), std::move(te), std::move(params)};
}

}  // namespace sratio
