#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sratio/analysis.hpp"
#include "sratio/data.hpp"
#include "sratio/ensembles.hpp"
#include "sratio/linear.hpp"
#include "sratio/transfer.hpp"
#include "sratio/tree.hpp"

namespace sratio {

inline constexpr const char* kVersion = "1.0.0";

/// Known generators: gaussian-blobs-2, gaussian-blobs-3, gaussian-blobs-6,
/// interleaved-moons, waveform-like. Row i has label i mod C.
Dataset make_synthetic(const std::string& name, std::size_t n, std::uint64_t seed);
std::vector<std::string> synthetic_names();

struct DatasetSpec {
  std::string name;
  /// CSV file; empty when `synthetic` is set.
  std::filesystem::path path;
  ColumnRef label = std::size_t{0};
  std::optional<int> n_classes;
  std::string synthetic;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  Dataset load() const;
  Json to_json() const;
};

struct ComplexSpec {
  std::string kind;  // "boosting" | "forest"
  BoostingParams boosting;
  ForestParams forest;
  TreeOrdering ordering = TreeOrdering::TrainingAccuracy;

  std::string name() const { return kind; }
  Json to_json() const;
};

struct SimpleSpec {
  std::string kind;  // "tree" | "svm"
  TreeParams tree;
  SvmParams svm;

  std::string name() const { return kind; }
  std::unique_ptr<Learner> learner(std::uint64_t seed) const;
  std::unique_ptr<RegressionLearner> regression_learner(std::uint64_t seed) const;
  Json to_json() const;
};

enum class Method { Standard, ConfWeight, Distill1, Distill2, SRatio };
const char* method_name(Method m);
Method parse_method(const std::string& s);

struct BenchConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<ComplexSpec> complex;
  std::vector<SimpleSpec> simple;
  std::vector<Method> methods;
  int splits = 10;
  double train_fraction = 0.7;
  bool stratified = true;
  bool standardize = true;
  int cv_folds = 10;
  std::vector<double> gamma_grid{0.0, 0.01, 0.02, 0.05, 0.1};
  std::vector<double> beta_grid = SRatioConfig::default_beta_grid();
  int graded_step = 10;
  bool refit_simple_per_fold = true;
  bool diagnostics = true;
  int neighbor_k = 10;
  double change_threshold = 0.01;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "sratio-out";

  /// Relative dataset paths resolve against `base_dir`. Throws ConfigError.
  static BenchConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
  static BenchConfig from_file(const std::filesystem::path& path);
  /// Normalized document with every default spelled out.
  Json to_json() const;
  /// Hex digest of the normalized document (output_dir excluded).
  std::string hash() const;
  void validate() const;
};

struct ExperimentReport {
  Json document;
  std::size_t failures = 0;

  /// Document without the timestamp field, dumped canonically.
  std::string canonical() const;
};

/// Runs every (dataset x split) job on a pool of `threads` workers (0 reads
/// SRATIO_THREADS, falling back to the hardware concurrency). Cell failures are
/// recorded, never thrown.
ExperimentReport run_benchmark(const BenchConfig& cfg, unsigned threads = 0);

/// report.json, report.csv and report.md under `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// SRatio weights for every (dataset x complex x simple) on the first split;
/// one JSON document per combination. Returns the number of failures.
std::size_t compute_weights(const BenchConfig& cfg, const std::filesystem::path& dir, unsigned threads = 0);

struct AnalyzeOptions {
  bool per_combination = false;
};

/// Reads <run>/report.json and writes diagnostic CSV and gnuplot-ready .dat
/// files next to it. Throws ConfigError when the report is missing.
std::vector<std::filesystem::path> analyze_run(const std::filesystem::path& run_dir, const AnalyzeOptions& opts = {});

unsigned resolve_threads(unsigned requested);
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace sratio
