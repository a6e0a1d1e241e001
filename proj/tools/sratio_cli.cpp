// Command-line front end: bench, weights, analyze, synth, verify-bound.

#include <iostream>

#include "CLI11.hpp"
#include "sratio/bench.hpp"
#include "sratio/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCellFailure = 1;
constexpr int kConfigError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample reweighting of simple classifiers from graded complex models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sratio::kVersion);

  std::string config_path, run_dir, out_path, out_dir, gen_name;
  std::size_t n = 1000, samples = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool per_combination = false;
  std::vector<double> betas{1.5, 2.0, 5.0, 10.0};

  auto* bench = app.add_subcommand("bench", "Run the benchmark protocol and write report files");
  bench->add_option("--config", config_path, "JSON config file")->required();
  bench->add_option("--threads", threads, "Worker threads (default: SRATIO_THREADS or all cores)");
  bench->add_option("--out", out_dir, "Override the config's output_dir");

  auto* weights = app.add_subcommand("weights", "Compute SRatio weights on the first split of each combination");
  weights->add_option("--config", config_path, "JSON config file")->required();
  weights->add_option("--threads", threads, "Worker threads");
  weights->add_option("--out", out_dir, "Override the config's output_dir");

  auto* analyze = app.add_subcommand("analyze", "Derive diagnostics from a finished bench run");
  analyze->add_option("--run", run_dir, "Output directory of a bench run")->required();
  analyze->add_flag("--per-combination", per_combination, "Also report neighbor purity per model combination");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  synth->add_option("--name", gen_name, "Generator id")->required();
  synth->add_option("--n", n, "Number of rows");
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--out", out_path, "Output CSV path")->required();

  auto* verify = app.add_subcommand("verify-bound", "Monte Carlo check of the reweighted loss bound");
  verify->add_option("--samples", samples, "Samples per beta");
  verify->add_option("--beta", betas, "Clip levels (repeat or comma-separate)")->delimiter(',');
  verify->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*bench) {
      auto cfg = sratio::BenchConfig::from_file(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto report = sratio::run_benchmark(cfg, threads);
      sratio::write_report(report, cfg.output_dir);
      std::cout << "wrote " << (cfg.output_dir / "report.json").string() << " (config " << cfg.hash() << ", "
                << report.failures << " failed cells)\n";
      for (const auto& s : report.document.at("summaries")) {
        std::cout << "  " << s.at("dataset").get<std::string>() << ' ' << s.at("complex").get<std::string>() << ' '
                  << s.at("simple").get<std::string>() << ' ' << s.at("method").get<std::string>() << ": ";
        if (s.at("mean_error_pct").is_null())
          std::cout << "n/a\n";
        else
          std::cout << s.at("mean_error_pct").get<double>() << " +- " << s.at("ci95_halfwidth").get<double>() << '\n';
      }
      return report.failures == 0 ? kOk : kCellFailure;
    }
    if (*weights) {
      auto cfg = sratio::BenchConfig::from_file(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto failures = sratio::compute_weights(cfg, cfg.output_dir, threads);
      std::cout << "wrote weight reports to " << cfg.output_dir.string() << " (" << failures << " failures)\n";
      return failures == 0 ? kOk : kCellFailure;
    }
    if (*analyze) {
      const auto files = sratio::analyze_run(run_dir, {per_combination});
      for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
      return kOk;
    }
    if (*synth) {
      const auto ds = sratio::make_synthetic(gen_name, n, seed);
      sratio::write_csv(ds, out_path);
      std::cout << "wrote " << out_path << " (" << ds.size() << " rows, " << ds.n_features() << " features, "
                << ds.n_classes() << " classes)\n";
      return kOk;
    }
    if (*verify) {
      const auto results = sratio::bound_sweep(samples, betas, seed);
      std::size_t violations = 0;
      for (const auto& r : results) {
        std::cout << "beta=" << r.beta << " samples=" << r.samples << " violations=" << r.pointwise_violations
                  << " mean_lhs=" << r.aggregate.lhs << " mean_rhs=" << r.aggregate.rhs
                  << (r.aggregate_holds ? "" : " AGGREGATE-VIOLATION") << '\n';
        violations += r.pointwise_violations + (r.aggregate_holds ? 0 : 1);
      }
      std::cout << "total violations: " << violations << '\n';
      return violations == 0 ? kOk : kCellFailure;
    }
  } catch (const sratio::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const sratio::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCellFailure;
  }
  return kOk;
}
