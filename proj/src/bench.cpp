#include "sratio/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

Dataset DatasetSpec::load() const {
  if (!synthetic.empty()) return make_synthetic(synthetic, n, seed);
  return load_csv(path, label, n_classes);
}

Json DatasetSpec::to_json() const {
  Json j{{"name", name}};
  if (!synthetic.empty()) {
    j["synthetic"] = synthetic;
    j["n"] = n;
    j["seed"] = seed;
  } else {
    j["path"] = path.string();
    if (const auto* s = std::get_if<std::string>(&label))
      j["label"] = *s;
    else
      j["label"] = std::get<std::size_t>(label);
    if (n_classes) j["n_classes"] = *n_classes;
  }
  return j;
}

Json ComplexSpec::to_json() const {
  if (kind == "boosting") {
    auto j = boosting.to_json();
    j.erase("seed");
    j["type"] = kind;
    return j;
  }
  auto j = forest.to_json();
  j.erase("seed");
  j["type"] = kind;
  j["ordering"] = ordering == TreeOrdering::TrainingAccuracy ? "training" : "out_of_bag";
  return j;
}

std::unique_ptr<Learner> SimpleSpec::learner(std::uint64_t seed) const {
  if (kind == "tree") {
    auto t = tree;
    t.seed = seed;
    return std::make_unique<TreeLearner>(t);
  }
  auto p = svm;
  p.seed = seed;
  return std::make_unique<SvmLearner>(p);
}

std::unique_ptr<RegressionLearner> SimpleSpec::regression_learner(std::uint64_t seed) const {
  if (kind == "tree") {
    auto t = tree;
    t.seed = seed;
    return std::make_unique<TreeRegressionLearner>(t);
  }
  auto p = svm;
  p.seed = seed;
  return std::make_unique<SvrLearner>(p);
}

Json SimpleSpec::to_json() const {
  Json j = kind == "tree" ? tree.to_json() : svm.to_json();
  j.erase("seed");
  j["type"] = kind;
  return j;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Standard: return "standard";
    case Method::ConfWeight: return "confweight";
    case Method::Distill1: return "distill1";
    case Method::Distill2: return "distill2";
    case Method::SRatio: return "sratio";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (const auto m : {Method::Standard, Method::ConfWeight, Method::Distill1, Method::Distill2, Method::SRatio})
    if (s == method_name(m)) return m;
  throw ConfigError("unknown method: " + s);
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

BenchConfig BenchConfig::from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"datasets", "complex", "simple", "methods", "splits", "train_fraction", "stratified",
                  "standardize", "cv_folds", "gamma_grid", "beta_grid", "graded_step", "refit_simple_per_fold",
                  "diagnostics", "neighbor_k", "change_threshold", "seed", "output_dir"},
                 "config");
  BenchConfig cfg;
  try {
    for (const auto& d : j.value("datasets", Json::array())) {
      reject_unknown(d, {"name", "path", "label", "n_classes", "synthetic", "n", "seed"}, "dataset");
      DatasetSpec ds;
      ds.synthetic = get_or<std::string>(d, "synthetic", "");
      if (ds.synthetic.empty()) {
        if (!d.contains("path")) throw ConfigError("dataset needs 'path' or 'synthetic'");
        fs::path p = d.at("path").get<std::string>();
        ds.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        if (d.contains("label")) {
          if (d.at("label").is_string())
            ds.label = d.at("label").get<std::string>();
          else
            ds.label = d.at("label").get<std::size_t>();
        }
        if (d.contains("n_classes")) ds.n_classes = d.at("n_classes").get<int>();
      } else {
        ds.n = get_or<std::size_t>(d, "n", 1000);
        ds.seed = get_or<std::uint64_t>(d, "seed", 0);
      }
      ds.name = get_or<std::string>(d, "name", ds.synthetic.empty() ? ds.path.stem().string() : ds.synthetic);
      cfg.datasets.push_back(std::move(ds));
    }
    for (const auto& c : j.value("complex", Json::array())) {
      ComplexSpec cs;
      cs.kind = c.is_string() ? c.get<std::string>() : get_or<std::string>(c, "type", "");
      const Json params = c.is_object() ? c : Json::object();
      if (cs.kind == "boosting") {
        reject_unknown(params, {"type", "n_trees", "learning_rate", "max_depth"}, "boosting");
        cs.boosting.n_trees = get_or(params, "n_trees", cs.boosting.n_trees);
        cs.boosting.learning_rate = get_or(params, "learning_rate", cs.boosting.learning_rate);
        cs.boosting.max_depth = get_or(params, "max_depth", cs.boosting.max_depth);
      } else if (cs.kind == "forest") {
        reject_unknown(params, {"type", "n_trees", "max_depth", "max_features", "ordering"}, "forest");
        cs.forest.n_trees = get_or(params, "n_trees", cs.forest.n_trees);
        cs.forest.max_depth = get_or(params, "max_depth", cs.forest.max_depth);
        cs.forest.max_features = get_or(params, "max_features", cs.forest.max_features);
        const auto ord = get_or<std::string>(params, "ordering", "training");
        if (ord == "training")
          cs.ordering = TreeOrdering::TrainingAccuracy;
        else if (ord == "out_of_bag")
          cs.ordering = TreeOrdering::OutOfBagAccuracy;
        else
          throw ConfigError("forest ordering must be 'training' or 'out_of_bag'");
      } else {
        throw ConfigError("complex model type must be 'boosting' or 'forest'");
      }
      cfg.complex.push_back(cs);
    }
    for (const auto& s : j.value("simple", Json::array())) {
      SimpleSpec ss;
      ss.kind = s.is_string() ? s.get<std::string>() : get_or<std::string>(s, "type", "");
      const Json params = s.is_object() ? s : Json::object();
      if (ss.kind == "tree") {
        reject_unknown(params, {"type", "max_depth", "min_weight_leaf", "laplace_alpha", "max_features"}, "tree");
        ss.tree.max_depth = get_or(params, "max_depth", ss.tree.max_depth);
        ss.tree.min_weight_leaf = get_or(params, "min_weight_leaf", ss.tree.min_weight_leaf);
        ss.tree.laplace_alpha = get_or(params, "laplace_alpha", ss.tree.laplace_alpha);
        ss.tree.max_features = get_or(params, "max_features", ss.tree.max_features);
      } else if (ss.kind == "svm") {
        reject_unknown(params, {"type", "reg_lambda", "epochs", "learning_rate", "epsilon_insensitive"}, "svm");
        ss.svm.reg_lambda = get_or(params, "reg_lambda", ss.svm.reg_lambda);
        ss.svm.epochs = get_or(params, "epochs", ss.svm.epochs);
        ss.svm.learning_rate = get_or(params, "learning_rate", ss.svm.learning_rate);
        ss.svm.epsilon_insensitive = get_or(params, "epsilon_insensitive", ss.svm.epsilon_insensitive);
      } else {
        throw ConfigError("simple model type must be 'tree' or 'svm'");
      }
      cfg.simple.push_back(ss);
    }
    for (const auto& m : j.value("methods", Json::array())) cfg.methods.push_back(parse_method(m.get<std::string>()));
    cfg.splits = get_or(j, "splits", cfg.splits);
    cfg.train_fraction = get_or(j, "train_fraction", cfg.train_fraction);
    cfg.stratified = get_or(j, "stratified", cfg.stratified);
    cfg.standardize = get_or(j, "standardize", cfg.standardize);
    cfg.cv_folds = get_or(j, "cv_folds", cfg.cv_folds);
    cfg.gamma_grid = get_or(j, "gamma_grid", cfg.gamma_grid);
    cfg.beta_grid = get_or(j, "beta_grid", cfg.beta_grid);
    cfg.graded_step = get_or(j, "graded_step", cfg.graded_step);
    cfg.refit_simple_per_fold = get_or(j, "refit_simple_per_fold", cfg.refit_simple_per_fold);
    cfg.diagnostics = get_or(j, "diagnostics", cfg.diagnostics);
    cfg.neighbor_k = get_or(j, "neighbor_k", cfg.neighbor_k);
    cfg.change_threshold = get_or(j, "change_threshold", cfg.change_threshold);
    cfg.seed = get_or(j, "seed", cfg.seed);
    if (j.contains("output_dir")) {
      fs::path out = j.at("output_dir").get<std::string>();
      cfg.output_dir = out.is_absolute() || base_dir.empty() ? out : base_dir / out;
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BenchConfig BenchConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, path.parent_path());
}

void BenchConfig::validate() const {
  if (datasets.empty()) throw ConfigError("config needs at least one dataset");
  if (complex.empty()) throw ConfigError("config needs at least one complex model");
  if (simple.empty()) throw ConfigError("config needs at least one simple model");
  if (methods.empty()) throw ConfigError("config needs at least one method");
  if (splits < 2) throw ConfigError("splits must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
  if (gamma_grid.empty() || beta_grid.empty()) throw ConfigError("gamma_grid and beta_grid must be nonempty");
  for (const double b : beta_grid)
    if (!(b >= 1.0)) throw ConfigError("every beta must be >= 1");
  if (graded_step < 1) throw ConfigError("graded_step must be >= 1");
  if (neighbor_k < 1) throw ConfigError("neighbor_k must be >= 1");
  std::vector<std::string> names;
  for (const auto& d : datasets) names.push_back(d.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw ConfigError("dataset names must be unique");
}

Json BenchConfig::to_json() const {
  Json ds = Json::array(), cs = Json::array(), ss = Json::array(), ms = Json::array();
  for (const auto& d : datasets) ds.push_back(d.to_json());
  for (const auto& c : complex) cs.push_back(c.to_json());
  for (const auto& s : simple) ss.push_back(s.to_json());
  for (const auto m : methods) ms.push_back(method_name(m));
  return Json{{"datasets", ds},
              {"complex", cs},
              {"simple", ss},
              {"methods", ms},
              {"splits", splits},
              {"train_fraction", train_fraction},
              {"stratified", stratified},
              {"standardize", standardize},
              {"cv_folds", cv_folds},
              {"gamma_grid", gamma_grid},
              {"beta_grid", beta_grid},
              {"graded_step", graded_step},
              {"refit_simple_per_fold", refit_simple_per_fold},
              {"diagnostics", diagnostics},
              {"neighbor_k", neighbor_k},
              {"change_threshold", change_threshold},
              {"seed", seed}};
}

std::string BenchConfig::hash() const {
  const auto text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = mix64(h);
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string ExperimentReport::canonical() const {
  auto copy = document;
  copy.erase("timestamp");
  return copy.dump(2);
}

// ---------------------------------------------------------------------------
// Work pool

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SRATIO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

struct Cell {
  std::size_t dataset = 0, complex = 0, simple = 0, method = 0;
  int split = 0;
  std::optional<double> error_pct;
  std::string failure;
  Json details = Json::object();
};

struct Fitted {
  ClassifierPtr model;
  GradedPtr graded;
};

Fitted fit_complex(const ComplexSpec& spec, const Dataset& train, std::uint64_t seed, int step) {
  if (spec.kind == "boosting") {
    auto p = spec.boosting;
    p.seed = seed;
    auto m = std::make_shared<const BoostedModel>(fit_gradient_boosting(train, p));
    return {m, graded_from_boosting(m, step)};
  }
  auto p = spec.forest;
  p.seed = seed;
  auto m = std::make_shared<const ForestModel>(fit_random_forest(train, p));
  return {m, graded_from_forest(m, step, spec.ordering)};
}

Json purity_json(const std::vector<NeighborPurity>& buckets) {
  Json j = Json::object();
  for (const auto& b : buckets)
    j[bucket_name(b.bucket)] = Json{{"members", b.members},
                                    {"purity", b.purity ? Json(*b.purity) : Json(nullptr)}};
  return j;
}

// Everything for one (dataset, split): the complex models are fit once and shared
// by all simple models and methods.
std::vector<Cell> run_job(const BenchConfig& cfg, std::size_t di, const Dataset& full, int r) {
  std::vector<Cell> cells;
  const auto ur = static_cast<std::uint64_t>(r);
  const SplitSpec spec{cfg.train_fraction, derive_seed(cfg.seed, "split", {di, ur}), cfg.stratified};
  auto [train, test] = train_test_split(full, spec);
  if (cfg.standardize) {
    auto s = standardize(train, test);
    train = std::move(s.train);
    test = std::move(s.test);
  }

  SRatioConfig sc;
  sc.gamma_grid = cfg.gamma_grid;
  sc.beta_grid = cfg.beta_grid;
  sc.cv_folds = cfg.cv_folds;
  sc.refit_simple_per_fold = cfg.refit_simple_per_fold;

  // Standard simple models do not depend on the complex model.
  std::vector<ClassifierPtr> standard(cfg.simple.size());
  std::vector<std::string> standard_failure(cfg.simple.size());
  for (std::size_t si = 0; si < cfg.simple.size(); ++si) {
    try {
      standard[si] = cfg.simple[si].learner(derive_seed(cfg.seed, "simple", {di, ur, si}))->fit_unweighted(train);
    } catch (const std::exception& e) {
      standard_failure[si] = e.what();
    }
  }

  std::optional<Dataset> scaled_train;  // for neighbor purity
  for (std::size_t ci = 0; ci < cfg.complex.size(); ++ci) {
    std::optional<Fitted> cx;
    std::string cx_failure;
    Json cx_details = Json::object();
    try {
      cx = fit_complex(cfg.complex[ci], train, derive_seed(cfg.seed, "complex", {di, ur, ci}), cfg.graded_step);
      cx_details["complex_test_error_pct"] = 100.0 * error_rate(*cx->model, test);
    } catch (const std::exception& e) {
      cx_failure = std::string("complex model: ") + e.what();
    }

    for (std::size_t si = 0; si < cfg.simple.size(); ++si) {
      const auto seed = derive_seed(cfg.seed, "simple", {di, ur, si});
      const auto learner = cfg.simple[si].learner(seed);
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        Cell cell{di, ci, si, mi, r, std::nullopt, {}, Json::object()};
        const Method method = cfg.methods[mi];
        try {
          if (!standard[si]) throw FitError("standard simple model: " + standard_failure[si]);
          if (method != Method::Standard && !cx) throw FitError(cx_failure);
          ClassifierPtr model;
          switch (method) {
            case Method::Standard:
              model = standard[si];
              break;
            case Method::ConfWeight:
              model = learner->fit(train, confweight_weights(*cx->model, train));
              break;
            case Method::Distill1:
              model = distill_proxy1(*cx->model, *learner, train);
              break;
            case Method::Distill2:
              model = distill_proxy2(*cx->model, *cfg.simple[si].regression_learner(seed), train);
              break;
            case Method::SRatio: {
              sc.seed = derive_seed(cfg.seed, "sratio", {di, ur, ci, si});
              const auto res = sratio_train(*cx->graded, *learner, train, sc);
              model = res.model;
              const auto& rep = res.report;
              cell.details["selected_gamma"] = rep.gamma;
              cell.details["selected_beta"] = rep.beta;
              cell.details["active_set"] = rep.active_set;
              cell.details["zero_weight_pct"] = zero_weight_fraction(rep.weights);
              if (cfg.diagnostics) {
                const auto ev = cx->graded->evaluate(train);
                const auto co = complex_only_weights(ev, {}, rep.active_set);
                cell.details["weight_change_pct"] = weight_change_fraction(rep.weights, co, cfg.change_threshold);
                cell.details["gradedness"] = measure_gradedness(ev);
                cell.details["graded_errors"] = rep.graded_errors;
                cell.details["simple_train_error"] = rep.simple_error;
                if (train.size() > static_cast<std::size_t>(cfg.neighbor_k))
                  cell.details["neighbor_purity"] = purity_json(neighbor_purity(train, rep.weights, cfg.neighbor_k));
              }
              break;
            }
          }
          cell.error_pct = 100.0 * error_rate(*model, test);
          if (method != Method::Standard) cell.details.update(cx_details);
        } catch (const std::exception& e) {
          cell.failure = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace

ExperimentReport run_benchmark(const BenchConfig& cfg, unsigned threads) {
  cfg.validate();
  const unsigned workers = resolve_threads(threads);

  // Datasets load up front; a dataset that fails to load fails all of its cells.
  std::vector<std::optional<Dataset>> data(cfg.datasets.size());
  std::vector<std::string> load_failure(cfg.datasets.size());
  Json ds_info = Json::array();
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    Json info{{"name", cfg.datasets[d].name}};
    try {
      data[d] = cfg.datasets[d].load();
      info["n"] = data[d]->size();
      info["d"] = data[d]->n_features();
      info["n_classes"] = data[d]->n_classes();
      info["label_names"] = data[d]->label_names();
    } catch (const std::exception& e) {
      load_failure[d] = e.what();
      info["error"] = e.what();
    }
    ds_info.push_back(std::move(info));
  }

  const std::size_t n_jobs = cfg.datasets.size() * static_cast<std::size_t>(cfg.splits);
  std::vector<std::vector<Cell>> results(n_jobs);
  parallel_for(n_jobs, workers, [&](std::size_t job) {
    const std::size_t d = job / static_cast<std::size_t>(cfg.splits);
    const int r = static_cast<int>(job % static_cast<std::size_t>(cfg.splits));
    if (data[d]) {
      results[job] = run_job(cfg, d, *data[d], r);
      return;
    }
    for (std::size_t ci = 0; ci < cfg.complex.size(); ++ci)
      for (std::size_t si = 0; si < cfg.simple.size(); ++si)
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
          results[job].push_back(Cell{d, ci, si, mi, r, std::nullopt, "dataset: " + load_failure[d], Json::object()});
  });

  std::vector<Cell> cells;
  for (auto& v : results)
    for (auto& c : v) cells.push_back(std::move(c));
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.dataset, a.complex, a.simple, a.method, a.split) <
           std::tie(b.dataset, b.complex, b.simple, b.method, b.split);
  });

  ExperimentReport report;
  Json cell_docs = Json::array();
  Json summaries = Json::array();
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, std::vector<double>> grouped;
  for (const auto& c : cells) {
    Json j{{"dataset", cfg.datasets[c.dataset].name},
           {"complex", cfg.complex[c.complex].name()},
           {"simple", cfg.simple[c.simple].name()},
           {"method", method_name(cfg.methods[c.method])},
           {"split", c.split}};
    if (c.error_pct) {
      j["error_pct"] = *c.error_pct;
      grouped[{c.dataset, c.complex, c.simple, c.method}].push_back(*c.error_pct);
    } else {
      j["failure"] = c.failure;
      ++report.failures;
    }
    if (!c.details.empty()) j["details"] = c.details;
    cell_docs.push_back(std::move(j));
  }
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (std::size_t ci = 0; ci < cfg.complex.size(); ++ci)
      for (std::size_t si = 0; si < cfg.simple.size(); ++si)
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
          Json s{{"dataset", cfg.datasets[d].name},
                 {"complex", cfg.complex[ci].name()},
                 {"simple", cfg.simple[si].name()},
                 {"method", method_name(cfg.methods[mi])}};
          const auto it = grouped.find({d, ci, si, mi});
          const std::size_t ok = it == grouped.end() ? 0 : it->second.size();
          s["completed_splits"] = ok;
          if (ok >= 2) {
            const auto sum = summarize(it->second, method_name(cfg.methods[mi]));
            s["mean_error_pct"] = sum.mean;
            s["ci95_halfwidth"] = sum.ci95_halfwidth;
          } else {
            s["mean_error_pct"] = nullptr;
            s["ci95_halfwidth"] = nullptr;
          }
          summaries.push_back(std::move(s));
        }

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  report.document = Json{{"tool", "sratio"},
                         {"version", kVersion},
                         {"config_hash", cfg.hash()},
                         {"seed", cfg.seed},
                         {"timestamp", ts.str()},
                         {"config", cfg.to_json()},
                         {"datasets", ds_info},
                         {"summaries", summaries},
                         {"cells", cell_docs},
                         {"failures", report.failures}};
  return report;
}

namespace {

std::string fmt(double v, int precision = 2) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(precision) << v;
  return o.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_report(const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& doc = report.document;
  const std::string hash = doc.at("config_hash");
  write_text(dir / "report.json", doc.dump(2) + "\n");

  std::ostringstream csv;
  csv << "config_hash,dataset,complex,simple,method,completed_splits,mean_error_pct,ci95_halfwidth\n";
  for (const auto& s : doc.at("summaries")) {
    csv << hash << ',' << s.at("dataset").get<std::string>() << ',' << s.at("complex").get<std::string>() << ','
        << s.at("simple").get<std::string>() << ',' << s.at("method").get<std::string>() << ','
        << s.at("completed_splits").get<std::size_t>() << ',';
    if (s.at("mean_error_pct").is_null())
      csv << ",\n";
    else
      csv << fmt(s.at("mean_error_pct").get<double>(), 4) << ',' << fmt(s.at("ci95_halfwidth").get<double>(), 4) << '\n';
  }
  write_text(dir / "report.csv", csv.str());

  // One row per (dataset, complex, simple); one column per method, "mean ± ci".
  std::vector<std::string> methods = doc.at("config").at("methods").get<std::vector<std::string>>();
  std::ostringstream md;
  md << "<!-- config_hash: " << hash << " -->\n\n";
  md << "| Dataset | Complex | Simple |";
  for (const auto& m : methods) md << ' ' << m << " |";
  md << "\n|---|---|---|";
  for (std::size_t k = 0; k < methods.size(); ++k) md << "---|";
  md << '\n';
  const auto& sums = doc.at("summaries");
  for (std::size_t k = 0; k < sums.size(); k += methods.size()) {
    md << "| " << sums[k].at("dataset").get<std::string>() << " | " << sums[k].at("complex").get<std::string>()
       << " | " << sums[k].at("simple").get<std::string>() << " |";
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& s = sums[k + m];
      if (s.at("mean_error_pct").is_null())
        md << " n/a |";
      else
        md << ' ' << fmt(s.at("mean_error_pct").get<double>()) << " ± "
           << fmt(s.at("ci95_halfwidth").get<double>()) << " |";
    }
    md << '\n';
  }
  write_text(dir / "report.md", md.str());
}

std::size_t compute_weights(const BenchConfig& cfg, const fs::path& dir, unsigned threads) {
  cfg.validate();
  fs::create_directories(dir);
  const std::string hash = cfg.hash();
  const std::size_t per_ds = cfg.complex.size() * cfg.simple.size();
  std::atomic<std::size_t> failures{0};

  std::vector<std::optional<Dataset>> data(cfg.datasets.size());
  std::vector<std::string> load_failure(cfg.datasets.size());
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    try {
      data[d] = cfg.datasets[d].load();
    } catch (const std::exception& e) {
      load_failure[d] = e.what();
    }
  }

  parallel_for(cfg.datasets.size() * per_ds, resolve_threads(threads), [&](std::size_t job) {
    const std::size_t d = job / per_ds;
    const std::size_t ci = (job % per_ds) / cfg.simple.size();
    const std::size_t si = job % cfg.simple.size();
    const std::string stem = cfg.datasets[d].name + "_" + cfg.complex[ci].name() + "_" + cfg.simple[si].name();
    Json doc{{"config_hash", hash},
             {"dataset", cfg.datasets[d].name},
             {"complex", cfg.complex[ci].name()},
             {"simple", cfg.simple[si].name()},
             {"split", 0}};
    try {
      if (!data[d]) throw DataError(load_failure[d]);
      const SplitSpec spec{cfg.train_fraction, derive_seed(cfg.seed, "split", {d, 0}), cfg.stratified};
      auto [train, test] = train_test_split(*data[d], spec);
      if (cfg.standardize) train = standardize(train, test).train;
      const auto cx = fit_complex(cfg.complex[ci], train, derive_seed(cfg.seed, "complex", {d, 0, ci}), cfg.graded_step);
      const auto learner = cfg.simple[si].learner(derive_seed(cfg.seed, "simple", {d, 0, si}));
      SRatioConfig sc;
      sc.gamma_grid = cfg.gamma_grid;
      sc.beta_grid = cfg.beta_grid;
      sc.cv_folds = cfg.cv_folds;
      sc.refit_simple_per_fold = cfg.refit_simple_per_fold;
      sc.seed = derive_seed(cfg.seed, "sratio", {d, 0, ci, si});
      const auto res = sratio_train(*cx.graded, *learner, train, sc);
      doc["report"] = res.report.to_json();
      Json cv = Json::array();
      for (const auto& c : res.cv) cv.push_back({{"gamma", c.gamma}, {"beta", c.beta}, {"mean_error", c.mean_error}});
      doc["cv"] = std::move(cv);
      doc["graded"] = cx.graded->describe();
    } catch (const std::exception& e) {
      doc["failure"] = e.what();
      ++failures;
    }
    write_text(dir / ("weights_" + stem + ".json"), doc.dump(2) + "\n");
  });
  return failures.load();
}

// ---------------------------------------------------------------------------
// Analysis of a finished run

namespace {

struct Series {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  std::pair<double, double> mean_ci() const {
    if (values.size() >= 2) {
      const auto s = summarize(values);
      return {s.mean, s.ci95_halfwidth};
    }
    return {values.empty() ? 0.0 : values.front(), 0.0};
  }
};

}  // namespace

std::vector<fs::path> analyze_run(const fs::path& run_dir, const AnalyzeOptions& opts) {
  const auto report_path = run_dir / "report.json";
  std::ifstream in(report_path);
  if (!in) throw ConfigError("missing prior artifacts: " + report_path.string());
  Json doc;
  try {
    in >> doc;
  } catch (const Json::exception& e) {
    throw ConfigError("report.json is not valid JSON: " + std::string(e.what()));
  }
  const std::string hash = doc.value("config_hash", "");

  using Key3 = std::tuple<std::string, std::string, std::string>;
  std::map<Key3, Series> zero, change_by_combo;
  std::map<std::pair<std::string, std::string>, Series> change, graded;
  std::map<std::string, Series> purity_pooled;
  std::map<std::pair<Key3, std::string>, Series> purity_combo;
  std::vector<Key3> order;

  for (const auto& c : doc.at("cells")) {
    if (c.at("method") != "sratio" || !c.contains("details")) continue;
    const auto& det = c.at("details");
    const Key3 key{c.at("dataset"), c.at("complex"), c.at("simple")};
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    if (det.contains("zero_weight_pct")) zero[key].add(det.at("zero_weight_pct"));
    if (det.contains("weight_change_pct")) {
      change[{std::get<0>(key), std::get<2>(key)}].add(det.at("weight_change_pct"));
      change_by_combo[key].add(det.at("weight_change_pct"));
    }
    if (det.contains("gradedness")) graded[{std::get<0>(key), std::get<1>(key)}].add(det.at("gradedness"));
    if (det.contains("neighbor_purity"))
      for (const auto& [bucket, v] : det.at("neighbor_purity").items())
        if (!v.at("purity").is_null()) {
          purity_pooled[bucket].add(v.at("purity"));
          purity_combo[{key, bucket}].add(v.at("purity"));
        }
  }

  std::vector<fs::path> written;
  auto emit = [&](const std::string& stem, const std::string& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream csv, dat;
    csv << "config_hash," << header << '\n';
    dat << "# config_hash " << hash << "\n# ";
    for (const char ch : header) dat << (ch == ',' ? ' ' : ch);
    dat << '\n';
    for (const auto& row : rows) {
      csv << hash;
      for (const auto& cell : row) csv << ',' << cell;
      csv << '\n';
      for (std::size_t k = 0; k < row.size(); ++k) dat << (k ? " " : "") << (row[k].empty() ? "NaN" : row[k]);
      dat << '\n';
    }
    write_text(run_dir / (stem + ".csv"), csv.str());
    write_text(run_dir / (stem + ".dat"), dat.str());
    written.push_back(run_dir / (stem + ".csv"));
    written.push_back(run_dir / (stem + ".dat"));
  };

  std::vector<std::vector<std::string>> rows;
  for (const auto& key : order)
    if (const auto it = zero.find(key); it != zero.end()) {
      const auto [m, ci] = it->second.mean_ci();
      rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), fmt(m, 4), fmt(ci, 4),
                      std::to_string(it->second.values.size())});
    }
  emit("zero_weight", "dataset,complex,simple,zero_weight_pct,ci95,splits", rows);

  rows.clear();
  for (const char* bucket : {"zero", "top5", "middle"}) {
    const auto it = purity_pooled.find(bucket);
    if (it == purity_pooled.end()) {
      rows.push_back({"all", bucket, "", "", "0"});
      continue;
    }
    const auto [m, ci] = it->second.mean_ci();
    rows.push_back({"all", bucket, fmt(m, 4), fmt(ci, 4), std::to_string(it->second.values.size())});
  }
  if (opts.per_combination)
    for (const auto& key : order)
      for (const char* bucket : {"zero", "top5", "middle"}) {
        const auto it = purity_combo.find({key, bucket});
        if (it == purity_combo.end()) continue;
        const auto [m, ci] = it->second.mean_ci();
        rows.push_back({std::get<0>(key) + "/" + std::get<1>(key) + "/" + std::get<2>(key), bucket, fmt(m, 4),
                        fmt(ci, 4), std::to_string(it->second.values.size())});
      }
  emit("neighbor_purity", "combination,bucket,purity,ci95,samples", rows);

  // Table-3 analogue: one row per (dataset, simple model), averaged over complex models.
  rows.clear();
  for (const auto& [key, series] : change) {
    const auto [m, ci] = series.mean_ci();
    rows.push_back({key.first, key.second, fmt(m, 4), fmt(ci, 4), std::to_string(series.values.size())});
  }
  emit("weight_change", "dataset,simple,weight_change_pct,ci95,samples", rows);

  rows.clear();
  for (const auto& [key, series] : graded) {
    const auto [m, ci] = series.mean_ci();
    rows.push_back({key.first, key.second, fmt(m, 6), fmt(ci, 6), std::to_string(series.values.size())});
  }
  emit("gradedness", "dataset,complex,gradedness,ci95,samples", rows);
  return written;
}

}  // namespace sratio
