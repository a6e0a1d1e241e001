// pybind11 bindings for the sratio core. Arrays cross as float64 / int64 numpy
// arrays; JSON documents cross as strings and are decoded on the Python side.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sratio/analysis.hpp"
#include "sratio/bench.hpp"
#include "sratio/ensembles.hpp"
#include "sratio/error.hpp"
#include "sratio/linear.hpp"
#include "sratio/transfer.hpp"
#include "sratio/tree.hpp"

namespace py = pybind11;
using namespace sratio;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I64 = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const F64& a) { return {a.data(), a.data() + a.size()}; }

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// pybind11 holders cannot be shared_ptr<const T>; only const methods are bound.
template <class T>
std::shared_ptr<T> unconst(std::shared_ptr<const T> p) {
  return std::const_pointer_cast<T>(std::move(p));
}
using ClassifierH = std::shared_ptr<Classifier>;
using RegressorH = std::shared_ptr<Regressor>;
using GradedH = std::shared_ptr<GradedEnsemble>;

// None means unit weights.
std::vector<double> weights_or_unit(const std::optional<F64>& w, std::size_t n) {
  if (!w) return unit_weights(n);
  auto v = to_vec(*w);
  if (v.size() != n) throw DataError("weights length " + std::to_string(v.size()) + " != rows " + std::to_string(n));
  return v;
}

Dataset make_dataset(const F64& X, const I64& y, std::optional<int> n_classes) {
  if (X.ndim() != 2) throw DataError("X must be 2-dimensional");
  if (y.ndim() != 1 || y.shape(0) != X.shape(0)) throw DataError("y must be 1-dimensional with one label per row");
  std::vector<int> labels(static_cast<std::size_t>(y.size()));
  int mx = -1;
  for (py::ssize_t i = 0; i < y.size(); ++i) {
    const auto v = y.data()[i];
    if (v < 0) throw DataError("labels must be non-negative integers");
    labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
    mx = std::max(mx, static_cast<int>(v));
  }
  return Dataset(to_vec(X), static_cast<std::size_t>(X.shape(1)), std::move(labels), n_classes.value_or(mx + 1));
}

py::array_t<double> features_of(const Dataset& ds) {
  py::array_t<double> out({static_cast<py::ssize_t>(ds.size()), static_cast<py::ssize_t>(ds.n_features())});
  std::copy(ds.features().begin(), ds.features().end(), out.mutable_data());
  return out;
}

py::array_t<double> proba_matrix(const Classifier& c, const F64& X) {
  if (X.ndim() != 2 || static_cast<std::size_t>(X.shape(1)) != c.n_features())
    throw DataError("X must have shape (n, " + std::to_string(c.n_features()) + ")");
  const auto n = X.shape(0);
  const auto k = static_cast<py::ssize_t>(c.n_classes());
  py::array_t<double> out({n, k});
  const auto d = static_cast<std::size_t>(X.shape(1));
  const double* in = X.data();
  double* dst = out.mutable_data();
  {
    py::gil_scoped_release nogil;
    for (py::ssize_t i = 0; i < n; ++i)
      c.predict_proba(std::span<const double>(in + i * static_cast<py::ssize_t>(d), d),
                      std::span<double>(dst + i * k, static_cast<std::size_t>(k)));
  }
  return out;
}

py::dict report_dict(const WeightReport& r) {
  py::dict d;
  d["weights"] = to_array(r.weights);
  d["gamma"] = r.gamma;
  d["beta"] = r.beta;
  d["active_set"] = r.active_set;
  d["zero_fraction"] = r.zero_fraction;
  d["simple_error"] = r.simple_error;
  d["graded_errors"] = r.graded_errors;
  return d;
}

TreeParams tree_params(int max_depth, double min_weight_leaf, double laplace_alpha, std::size_t max_features,
                       std::uint64_t seed) {
  TreeParams p;
  p.max_depth = max_depth;
  p.min_weight_leaf = min_weight_leaf;
  p.laplace_alpha = laplace_alpha;
  p.max_features = max_features;
  p.seed = seed;
  return p;
}

SvmParams svm_params(double reg_lambda, int epochs, double learning_rate, double eps, std::uint64_t seed) {
  SvmParams p;
  p.reg_lambda = reg_lambda;
  p.epochs = epochs;
  p.learning_rate = learning_rate;
  p.epsilon_insensitive = eps;
  p.seed = seed;
  return p;
}

Json parse_config(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sample reweighting of simple classifiers from graded complex models";
  m.attr("__version__") = kVersion;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // data
  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("X"), py::arg("y"), py::arg("n_classes") = py::none())
      .def("__len__", &Dataset::size)
      .def_property_readonly("n_features", &Dataset::n_features)
      .def_property_readonly("n_classes", &Dataset::n_classes)
      .def_property_readonly("X", &features_of)
      .def_property_readonly("y",
                             [](const Dataset& ds) {
                               py::array_t<std::int64_t> out(static_cast<py::ssize_t>(ds.size()));
                               std::copy(ds.labels().begin(), ds.labels().end(), out.mutable_data());
                               return out;
                             })
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("label_names", &Dataset::label_names)
      .def("class_counts", &Dataset::class_counts)
      .def("subset", [](const Dataset& ds, std::vector<std::size_t> idx) { return ds.subset(idx); })
      .def("__repr__", [](const Dataset& ds) {
        return "<Dataset rows=" + std::to_string(ds.size()) + " features=" + std::to_string(ds.n_features()) +
               " classes=" + std::to_string(ds.n_classes()) + ">";
      });

  m.def(
      "load_csv",
      [](const std::filesystem::path& path, py::object label, std::optional<int> n_classes) {
        ColumnRef ref = py::isinstance<py::str>(label) ? ColumnRef(label.cast<std::string>())
                                                       : ColumnRef(label.cast<std::size_t>());
        return load_csv(path, ref, n_classes);
      },
      py::arg("path"), py::arg("label"), py::arg("n_classes") = py::none());
  m.def("write_csv", &write_csv, py::arg("dataset"), py::arg("path"));
  m.def(
      "train_test_split",
      [](const Dataset& ds, double train_fraction, std::uint64_t seed, bool stratified) {
        return train_test_split(ds, {train_fraction, seed, stratified});
      },
      py::arg("dataset"), py::arg("train_fraction") = 0.7, py::arg("seed") = 0, py::arg("stratified") = true);
  m.def(
      "standardize",
      [](const Dataset& train, const Dataset& test) {
        auto s = standardize(train, test);
        return py::make_tuple(s.train, s.test, s.params.means, s.params.stds);
      },
      py::arg("train"), py::arg("test"));
  m.def(
      "kfold",
      [](std::size_t n, int k, std::uint64_t seed) { return kfold(n, k, seed).fold_of; }, py::arg("n"), py::arg("k"),
      py::arg("seed") = 0);
  m.def("make_synthetic", &make_synthetic, py::arg("name"), py::arg("n") = 1000, py::arg("seed") = 0);
  m.def("synthetic_names", &synthetic_names);

  // models
  py::class_<Classifier, ClassifierH>(m, "Classifier")
      .def_property_readonly("n_classes", &Classifier::n_classes)
      .def_property_readonly("n_features", &Classifier::n_features)
      .def("predict_proba", &proba_matrix, py::arg("X"))
      .def(
          "predict",
          [](const Classifier& c, const F64& X) {
            const auto p = proba_matrix(c, X);
            const auto n = p.shape(0), k = p.shape(1);
            py::array_t<std::int64_t> out(n);
            for (py::ssize_t i = 0; i < n; ++i)
              out.mutable_data()[i] = argmax(std::span<const double>(p.data() + i * k, static_cast<std::size_t>(k)));
            return out;
          },
          py::arg("X"))
      .def("error_rate", [](const Classifier& c, const Dataset& ds) { return error_rate(c, ds); })
      .def("to_json", [](const Classifier& c) { return c.to_json().dump(); });

  py::class_<Regressor, RegressorH>(m, "Regressor")
      .def_property_readonly("n_features", &Regressor::n_features)
      .def(
          "predict",
          [](const Regressor& r, const F64& X) {
            if (X.ndim() != 2 || static_cast<std::size_t>(X.shape(1)) != r.n_features())
              throw DataError("X has the wrong shape");
            const auto d = static_cast<std::size_t>(X.shape(1));
            py::array_t<double> out(X.shape(0));
            for (py::ssize_t i = 0; i < X.shape(0); ++i)
              out.mutable_data()[i] = r.predict(std::span<const double>(X.data() + i * static_cast<py::ssize_t>(d), d));
            return out;
          },
          py::arg("X"))
      .def("to_json", [](const Regressor& r) { return r.to_json().dump(); });

  py::class_<BoostedModel, Classifier, std::shared_ptr<BoostedModel>>(m, "BoostedModel")
      .def_property_readonly("n_stages", &BoostedModel::n_stages)
      .def_property_readonly("train_loss", &BoostedModel::train_loss);
  py::class_<ForestModel, Classifier, std::shared_ptr<ForestModel>>(m, "ForestModel")
      .def_property_readonly("n_trees", [](const ForestModel& f) { return f.trees().size(); })
      .def_property_readonly("train_accuracy", &ForestModel::train_accuracy)
      .def_property_readonly("oob_accuracy", &ForestModel::oob_accuracy);

  // learners
  py::class_<Learner, std::shared_ptr<Learner>>(m, "Learner")
      .def_property_readonly("name", &Learner::name)
      .def(
          "fit",
          [](const Learner& l, const Dataset& ds, const std::optional<F64>& w) {
            const auto weights = weights_or_unit(w, ds.size());
            py::gil_scoped_release nogil;
            return unconst(l.fit(ds, weights));
          },
          py::arg("dataset"), py::arg("weights") = py::none());
  py::class_<TreeLearner, Learner, std::shared_ptr<TreeLearner>>(m, "TreeLearner")
      .def(py::init([](int max_depth, double min_weight_leaf, double laplace_alpha, std::size_t max_features,
                       std::uint64_t seed) {
             return std::make_shared<TreeLearner>(
                 tree_params(max_depth, min_weight_leaf, laplace_alpha, max_features, seed));
           }),
           py::arg("max_depth") = 5, py::arg("min_weight_leaf") = 0.0, py::arg("laplace_alpha") = 1.0,
           py::arg("max_features") = 0, py::arg("seed") = 0);
  py::class_<SvmLearner, Learner, std::shared_ptr<SvmLearner>>(m, "SvmLearner")
      .def(py::init([](double reg_lambda, int epochs, double learning_rate, std::uint64_t seed) {
             return std::make_shared<SvmLearner>(svm_params(reg_lambda, epochs, learning_rate, 0.0, seed));
           }),
           py::arg("reg_lambda") = 1e-3, py::arg("epochs") = 200, py::arg("learning_rate") = 0.1,
           py::arg("seed") = 0);

  py::class_<RegressionLearner, std::shared_ptr<RegressionLearner>>(m, "RegressionLearner")
      .def_property_readonly("name", &RegressionLearner::name)
      .def(
          "fit",
          [](const RegressionLearner& l, const Dataset& ds, const F64& targets, const std::optional<F64>& w) {
            const auto t = to_vec(targets);
            if (t.size() != ds.size()) throw DataError("one target per row required");
            const auto weights = weights_or_unit(w, ds.size());
            py::gil_scoped_release nogil;
            return unconst(l.fit(ds, t, weights));
          },
          py::arg("dataset"), py::arg("targets"), py::arg("weights") = py::none());
  py::class_<TreeRegressionLearner, RegressionLearner, std::shared_ptr<TreeRegressionLearner>>(
      m, "TreeRegressionLearner")
      .def(py::init([](int max_depth, double min_weight_leaf, std::size_t max_features, std::uint64_t seed) {
             return std::make_shared<TreeRegressionLearner>(
                 tree_params(max_depth, min_weight_leaf, 1.0, max_features, seed));
           }),
           py::arg("max_depth") = 5, py::arg("min_weight_leaf") = 0.0, py::arg("max_features") = 0,
           py::arg("seed") = 0);
  py::class_<SvrLearner, RegressionLearner, std::shared_ptr<SvrLearner>>(m, "SvrLearner")
      .def(py::init([](double reg_lambda, int epochs, double learning_rate, double epsilon, std::uint64_t seed) {
             return std::make_shared<SvrLearner>(svm_params(reg_lambda, epochs, learning_rate, epsilon, seed));
           }),
           py::arg("reg_lambda") = 1e-3, py::arg("epochs") = 200, py::arg("learning_rate") = 0.1,
           py::arg("epsilon") = 0.0, py::arg("seed") = 0);

  // ensembles
  m.def(
      "fit_gradient_boosting",
      [](const Dataset& ds, int n_trees, double learning_rate, int max_depth, std::uint64_t seed) {
        BoostingParams p;
        p.n_trees = n_trees;
        p.learning_rate = learning_rate;
        p.max_depth = max_depth;
        p.seed = seed;
        py::gil_scoped_release nogil;
        return std::make_shared<BoostedModel>(fit_gradient_boosting(ds, p));
      },
      py::arg("dataset"), py::arg("n_trees") = 100, py::arg("learning_rate") = 0.1, py::arg("max_depth") = 3,
      py::arg("seed") = 0);
  m.def(
      "fit_random_forest",
      [](const Dataset& ds, int n_trees, int max_depth, std::size_t max_features, std::uint64_t seed) {
        ForestParams p;
        p.n_trees = n_trees;
        p.max_depth = max_depth;
        p.max_features = max_features;
        p.seed = seed;
        py::gil_scoped_release nogil;
        return std::make_shared<ForestModel>(fit_random_forest(ds, p));
      },
      py::arg("dataset"), py::arg("n_trees") = 100, py::arg("max_depth") = 10, py::arg("max_features") = 0,
      py::arg("seed") = 0);

  py::class_<GradedEnsemble, GradedH>(m, "GradedEnsemble")
      .def("__len__", &GradedEnsemble::size)
      .def_property_readonly("n_classes", &GradedEnsemble::n_classes)
      .def(
          "member", [](const GradedEnsemble& g, std::size_t k) { return unconst(g.member(k)); }, py::arg("k"))
      .def("errors", [](const GradedEnsemble& g, const Dataset& ds) { return g.errors(ds); })
      .def("gradedness", [](const GradedEnsemble& g, const Dataset& ds) { return measure_gradedness(g, ds); })
      .def("describe", [](const GradedEnsemble& g) { return g.describe().dump(); });
  m.def(
      "graded_from_boosting",
      [](std::shared_ptr<BoostedModel> model, int step) { return unconst(graded_from_boosting(std::move(model), step)); },
      py::arg("model"), py::arg("step") = 10);
  m.def(
      "graded_from_forest",
      [](std::shared_ptr<ForestModel> model, int step, const std::string& ordering) {
        TreeOrdering o;
        if (ordering == "training")
          o = TreeOrdering::TrainingAccuracy;
        else if (ordering == "out_of_bag")
          o = TreeOrdering::OutOfBagAccuracy;
        else
          throw ConfigError("ordering must be 'training' or 'out_of_bag'");
        return unconst(graded_from_forest(std::move(model), step, o));
      },
      py::arg("model"), py::arg("step") = 10, py::arg("ordering") = "training");
  m.def(
      "graded_from_list",
      [](const std::vector<ClassifierH>& members) {
        return unconst(graded_from_list(std::vector<ClassifierPtr>(members.begin(), members.end())));
      },
      py::arg("members"));

  // transfer
  m.def(
      "sratio_weights",
      [](const GradedEnsemble& g, const Classifier& simple, const Dataset& ds, double gamma, double beta) {
        return report_dict(sratio_weights(g, simple, ds, gamma, beta));
      },
      py::arg("graded"), py::arg("simple"), py::arg("dataset"), py::arg("gamma"), py::arg("beta"));
  m.def(
      "sratio_train",
      [](const GradedEnsemble& g, const Learner& learner, const Dataset& ds, std::optional<std::vector<double>> gammas,
         std::optional<std::vector<double>> betas, int cv_folds, std::uint64_t seed, bool refit_simple_per_fold) {
        SRatioConfig cfg;
        if (gammas) cfg.gamma_grid = *gammas;
        if (betas) cfg.beta_grid = *betas;
        cfg.cv_folds = cv_folds;
        cfg.seed = seed;
        cfg.refit_simple_per_fold = refit_simple_per_fold;
        SRatioResult res;
        {
          py::gil_scoped_release nogil;
          res = sratio_train(g, learner, ds, cfg);
        }
        py::list cv;
        for (const auto& c : res.cv) cv.append(py::make_tuple(c.gamma, c.beta, c.mean_error));
        return py::make_tuple(unconst(res.model), report_dict(res.report), cv);
      },
      py::arg("graded"), py::arg("learner"), py::arg("dataset"), py::arg("gamma_grid") = py::none(),
      py::arg("beta_grid") = py::none(), py::arg("cv_folds") = 10, py::arg("seed") = 0,
      py::arg("refit_simple_per_fold") = true);
  m.def(
      "confweight_weights",
      [](const Classifier& c, const Dataset& ds) { return to_array(confweight_weights(c, ds)); }, py::arg("complex"),
      py::arg("dataset"));
  m.def(
      "distill_proxy1",
      [](const Classifier& c, const Learner& l, const Dataset& ds) {
        py::gil_scoped_release nogil;
        return unconst(distill_proxy1(c, l, ds));
      },
      py::arg("complex"), py::arg("learner"), py::arg("dataset"));
  m.def(
      "distill_proxy2",
      [](const Classifier& c, const RegressionLearner& l, const Dataset& ds) {
        py::gil_scoped_release nogil;
        return unconst(distill_proxy2(c, l, ds));
      },
      py::arg("complex"), py::arg("learner"), py::arg("dataset"));
  m.def(
      "bound_check",
      [](const F64& p_theta, const F64& p_c, const F64& p_star, double beta) {
        const auto r = bound_check(to_vec(p_theta), to_vec(p_c), to_vec(p_star), beta);
        return py::make_tuple(r.lhs, r.rhs);
      },
      py::arg("p_theta"), py::arg("p_c"), py::arg("p_theta_star"), py::arg("beta"));
  m.def(
      "bound_sweep",
      [](std::size_t samples, std::vector<double> betas, std::uint64_t seed) {
        py::list out;
        for (const auto& r : bound_sweep(samples, betas, seed)) {
          py::dict d;
          d["beta"] = r.beta;
          d["samples"] = r.samples;
          d["pointwise_violations"] = r.pointwise_violations;
          d["mean_lhs"] = r.aggregate.lhs;
          d["mean_rhs"] = r.aggregate.rhs;
          d["aggregate_holds"] = r.aggregate_holds;
          out.append(d);
        }
        return out;
      },
      py::arg("samples"), py::arg("betas"), py::arg("seed") = 0);

  // analysis
  m.def(
      "summarize",
      [](std::vector<double> errors, bool student_t) {
        const auto s = summarize(errors, {}, student_t ? IntervalKind::StudentT : IntervalKind::Normal);
        return py::make_tuple(s.mean, s.ci95_halfwidth);
      },
      py::arg("errors"), py::arg("student_t") = false);
  m.def(
      "zero_weight_fraction", [](const F64& w) { return zero_weight_fraction(to_vec(w)); }, py::arg("weights"));
  m.def(
      "point_purities", [](const Dataset& ds, int k) { return to_array(point_purities(ds, k)); }, py::arg("dataset"),
      py::arg("k") = 10);
  m.def(
      "neighbor_purity",
      [](const Dataset& ds, const F64& w, int k) {
        py::dict out;
        for (const auto& b : neighbor_purity(ds, to_vec(w), k)) {
          py::dict d;
          d["members"] = b.members;
          d["purity"] = b.purity ? py::cast(*b.purity) : py::none();
          out[bucket_name(b.bucket)] = d;
        }
        return out;
      },
      py::arg("dataset"), py::arg("weights"), py::arg("k") = 10);
  m.def(
      "weight_change_fraction",
      [](const F64& full, const F64& complex_only, double threshold) {
        return weight_change_fraction(to_vec(full), to_vec(complex_only), threshold);
      },
      py::arg("full"), py::arg("complex_only"), py::arg("threshold") = 0.01);

  // bench
  m.def(
      "_run_benchmark",
      [](const std::string& config, const std::filesystem::path& base_dir, unsigned threads) {
        const auto cfg = BenchConfig::from_json(parse_config(config), base_dir);
        py::gil_scoped_release nogil;
        const auto r = run_benchmark(cfg, threads);
        return std::make_pair(r.document.dump(), r.failures);
      },
      py::arg("config"), py::arg("base_dir") = std::filesystem::path{}, py::arg("threads") = 0);
  m.def(
      "_config_hash",
      [](const std::string& config) { return BenchConfig::from_json(parse_config(config)).hash(); },
      py::arg("config"));
}
