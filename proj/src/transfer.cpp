#include "sratio/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

Json WeightReport::to_json() const {
  return Json{{"weights", weights},
              {"selected_gamma", gamma},
              {"selected_beta", beta},
              {"active_set", active_set},
              {"zero_fraction", zero_fraction},
              {"simple_error", simple_error},
              {"graded_errors", graded_errors}};
}

std::vector<double> SRatioConfig::default_beta_grid() {
  std::vector<double> out;
  for (int k = 3; k <= 20; ++k) out.push_back(0.5 * k);
  return out;
}

Json SRatioConfig::to_json() const {
  return Json{{"gamma_grid", gamma_grid},
              {"beta_grid", beta_grid},
              {"cv_folds", cv_folds},
              {"seed", seed},
              {"refit_simple_per_fold", refit_simple_per_fold}};
}

std::vector<std::size_t> select_active(double simple_error, std::span<const double> graded_errors, double gamma) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < graded_errors.size(); ++i)
    if (simple_error - graded_errors[i] >= gamma) active.push_back(i);
  return active;
}

namespace {

std::size_t row_at(std::span<const std::size_t> rows, std::size_t k) { return rows.empty() ? k : rows[k]; }

double mean_active(const GradedEvaluation& g, std::size_t row, std::span<const std::size_t> active) {
  double s = 0.0;
  for (const auto k : active) s += g.conf(row, k);
  return s / static_cast<double>(active.size());
}

void check_beta(double beta) {
  if (!(beta >= 1.0)) throw ConfigError("beta must be >= 1");
}

}  // namespace

std::vector<double> complex_only_weights(const GradedEvaluation& graded, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> active_set) {
  const std::size_t n = rows.empty() ? graded.n_rows : rows.size();
  std::vector<double> out(n, 1.0);
  if (active_set.empty()) return out;
  for (std::size_t k = 0; k < n; ++k) out[k] = mean_active(graded, row_at(rows, k), active_set);
  return out;
}

WeightReport sratio_weights_from(const GradedEvaluation& graded, std::span<const std::size_t> rows,
                                 std::span<const double> simple_conf, double simple_error, double gamma,
                                 double beta) {
  check_beta(beta);
  const std::size_t n = rows.empty() ? graded.n_rows : rows.size();
  if (simple_conf.size() != n) throw DataError("simple-model confidences do not match the rows");

  WeightReport rep;
  rep.gamma = gamma;
  rep.beta = beta;
  rep.simple_error = simple_error;
  rep.graded_errors = graded.errors(rows);
  rep.active_set = select_active(simple_error, rep.graded_errors, gamma);
  rep.weights.assign(n, 1.0);
  if (!rep.active_set.empty()) {
    for (std::size_t k = 0; k < n; ++k) {
      const double s = simple_conf[k];
      double w = s > 0.0 ? mean_active(graded, row_at(rows, k), rep.active_set) / s : 0.0;
      if (!(w <= beta)) w = 0.0;
      rep.weights[k] = w;
    }
  }
  const auto zeros = std::count(rep.weights.begin(), rep.weights.end(), 0.0);
  rep.zero_fraction = static_cast<double>(zeros) / static_cast<double>(n);
  return rep;
}

WeightReport sratio_weights(const GradedEnsemble& graded, const Classifier& simple, const Dataset& ds,
                            double gamma, double beta) {
  if (simple.n_classes() != ds.n_classes() || simple.n_features() != ds.n_features())
    throw DataError("simple model was not trained on this dataset's shape");
  const auto ev = graded.evaluate(ds);
  const auto conf = true_class_proba(simple, ds);
  return sratio_weights_from(ev, {}, conf, error_rate(simple, ds), gamma, beta);
}

SRatioResult sratio_train(const GradedEnsemble& graded, const Learner& learner, const Dataset& ds,
                          const SRatioConfig& cfg) {
  if (cfg.gamma_grid.empty() || cfg.beta_grid.empty()) throw ConfigError("SRatio grids must be nonempty");
  for (const double b : cfg.beta_grid) check_beta(b);

  const auto ev = graded.evaluate(ds);
  const auto full_simple = learner.fit_unweighted(ds);
  const auto full_conf = true_class_proba(*full_simple, ds);

  auto fit_or_explain = [&](const Dataset& d, std::span<const double> w, double gamma, double beta) {
    try {
      return learner.fit(d, w);
    } catch (const FitError& e) {
      std::ostringstream msg;
      msg << e.what() << " (gamma=" << gamma << ", beta=" << beta << ")";
      throw FitError(msg.str());
    }
  };

  const std::size_t ng = cfg.gamma_grid.size();
  const std::size_t nb = cfg.beta_grid.size();
  std::vector<double> err_sum(ng * nb, 0.0);

  const bool single = ng == 1 && nb == 1;
  if (!single) {
    const auto folds = kfold(ds, cfg.cv_folds, derive_seed(cfg.seed, "sratio/cv"));
    for (int f = 0; f < folds.k; ++f) {
      const auto tr = folds.train_indices(f);
      const auto te = folds.test_indices(f);
      const auto d_tr = ds.subset(tr);
      const auto d_te = ds.subset(te);

      std::vector<double> conf;
      double s_err = 0.0;
      if (cfg.refit_simple_per_fold) {
        const auto s = learner.fit_unweighted(d_tr);
        conf = true_class_proba(*s, d_tr);
        s_err = error_rate(*s, d_tr);
      } else {
        for (const auto i : tr) conf.push_back(full_conf[i]);
        s_err = error_rate(*full_simple, d_tr);
      }

      // Different (gamma, beta) often produce the same weights; fit each distinct vector once.
      std::map<std::vector<double>, double> seen;
      for (std::size_t gi = 0; gi < ng; ++gi)
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const auto rep = sratio_weights_from(ev, tr, conf, s_err, cfg.gamma_grid[gi], cfg.beta_grid[bi]);
          auto it = seen.find(rep.weights);
          if (it == seen.end()) {
            const auto m = fit_or_explain(d_tr, rep.weights, cfg.gamma_grid[gi], cfg.beta_grid[bi]);
            it = seen.emplace(rep.weights, error_rate(*m, d_te)).first;
          }
          err_sum[gi * nb + bi] += it->second;
        }
    }
  }

  SRatioResult out;
  std::size_t best = 0;
  for (std::size_t gi = 0; gi < ng; ++gi)
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const std::size_t cell = gi * nb + bi;
      const double mean = single ? 0.0 : err_sum[cell] / static_cast<double>(cfg.cv_folds);
      out.cv.push_back({cfg.gamma_grid[gi], cfg.beta_grid[bi], mean});
      if (cell == 0) continue;
      const auto& cur = out.cv[best];
      const double b = cfg.beta_grid[bi], g = cfg.gamma_grid[gi];
      if (mean < cur.mean_error - 1e-12 ||
          (std::abs(mean - cur.mean_error) <= 1e-12 && (b < cur.beta || (b == cur.beta && g < cur.gamma))))
        best = cell;
    }

  const auto& chosen = out.cv[best];
  out.report = sratio_weights_from(ev, {}, full_conf, error_rate(*full_simple, ds), chosen.gamma, chosen.beta);
  out.model = fit_or_explain(ds, out.report.weights, chosen.gamma, chosen.beta);
  return out;
}

std::vector<double> confweight_weights(const Classifier& complex, const Dataset& ds) {
  return true_class_proba(complex, ds);
}

ClassifierPtr distill_proxy1(const Classifier& complex, const Learner& learner, const Dataset& ds) {
  std::vector<int> labels(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = complex.predict(ds.row(i));
  const auto relabeled = ds.relabel(std::move(labels));
  if (relabeled.n_present_classes() < 2) throw FitError("relabeled data collapses to a single class");
  return learner.fit_unweighted(relabeled);
}

RegressorVoteClassifier::RegressorVoteClassifier(std::vector<RegressorPtr> regressors, std::size_t n_features)
    : regressors_(std::move(regressors)), n_features_(n_features) {
  if (regressors_.size() < 2) throw DataError("need one regressor per class (at least two)");
}

void RegressorVoteClassifier::predict_proba(std::span<const double> x, std::span<double> out) const {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < regressors_.size(); ++c) mx = std::max(mx, out[c] = regressors_[c]->predict(x));
  double sum = 0.0;
  for (std::size_t c = 0; c < regressors_.size(); ++c) sum += (out[c] = std::exp(out[c] - mx));
  for (auto& p : out) p /= sum;
}

Json RegressorVoteClassifier::to_json() const {
  Json regs = Json::array();
  for (const auto& r : regressors_) regs.push_back(r->to_json());
  return Json{{"type", "regressor_vote"}, {"n_features", n_features_}, {"regressors", std::move(regs)}};
}

ClassifierPtr distill_proxy2(const Classifier& complex, const RegressionLearner& learner, const Dataset& ds) {
  const auto c = static_cast<std::size_t>(complex.n_classes());
  std::vector<double> probs(ds.size() * c);
  for (std::size_t i = 0; i < ds.size(); ++i)
    complex.predict_proba(ds.row(i), std::span<double>(probs.data() + i * c, c));

  const auto w = unit_weights(ds.size());
  std::vector<RegressorPtr> regs;
  std::vector<double> targets(ds.size());
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < ds.size(); ++i) targets[i] = probs[i * c + k];
    try {
      regs.push_back(learner.fit(ds, targets, w));
    } catch (const FitError& e) {
      throw FitError(std::string(e.what()) + " (regressor for class " + std::to_string(k) + ")");
    }
  }
  return std::make_shared<RegressorVoteClassifier>(std::move(regs), ds.n_features());
}

BoundTerms bound_check(std::span<const double> p_theta, std::span<const double> p_c,
                       std::span<const double> p_theta_star, double beta) {
  check_beta(beta);
  const std::size_t k = p_theta.size();
  if (k == 0 || p_c.size() != k || p_theta_star.size() != k)
    throw DataError("bound_check inputs must be nonempty and of equal length");
  auto inside = [](double v) { return v > 0.0 && v < 1.0; };

  double lhs = 0.0, weighted = 0.0, log_ratio = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!inside(p_theta[i]) || !inside(p_c[i]) || !inside(p_theta_star[i]))
      throw DataError("bound_check entries must lie strictly inside (0, 1)");
    const double nll = -std::log(p_theta[i]);
    const double r = std::min(p_c[i] / p_theta_star[i], beta);
    lhs += nll;
    weighted += std::max(1.0, r) * nll;
    log_ratio += std::log(r);
  }
  const double n = static_cast<double>(k);
  return {lhs / n, weighted / n - log_ratio / n + std::log(beta)};
}

}  // namespace sratio

namespace sratio {

std::vector<BoundSweepResult> bound_sweep(std::size_t samples, std::span<const double> betas, std::uint64_t seed,
                                          double lo, double hi) {
  if (samples == 0) throw DataError("bound sweep needs at least one sample");
  std::vector<BoundSweepResult> out;
  std::vector<double> pt(samples), pc(samples), ps(samples);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    Rng rng(derive_seed(seed, "bound", {b}));
    for (std::size_t i = 0; i < samples; ++i) {
      pt[i] = rng.uniform(lo, hi);
      pc[i] = rng.uniform(lo, hi);
      ps[i] = rng.uniform(lo, hi);
    }
    BoundSweepResult r;
    r.beta = betas[b];
    r.samples = samples;
    for (std::size_t i = 0; i < samples; ++i) {
      const auto t = bound_check({&pt[i], 1}, {&pc[i], 1}, {&ps[i], 1}, betas[b]);
      if (t.lhs > t.rhs + 1e-12) ++r.pointwise_violations;
    }
    r.aggregate = bound_check(pt, pc, ps, betas[b]);
    r.aggregate_holds = r.aggregate.lhs <= r.aggregate.rhs + 1e-12;
    out.push_back(r);
  }
  return out;
}

}  // namespace sratio
