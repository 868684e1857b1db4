#include "nextdoor/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "nextdoor/cross_validation.hpp"
#include "nextdoor/debias.hpp"
#include "nextdoor/lasso.hpp"
#include "nextdoor/post_selection.hpp"

namespace nextdoor {

namespace {

void check_config(const AnalysisConfig& cfg) {
  if (cfg.V < 2) throw DataError("config: need at least 2 folds");
  if (cfg.m < 1) throw DataError("config: grid size must be positive");
  if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0) && cfg.m > 1)
    throw DataError("config: grid floor ratio must be in (0,1)");
  if (!(cfg.alpha > 0.0)) throw DataError("config: alpha must be > 0");
  if (cfg.gamma1 < 0.0 || cfg.gamma2 < 0.0)
    throw DataError("config: noise scales must be nonnegative");
  if (cfg.H < 1 || cfg.B < 1 || cfg.n_boot_freq < 1)
    throw DataError("config: draw counts must be positive");
  if (!(cfg.frequency_cutoff >= 0.0 && cfg.frequency_cutoff < 1.0))
    throw DataError("config: frequency cutoff must be in [0,1)");
}

// One-sided paired t: P(T_{n-1} >= mean/se) for "exclusion error exceeds
// base error".  Ignores every selection event on purpose.
double paired_t_pvalue(const Eigen::VectorXd& diffs) {
  const int n = int(diffs.size());
  if (n < 2) throw DataError("paired t-test needs at least two rows");
  const double mean = diffs.mean();
  const double ss = (diffs.array() - mean).square().sum();
  const double se = std::sqrt(ss / (n - 1) / n);
  if (se < 1e-300) return mean > 0.0 ? 0.0 : 1.0;
  boost::math::students_t dist(n - 1);
  return boost::math::cdf(boost::math::complement(dist, mean / se));
}

std::vector<int> normalized_target(std::vector<int> t, int p) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (t.empty()) throw DataError("empty exclusion set");
  if (t.front() < 0 || t.back() >= p)
    throw DataError("exclusion set index out of range");
  return t;
}

}  // namespace

double held_out_error(const Dataset& test, const Coefficients& coef) {
  if (test.p() != coef.beta.size())
    throw DataError("held-out data has a different predictor count");
  const Eigen::VectorXd eta =
      (test.x * coef.beta).array() + coef.intercept;
  if (test.family == Family::gaussian)
    return (test.y - eta).squaredNorm() / double(test.n());
  double dev = 0.0;
  for (int i = 0; i < test.n(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-eta(i)));
    p = std::min(std::max(p, 1e-10), 1.0 - 1e-10);
    dev += -2.0 * (test.y(i) * std::log(p) +
                   (1.0 - test.y(i)) * std::log1p(-p));
  }
  return dev / double(test.n());
}

NextDoorReport run_next_door(const Dataset& d, const AnalysisConfig& cfg,
                             const Dataset* test) {
  check_config(cfg);
  const int n = int(d.n());
  const int p = int(d.p());
  const int m = cfg.m;
  const bool one_se = cfg.criterion == Criterion::randomized_one_se;

  NextDoorReport rep;
  rep.family = d.family;
  rep.names = d.names;
  rep.has_test = test != nullptr;

  auto [sd, info] = standardize(d);
  rep.grid = lambda_grid(sd.x, sd.y, d.family, m, cfg.ratio).values;

  const FoldAssignment folds = d.fold_labels.empty()
                                   ? make_folds(n, cfg.V, cfg.seed)
                                   : folds_from_labels(d.fold_labels);

  const Eigen::MatrixXd base_losses = cv_losses(d, rep.grid, folds);
  const Eigen::VectorXd base_q = base_losses.colwise().mean();
  const CovarianceEstimate base_cov = sample_covariance(base_losses);

  RandomizationParams rp_base{cfg.alpha, cfg.gamma1, cfg.H,
                              derive_seed(cfg.seed, Stream::base_debias),
                              one_se};
  Eigen::VectorXd base_ses;
  if (one_se) base_ses = column_ses(base_losses, m);
  const DebiasedErrors base_de = debias_errors(
      base_q, base_cov, rp_base, m, one_se ? &base_ses : nullptr);

  const int k_star = base_de.k_star_primary;
  rep.chosen_lambda_index = k_star;
  rep.selection_counts = base_de.selection_counts;
  rep.base_cv_error = base_q(k_star);
  rep.base_debiased_error = base_de.err_hat;

  const std::vector<double> head(rep.grid.begin(),
                                 rep.grid.begin() + k_star + 1);
  const LassoFit base_fit = fit_path(sd.x, sd.y, d.family, head).back();
  rep.base = destandardize(base_fit.intercept, base_fit.beta, info);
  rep.base_active = base_fit.active_set;
  if (test) rep.base_test_error = held_out_error(*test, rep.base);

  std::vector<std::vector<int>> targets;
  for (int j : rep.base_active) targets.push_back({j});
  for (const auto& user : cfg.exclusion_sets)
    targets.push_back(normalized_target(user, p));
  if (targets.empty()) {
    rep.notice = "base model selected no predictors; nothing to exclude";
    return rep;
  }
  if (rep.base_active.empty())
    rep.notice = "base model selected no predictors; "
                 "reporting user exclusion sets only";

  // target-independent: resampled refits of the base procedure
  RandomizationParams rp_freq{cfg.alpha, cfg.gamma1, cfg.H, cfg.seed, one_se};
  const SelectionFrequencies freqs =
      selection_frequency_pass(d, rep.grid, cfg.V, rp_freq, cfg.n_boot_freq);

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    std::string label;
    for (std::size_t k = 0; k < t.size(); ++k)
      label += (k ? "+" : "") + d.names[std::size_t(t[k])];
    try {
      CvLossMatrix M;
      M.lambdas = rep.grid;
      M.folds = folds;
      M.family = d.family;
      M.excluded_predictor = t.size() == 1 ? t[0] : -1;
      M.losses.resize(n, 2 * m);
      M.losses.leftCols(m) = base_losses;
      M.losses.rightCols(m) = cv_losses(d, rep.grid, folds, t);

      const Eigen::VectorXd q = M.losses.colwise().mean();
      const CovarianceEstimate cov = sample_covariance(M.losses);
      RandomizationParams rp{cfg.alpha, cfg.gamma1, cfg.H,
                             derive_seed(cfg.seed, Stream::debias, i), one_se};
      Eigen::VectorXd ses;
      if (one_se) ses = column_ses(M.losses, m);
      const DebiasedErrors de =
          debias_errors(q, cov, rp, m, one_se ? &ses : nullptr);

      PredictorResult e;
      e.label = label;
      e.excluded = t;
      e.cv_error = q(m + k_star);
      e.debiased_error = de.err_hat_j;

      BootstrapParams bp{cfg.B, cfg.gamma2,
                         derive_seed(cfg.seed, Stream::bootstrap, i)};
      e.model_pvalue = bootstrap_pvalue(M, rp, bp);
      e.selection_frequency = frequency_for(freqs, t);
      e.score = model_score(e.model_pvalue, e.selection_frequency,
                            cfg.frequency_cutoff);

      const double tau_sq =
          cfg.tau_sq > 0.0 ? cfg.tau_sq : cfg.gamma1 * cov.sigma0_sq;
      if (!(tau_sq > 0.0))
        throw DataError(
            "post-selection perturbation is zero; set tau_sq when gamma1 = 0");
      e.post_selection_pvalue = post_selection_pvalue(
          M, tau_sq, derive_seed(cfg.seed, Stream::post_selection, i));

      const int k_naive = select_randomized(base_q, m);
      e.naive_pvalue = paired_t_pvalue(M.losses.col(m + k_naive) -
                                       M.losses.col(k_naive));

      const LassoFit prox = fit_path(sd.x, sd.y, d.family, head, t).back();
      e.coef = destandardize(prox.intercept, prox.beta, info);
      if (test) e.test_error = held_out_error(*test, e.coef);
      rep.entries.push_back(std::move(e));
    } catch (const DataError& err) {
      throw DataError("target '" + label + "': " + err.what());
    } catch (const NumericalError& err) {
      throw NumericalError("target '" + label + "': " + err.what());
    }
  }

  std::stable_sort(rep.entries.begin(), rep.entries.end(),
                   [](const PredictorResult& a, const PredictorResult& b) {
                     return a.debiased_error < b.debiased_error;
                   });
  return rep;
}

std::vector<std::pair<int, double>> nested_model_curve(
    const Dataset& train, const Dataset& test, const NextDoorReport& report,
    NestedOrdering ordering, int start_size) {
  if (report.base_active.empty())
    throw DataError("nested curve needs a nonempty base active set");
  if (start_size < 1) throw DataError("start size must be at least 1");

  std::vector<std::pair<double, int>> ranked;  // (measure, predictor)
  for (const auto& e : report.entries) {
    if (e.excluded.size() != 1) continue;
    const double measure =
        ordering == NestedOrdering::model_pvalue
            ? e.model_pvalue
            : (e.score.defined ? e.score.value
                               : std::numeric_limits<double>::infinity());
    ranked.emplace_back(measure, e.excluded[0]);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.first < b.first;
                   });
  const int total = int(ranked.size());
  if (start_size > total)
    throw DataError("start size exceeds the number of ranked predictors");

  std::vector<std::pair<int, double>> curve;
  for (int k = start_size; k <= total; ++k) {
    if (k + 1 > train.n())
      throw DataError("unpenalized refit is singular: more parameters than rows");
    std::vector<int> keep;
    for (int i = 0; i < k; ++i) keep.push_back(ranked[std::size_t(i)].second);
    std::sort(keep.begin(), keep.end());

    Dataset sub_train, sub_test;
    sub_train.family = sub_test.family = train.family;
    sub_train.y = train.y;
    sub_test.y = test.y;
    sub_train.x.resize(train.n(), k);
    sub_test.x.resize(test.n(), k);
    for (int i = 0; i < k; ++i) {
      sub_train.x.col(i) = train.x.col(keep[std::size_t(i)]);
      sub_test.x.col(i) = test.x.col(keep[std::size_t(i)]);
      sub_train.names.push_back(train.names[std::size_t(keep[std::size_t(i)])]);
      sub_test.names.push_back(sub_train.names.back());
    }

    auto [sd, info] = standardize(sub_train);
    const LassoFit fit = fit_lasso(sd.x, sd.y, train.family, 0.0);
    const Coefficients coef = destandardize(fit.intercept, fit.beta, info);
    curve.emplace_back(k, held_out_error(sub_test, coef));
  }
  return curve;
}

}  // namespace nextdoor
