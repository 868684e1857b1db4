#include "nextdoor/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "nextdoor/lasso.hpp"
#include "nextdoor/rng.hpp"

namespace nextdoor {

FoldAssignment make_folds(int n, int V, std::uint64_t seed) {
  if (V < 2 || V > n) throw DataError("fold count must lie in [2, n]");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  RngStream r(seed, Stream::folds);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[r.index(static_cast<std::size_t>(i) + 1)]);
  FoldAssignment f;
  f.V = V;
  f.fold_of.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    f.fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        i % V;
  return f;
}

FoldAssignment folds_from_labels(const std::vector<int>& labels) {
  std::map<int, int> id;  // sorted labels -> dense fold ids
  for (int l : labels) id.emplace(l, 0);
  if (id.size() < 2) throw DataError("need at least 2 distinct fold labels");
  int next = 0;
  for (auto& [label, dense] : id) dense = next++;
  FoldAssignment f;
  f.V = next;
  f.fold_of.reserve(labels.size());
  for (int l : labels) f.fold_of.push_back(id[l]);
  return f;
}

Eigen::MatrixXd cv_losses(const Dataset& d, const std::vector<double>& lambdas,
                          const FoldAssignment& folds,
                          const std::vector<int>& excluded) {
  const int n = static_cast<int>(d.n());
  const int m = static_cast<int>(lambdas.size());
  if (static_cast<int>(folds.fold_of.size()) != n)
    throw DataError("fold assignment does not match the data");

  Eigen::MatrixXd losses(n, m);
  for (int v = 0; v < folds.V; ++v) {
    std::vector<int> train, valid;
    for (int i = 0; i < n; ++i)
      (folds.fold_of[static_cast<std::size_t>(i)] == v ? valid : train)
          .push_back(i);
    if (valid.empty()) continue;
    if (train.size() < 2)
      throw DataError("fold " + std::to_string(v + 1) +
                      " leaves fewer than 2 training rows");

    auto [std_train, info] = standardize(subset_rows(d, train));
    LassoFit prev;
    for (int k = 0; k < m; ++k) {
      LassoFit fit;
      try {
        fit = fit_lasso(std_train.x, std_train.y, d.family, lambdas[k],
                        excluded, k == 0 ? nullptr : &prev);
      } catch (const ConvergenceError& e) {
        throw NumericalError("cv fold " + std::to_string(v + 1) +
                             ", penalty index " + std::to_string(k + 1) +
                             ": " + e.what());
      }
      const Coefficients coef = destandardize(fit.intercept, fit.beta, info);
      for (int i : valid) {
        const double eta = coef.intercept + d.x.row(i).dot(coef.beta);
        if (d.family == Family::gaussian) {
          const double resid = d.y(i) - eta;
          losses(i, k) = resid * resid;
        } else {
          const double raw =
              eta >= 0 ? 1.0 / (1.0 + std::exp(-eta))
                       : std::exp(eta) / (1.0 + std::exp(eta));
          const double p = std::clamp(raw, 1e-10, 1.0 - 1e-10);
          losses(i, k) = d.y(i) > 0.5 ? -2.0 * std::log(p)
                                      : -2.0 * std::log(1.0 - p);
        }
      }
      prev = std::move(fit);
    }
  }
  return losses;
}

CvLossMatrix cv_loss_matrix(const Dataset& d,
                            const std::vector<double>& lambdas,
                            const FoldAssignment& folds, int j) {
  if (j < 0 || j >= d.p()) throw DataError("excluded predictor out of range");
  CvLossMatrix out;
  out.lambdas = lambdas;
  out.excluded_predictor = j;
  out.folds = folds;
  out.family = d.family;
  const Eigen::MatrixXd base = cv_losses(d, lambdas, folds);
  const Eigen::MatrixXd excl = cv_losses(d, lambdas, folds, {j});
  out.losses.resize(base.rows(), base.cols() + excl.cols());
  out.losses << base, excl;
  return out;
}

CovarianceEstimate sample_covariance(const Eigen::MatrixXd& losses) {
  const double n = static_cast<double>(losses.rows());
  if (n < 2) throw DataError("covariance needs at least 2 rows");
  const Eigen::RowVectorXd mean = losses.colwise().mean();
  const Eigen::MatrixXd centered = losses.rowwise() - mean;
  CovarianceEstimate c;
  c.sigma_hat = centered.transpose() * centered / n;
  c.sigma0_sq = c.sigma_hat.diagonal().minCoeff();
  c.n_samples = static_cast<int>(losses.rows());
  return c;
}

int one_se_from(const Eigen::VectorXd& means, const Eigen::VectorXd& ses) {
  int k_min = 0;
  for (int k = 1; k < means.size(); ++k)
    if (means(k) < means(k_min)) k_min = k;
  const double cut = means(k_min) + ses(k_min);
  for (int k = 0; k < means.size(); ++k)  // grid descends: first hit wins
    if (means(k) <= cut) return k;
  return k_min;
}

Eigen::VectorXd column_ses(const Eigen::MatrixXd& losses, int m) {
  const double n = static_cast<double>(losses.rows());
  Eigen::VectorXd ses(m);
  for (int k = 0; k < m; ++k) {
    const double mean = losses.col(k).mean();
    const double var = (losses.col(k).array() - mean).square().sum() / n;
    ses(k) = std::sqrt(var / n);
  }
  return ses;
}

int one_se_index(const Eigen::MatrixXd& losses, int m) {
  const Eigen::VectorXd means = losses.leftCols(m).colwise().mean();
  return one_se_from(means, column_ses(losses, m));
}

}  // namespace nextdoor
