#include "nextdoor/bootstrap.hpp"

#include <cmath>

#include "nextdoor/lasso.hpp"
#include "nextdoor/mvnormal.hpp"
#include "nextdoor/parallel.hpp"

namespace nextdoor {

Eigen::VectorXd mean_rescale_group(const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& sigma_block,
                                   int n) {
  const int m = int(q.size());
  if (sigma_block.rows() != m || n < 1)
    throw DataError("mean_rescale_group: mismatched inputs");
  const double qbar = q.mean();
  const Eigen::VectorXd dev = q.array() - qbar;
  const double ss = dev.squaredNorm();
  if (ss == 0.0) return Eigen::VectorXd::Constant(m, qbar);
  const double correction = sigma_block.diagonal().sum() / n -
                            sigma_block.sum() / (double(n) * m);
  const double factor = std::sqrt(std::max(0.0, ss - correction) / ss);
  return (qbar + (factor * dev).array()).matrix();
}

Eigen::VectorXd mean_rescale(const Eigen::VectorXd& q,
                             const CovarianceEstimate& cov, int m) {
  if (q.size() != 2 * m || cov.sigma_hat.rows() != 2 * m)
    throw DataError("mean_rescale expects paired groups of m entries");
  Eigen::VectorXd out(2 * m);
  out.head(m) = mean_rescale_group(q.head(m), cov.sigma_hat.topLeftCorner(m, m),
                                   cov.n_samples);
  out.tail(m) = mean_rescale_group(q.tail(m), cov.sigma_hat.block(m, m, m, m),
                                   cov.n_samples);
  return out;
}

Eigen::MatrixXd rescale_rows(const Eigen::MatrixXd& losses,
                             const Eigen::VectorXd& q_s) {
  const Eigen::RowVectorXd shift =
      q_s.transpose() - losses.colwise().mean();
  return losses.rowwise() + shift;
}

std::pair<double, double> reference_errors(const Eigen::VectorXd& q_s,
                                           const CovarianceEstimate& cov,
                                           const RandomizationParams& rp,
                                           int m, const Eigen::VectorXd* ses) {
  if (q_s.size() != 2 * m)
    throw DataError("reference_errors expects paired groups");
  if (m == 1) return {q_s(0), q_s(1)};  // selection is certain

  Eigen::MatrixXd s = cov.sigma_hat.topLeftCorner(m, m);
  s.diagonal().array() += rp.gamma1 * cov.sigma0_sq;
  const Eigen::MatrixXd L = psd_cholesky(s);
  const double eps_sd = std::sqrt(rp.gamma1 * cov.sigma0_sq);
  const double rn = std::sqrt(double(cov.n_samples));
  const double c_alpha = std::sqrt(rp.alpha / cov.n_samples);

  double base = 0.0, partner = 0.0;
  Eigen::VectorXd u(m), eps(m);
  for (int h = 0; h < rp.H; ++h) {
    RngStream r(rp.seed, Stream::reference, std::uint64_t(h));
    for (int k = 0; k < m; ++k) u(k) = r.normal();
    for (int k = 0; k < m; ++k) eps(k) = eps_sd * r.normal();
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>() * u;
    const Eigen::VectorXd q_alpha = q_s.head(m) + eps / rn + c_alpha * z;
    const int k_star =
        rp.one_se ? one_se_from(q_alpha, *ses) : select_randomized(q_alpha, m);
    base += q_s(k_star);
    partner += q_s(m + k_star);
  }
  return {base / rp.H, partner / rp.H};
}

double bootstrap_pvalue(const CvLossMatrix& M, const RandomizationParams& rp,
                        const BootstrapParams& bp) {
  const int m = int(M.lambdas.size());
  const int n = int(M.losses.rows());
  if (M.losses.cols() != 2 * m)
    throw DataError("bootstrap_pvalue needs base and exclusion columns");
  if (bp.B < 1) throw DataError("B must be at least 1");

  const Eigen::VectorXd q = M.losses.colwise().mean();
  const CovarianceEstimate cov = sample_covariance(M.losses);
  Eigen::VectorXd ses;
  const Eigen::VectorXd* ses_ptr = nullptr;
  if (rp.one_se) {
    ses = column_ses(M.losses, m);
    ses_ptr = &ses;
  }

  const DebiasedErrors observed = debias_errors(q, cov, rp, m, ses_ptr);
  const double d_obs = observed.err_hat_j - observed.err_hat;

  const Eigen::VectorXd q_s = mean_rescale(q, cov, m);
  const Eigen::MatrixXd population = rescale_rows(M.losses, q_s);
  const auto [q_s_base, q_s_partner] =
      reference_errors(q_s, cov, rp, m, ses_ptr);
  const double center = q_s_partner - q_s_base;
  const double w_sd = bp.gamma2 * std::sqrt(cov.sigma0_sq / n);

  std::vector<char> exceeds(std::size_t(bp.B), 0);
  parallel_for(std::size_t(bp.B), [&](std::size_t b) {
    RngStream rows_rng(bp.seed, Stream::replicate, b);
    Eigen::MatrixXd resampled(n, 2 * m);
    for (int i = 0; i < n; ++i)
      resampled.row(i) = population.row(
          Eigen::Index(rows_rng.index(std::size_t(n))));
    const double w = w_sd * rows_rng.normal();

    const Eigen::VectorXd q_b = resampled.colwise().mean();
    const CovarianceEstimate cov_b = sample_covariance(resampled);
    RandomizationParams rp_b = rp;
    rp_b.seed = derive_seed(bp.seed, Stream::bootstrap, b);
    Eigen::VectorXd ses_b;
    const Eigen::VectorXd* ses_b_ptr = nullptr;
    if (rp.one_se) {
      ses_b = column_ses(resampled, m);
      ses_b_ptr = &ses_b;
    }
    const DebiasedErrors de = debias_errors(q_b, cov_b, rp_b, m, ses_b_ptr);
    exceeds[b] = (de.err_hat_j - de.err_hat) - center + w >= d_obs ? 1 : 0;
  });

  std::size_t count = 0;
  for (char e : exceeds) count += std::size_t(e);
  return double(count) / double(bp.B);
}

SelectionFrequencies selection_frequency_pass(
    const Dataset& d, const std::vector<double>& lambdas, int V,
    const RandomizationParams& rp, int n_boot) {
  const int n = int(d.n());
  const int p = int(d.p());
  const int m = int(lambdas.size());
  if (n_boot < 1) throw DataError("n_boot must be at least 1");

  const std::size_t nb = std::size_t(n_boot);
  std::vector<std::vector<char>> act(nb);
  std::vector<int> ks(nb, -1);
  std::vector<char> ok(nb, 0);

  parallel_for(nb, [&](std::size_t b) {
    const std::uint64_t s_b = derive_seed(rp.seed, Stream::frequency, b);
    RngStream rows_rng(s_b, Stream::replicate);
    std::vector<int> idx(std::size_t(n), 0);
    for (int i = 0; i < n; ++i)
      idx[std::size_t(i)] = int(rows_rng.index(std::size_t(n)));
    const Dataset res = subset_rows(d, idx);
    try {
      const FoldAssignment folds = res.fold_labels.empty()
                                       ? make_folds(n, V, s_b)
                                       : folds_from_labels(res.fold_labels);
      const Eigen::MatrixXd losses = cv_losses(res, lambdas, folds);
      const CovarianceEstimate cov = sample_covariance(losses);

      Eigen::MatrixXd s = cov.sigma_hat;
      s.diagonal().array() += rp.gamma1 * cov.sigma0_sq;
      const Eigen::MatrixXd L = psd_cholesky(s);
      RngStream noise(s_b, Stream::noise_draw, 0);
      Eigen::VectorXd u(m), eps(m);
      for (int k = 0; k < m; ++k) u(k) = noise.normal();
      const double eps_sd = std::sqrt(rp.gamma1 * cov.sigma0_sq);
      for (int k = 0; k < m; ++k) eps(k) = eps_sd * noise.normal();
      const Eigen::VectorXd z = L.triangularView<Eigen::Lower>() * u;
      const Eigen::VectorXd q_alpha =
          Eigen::VectorXd(losses.colwise().mean()) +
          eps / std::sqrt(double(n)) + std::sqrt(rp.alpha / n) * z;
      const int k_star = rp.one_se
                             ? one_se_from(q_alpha, column_ses(losses, m))
                             : select_randomized(q_alpha, m);

      // warm path down to the chosen penalty, then read the active set
      auto [std_res, info] = standardize(res);
      (void)info;
      const std::vector<double> head(lambdas.begin(),
                                     lambdas.begin() + k_star + 1);
      const std::vector<LassoFit> fits =
          fit_path(std_res.x, std_res.y, d.family, head);
      std::vector<char> mask(std::size_t(p), 0);
      for (int j : fits.back().active_set) mask[std::size_t(j)] = 1;
      act[b] = std::move(mask);
      ks[b] = k_star;
      ok[b] = 1;
    } catch (const DataError&) {
      ok[b] = 0;
    } catch (const NumericalError&) {
      ok[b] = 0;
    }
  });

  SelectionFrequencies out;
  for (std::size_t b = 0; b < std::size_t(n_boot); ++b) {
    if (!ok[b]) {
      ++out.failures;
      continue;
    }
    out.active.push_back(std::move(act[b]));
    out.k_star.push_back(ks[b]);
  }
  return out;
}

double frequency_for(const SelectionFrequencies& f,
                     const std::vector<int>& target) {
  if (f.active.empty())
    throw NumericalError("every selection-frequency resample failed");
  std::size_t hits = 0;
  for (const std::vector<char>& mask : f.active) {
    for (int j : target) {
      if (j < 0 || j >= int(mask.size()))
        throw DataError("frequency target out of range");
      if (mask[std::size_t(j)]) {
        ++hits;
        break;
      }
    }
  }
  return double(hits) / double(f.active.size());
}

ModelScore model_score(double pvalue, double gamma_j, double cutoff) {
  if (pvalue < 0.0 || pvalue > 1.0 || gamma_j < 0.0 || gamma_j > 1.0)
    throw DataError("model_score inputs outside [0, 1]");
  ModelScore s;
  s.defined = gamma_j >= cutoff;
  if (s.defined) s.value = pvalue / gamma_j;
  return s;
}

}  // namespace nextdoor
