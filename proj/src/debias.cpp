#include "nextdoor/debias.hpp"

#include <cmath>

#include "nextdoor/mvnormal.hpp"

namespace nextdoor {

namespace {

void check_params(const RandomizationParams& rp, int n) {
  if (!(rp.alpha > 0.0)) throw DataError("alpha must be positive");
  if (rp.gamma1 < 0.0) throw DataError("gamma1 must be nonnegative");
  if (rp.H < 1) throw DataError("H must be at least 1");
  if (n < 1) throw DataError("covariance estimate carries no sample size");
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> pseudo_errors(
    const Eigen::VectorXd& q, const CovarianceEstimate& cov,
    const RandomizationParams& rp, RngStream& noise) {
  const int d = int(q.size());
  const int n = cov.n_samples;
  check_params(rp, n);
  if (cov.sigma_hat.rows() != d)
    throw DataError("covariance dimension does not match q");

  Eigen::MatrixXd s = cov.sigma_hat;
  s.diagonal().array() += rp.gamma1 * cov.sigma0_sq;
  const Eigen::MatrixXd L = psd_cholesky(s);

  const double eps_sd = std::sqrt(rp.gamma1 * cov.sigma0_sq);
  Eigen::VectorXd eps(d), u(d);
  for (int k = 0; k < d; ++k) eps(k) = eps_sd * noise.normal();
  for (int k = 0; k < d; ++k) u(k) = noise.normal();
  const Eigen::VectorXd z = L.triangularView<Eigen::Lower>() * u;

  const double rn = std::sqrt(double(n));
  const Eigen::VectorXd common = q + eps / rn;
  return {common + std::sqrt(rp.alpha / n) * z,
          common - z / std::sqrt(n * rp.alpha)};
}

int select_randomized(const Eigen::VectorXd& q_alpha, int m) {
  int best = 0;
  for (int k = 1; k < m; ++k)
    if (q_alpha(k) < q_alpha(best)) best = k;
  return best;
}

DebiasedErrors debias_errors(const Eigen::VectorXd& q,
                             const CovarianceEstimate& cov,
                             const RandomizationParams& rp, int m,
                             const Eigen::VectorXd* ses) {
  const int d = int(q.size());
  const int n = cov.n_samples;
  check_params(rp, n);
  if (d != m && d != 2 * m)
    throw DataError("q must hold m or 2m entries");
  if (cov.sigma_hat.rows() != d)
    throw DataError("covariance dimension does not match q");
  if (rp.one_se && (ses == nullptr || ses->size() != m))
    throw DataError("one-SE selection needs m standard errors");
  const bool paired = d == 2 * m;

  Eigen::MatrixXd s = cov.sigma_hat;
  s.diagonal().array() += rp.gamma1 * cov.sigma0_sq;
  const Eigen::MatrixXd L = psd_cholesky(s.topLeftCorner(m, m));

  // Conditional sampling of the one exclusion-partner coordinate per draw:
  // with z_head = L u, E[z_{m+k} | u] = G.col(k).dot(u) for G = L^{-1} C^T
  // and residual sd sqrt(S_{m+k,m+k} - |G.col(k)|^2).
  Eigen::MatrixXd g;
  Eigen::VectorXd tail_sd;
  if (paired) {
    const Eigen::MatrixXd c = s.block(m, 0, m, m);
    // A zero factor means the head block vanishes, and PSD-ness then forces
    // the cross block to vanish too: the partner draw is its marginal.
    g = L.diagonal().minCoeff() > 0.0
            ? Eigen::MatrixXd(
                  L.triangularView<Eigen::Lower>().solve(c.transpose()))
            : Eigen::MatrixXd::Zero(m, m);
    tail_sd.resize(m);
    for (int k = 0; k < m; ++k)
      tail_sd(k) = std::sqrt(
          std::max(0.0, s(m + k, m + k) - g.col(k).squaredNorm()));
  }

  const double eps_sd = std::sqrt(rp.gamma1 * cov.sigma0_sq);
  const double rn = std::sqrt(double(n));
  const double c_alpha = std::sqrt(rp.alpha / n);
  const double c_inv = 1.0 / std::sqrt(n * rp.alpha);

  DebiasedErrors out;
  out.selection_counts.assign(std::size_t(m), 0);
  out.err_hat = 0.0;
  out.plug_in_mean = 0.0;
  double err_j = 0.0;

  Eigen::VectorXd u(m), eps(m), q_alpha(m);
  for (int h = 0; h < rp.H; ++h) {
    RngStream r(rp.seed, Stream::noise_draw, std::uint64_t(h));
    for (int k = 0; k < m; ++k) u(k) = r.normal();
    for (int k = 0; k < m; ++k) eps(k) = eps_sd * r.normal();
    const Eigen::VectorXd z = L.triangularView<Eigen::Lower>() * u;
    q_alpha = q.head(m) + eps / rn + c_alpha * z;

    const int k_star =
        rp.one_se ? one_se_from(q_alpha, *ses) : select_randomized(q_alpha, m);
    ++out.selection_counts[std::size_t(k_star)];
    if (h == 0) out.k_star_primary = k_star;

    out.err_hat += q(k_star) + eps(k_star) / rn - c_inv * z(k_star);
    out.plug_in_mean += q(k_star);
    if (paired) {
      const double u_tail = r.normal();
      const double eps_tail = eps_sd * r.normal();
      const double z_tail =
          g.col(k_star).dot(u) + tail_sd(k_star) * u_tail;
      err_j += q(m + k_star) + eps_tail / rn - c_inv * z_tail;
    }
  }
  out.err_hat /= rp.H;
  out.plug_in_mean /= rp.H;
  if (paired) out.err_hat_j = err_j / rp.H;
  return out;
}

}  // namespace nextdoor
