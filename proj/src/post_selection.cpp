#include "nextdoor/post_selection.hpp"

#include <cmath>
#include <limits>

#include "nextdoor/debias.hpp"
#include "nextdoor/rng.hpp"

namespace nextdoor {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2*pi)
}  // namespace

Eigen::MatrixXd affine_constraints(int k_star, int m) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    if (k == k_star) continue;
    b(k, k_star) = 1.0;
    b(k, k) = -1.0;
  }
  return b;
}

TruncationInterval truncation_interval(const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& resid,
                                       int k_star) {
  if (alpha.size() != resid.size())
    throw DataError("truncation_interval: mismatched decomposition vectors");
  if (k_star < 0 || k_star >= alpha.size())
    throw DataError("truncation_interval: selected index out of range");
  TruncationInterval t{-kInf, kInf};
  for (int k = 0; k < alpha.size(); ++k) {
    if (k == k_star) continue;
    const double slope = alpha(k_star) - alpha(k);
    if (slope == 0.0) continue;  // competitor carries no information on T
    const double ratio = (resid(k) - resid(k_star)) / slope;
    if (slope < 0.0)
      t.a = std::max(t.a, ratio);
    else
      t.b = std::min(t.b, ratio);
  }
  return t;
}

double log_norm_sf(double t) {
  if (t > 34.0) {
    // erfc underflows soon after this point; six-term tail expansion of the
    // Mills ratio is already at machine precision here
    const double i2 = 1.0 / (t * t);
    const double series =
        1.0 + i2 * (-1.0 + i2 * (3.0 + i2 * (-15.0 +
                                             i2 * (105.0 + i2 * -945.0))));
    return -0.5 * t * t - std::log(t) - kLogSqrt2Pi + std::log(series);
  }
  if (t < -34.0)  // 1 - (vanishing right tail), kept exact in absolute terms
    return std::log1p(-std::exp(log_norm_sf(-t)));
  return std::log(0.5 * std::erfc(t / std::sqrt(2.0)));
}

double truncated_gaussian_sf(double x, double sd, double a, double b) {
  if (!(sd > 0.0)) throw DataError("truncated_gaussian_sf: sd must be > 0");
  if (!(a < b)) throw DataError("truncated_gaussian_sf: empty interval");
  if (x < a || x > b)
    throw DataError("truncated_gaussian_sf: x outside the interval");
  const double xs = x / sd, as = a / sd, bs = b / sd;

  // Both branches form tail-probability ratios entirely in log space; the
  // subtractions happen through expm1, never between nearly equal tails.
  if (xs >= 0.0) {
    const double lx = log_norm_sf(xs);
    const double la = log_norm_sf(as);
    const double lb = bs == kInf ? -kInf : log_norm_sf(bs);
    return std::exp(lx - la) * (-std::expm1(lb - lx)) / (-std::expm1(lb - la));
  }
  // mirror: work with lower tails log P(Z <= t) = log_norm_sf(-t)
  const double fx = log_norm_sf(-xs);
  const double fa = as == -kInf ? -kInf : log_norm_sf(-as);
  const double fb = log_norm_sf(-bs);
  return std::expm1(fx - fb) / std::expm1(fa - fb);
}

double post_selection_pvalue(const CvLossMatrix& M, double tau_sq,
                             std::uint64_t seed) {
  if (!(tau_sq > 0.0))
    throw DataError("post_selection_pvalue: tau_sq must be > 0");
  if (M.losses.cols() % 2 != 0 || M.losses.cols() == 0)
    throw DataError("post_selection_pvalue expects paired loss columns");
  const int m = int(M.losses.cols()) / 2;
  const double n = double(M.losses.rows());
  const double rn = std::sqrt(n);

  const Eigen::VectorXd q = M.losses.colwise().mean();
  const CovarianceEstimate cov = sample_covariance(M.losses);
  const Eigen::MatrixXd& s = cov.sigma_hat;

  RngStream r(seed, Stream::post_selection);
  const double tau = std::sqrt(tau_sq);
  Eigen::VectorXd q_tilde(m);
  for (int k = 0; k < m; ++k) q_tilde(k) = q(k) + tau * r.normal() / rn;
  const double eps_t = tau * r.normal();

  const int k_star = select_randomized(q_tilde, m);
  const double t_obs = q(m + k_star) - q(k_star) + eps_t / rn;

  const double var_t = s(m + k_star, m + k_star) + s(k_star, k_star) -
                       2.0 * s(k_star, m + k_star) + tau_sq;
  if (!(var_t > 0.0))
    throw NumericalError("post_selection_pvalue: statistic variance vanished");

  Eigen::VectorXd alpha(m), resid(m);
  for (int k = 0; k < m; ++k) {
    alpha(k) = (s(m + k_star, k) - s(k_star, k)) / var_t;
    resid(k) = q_tilde(k) - alpha(k) * t_obs;
  }
  const TruncationInterval iv = truncation_interval(alpha, resid, k_star);

  // the observed draw satisfies its own selection constraints; allow only
  // rounding-level escape before clamping back onto the interval
  const double slack = 1e-9 * (1.0 + std::abs(t_obs));
  if (t_obs < iv.a - slack || t_obs > iv.b + slack)
    throw NumericalError(
        "post_selection_pvalue: statistic escaped its truncation interval");
  const double t_in = std::min(std::max(t_obs, iv.a), iv.b);

  return truncated_gaussian_sf(t_in, std::sqrt(var_t / n), iv.a, iv.b);
}

}  // namespace nextdoor
