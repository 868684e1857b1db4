#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "nextdoor/cross_validation.hpp"
#include "nextdoor/rng.hpp"

namespace nextdoor {

struct RandomizationParams {
  double alpha = 0.1;
  double gamma1 = 0.1;
  int H = 1000;
  std::uint64_t seed = 0;
  bool one_se = false;  // randomized one-SE selection instead of plain argmin
};

// Output of the randomized de-biasing pass over H noise draws.
struct DebiasedErrors {
  double err_hat = 0.0;    // mean of the inverse sequence at the selections
  double err_hat_j =       // same at the paired exclusion entries
      std::numeric_limits<double>::quiet_NaN();
  double plug_in_mean = 0.0;  // mean of the raw column means at the
                              // selections: the biased estimate
  std::vector<int> selection_counts;  // per penalty, sums to H
  int k_star_primary = 0;             // selection of the first draw
};

// One draw of the paired pseudo-error sequences
//   q_alpha = q + eps/sqrt(n) + sqrt(alpha/n) z
//   q_inv   = q + eps/sqrt(n) - sqrt(1/(n alpha)) z
// with eps ~ N(0, gamma1 sigma0^2 I) and z ~ N(0, sigma_hat +
// gamma1 sigma0^2 I); n is cov.n_samples.  Reference implementation:
// factors the full covariance on every call.
std::pair<Eigen::VectorXd, Eigen::VectorXd> pseudo_errors(
    const Eigen::VectorXd& q, const CovarianceEstimate& cov,
    const RandomizationParams& rp, RngStream& noise);

// Argmin over the first m entries, ties to the smallest index.
int select_randomized(const Eigen::VectorXd& q_alpha, int m);

// Runs H independent draws (substream h of rp.seed), selecting on the first
// m entries of the alpha sequence and averaging the inverse sequence at the
// selected entry and, when q holds 2m entries, at its exclusion partner m+k.
// Only the head block of the noise covariance is factored; the one partner
// coordinate needed per draw is sampled from its conditional law.
// `ses` (length m) is required when rp.one_se is set.
DebiasedErrors debias_errors(const Eigen::VectorXd& q,
                             const CovarianceEstimate& cov,
                             const RandomizationParams& rp, int m,
                             const Eigen::VectorXd* ses = nullptr);

}  // namespace nextdoor
