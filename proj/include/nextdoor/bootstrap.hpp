#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "nextdoor/cross_validation.hpp"
#include "nextdoor/debias.hpp"

namespace nextdoor {

struct BootstrapParams {
  int B = 10000;
  double gamma2 = 0.05;
  std::uint64_t seed = 0;
};

// Shrinks the entries of one group of column means toward their mean so the
// group's dispersion matches the underlying errors rather than the noisy
// estimates: factor sqrt([SS - (sum_k S_kk/n - sum_{k,k'} S_{kk'}/(n m))]_+
// / SS) around the group mean; a zero-SS group collapses to its mean.
Eigen::VectorXd mean_rescale_group(const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& sigma_block, int n);

// Applies the rescale separately to the base group (first m) and the
// exclusion group (last m).
Eigen::VectorXd mean_rescale(const Eigen::VectorXd& q,
                             const CovarianceEstimate& cov, int m);

// The bootstrap population: every loss row shifted so its column means land
// exactly on q_s.
Eigen::MatrixXd rescale_rows(const Eigen::MatrixXd& losses,
                             const Eigen::VectorXd& q_s);

// Reference test errors of the selection rule on the rescaled population:
// Monte Carlo means of q_s[k*] and q_s[m+k*] under rp.H fresh noise draws
// (exact when m == 1).  `ses` feeds the one-SE criterion when configured.
std::pair<double, double> reference_errors(const Eigen::VectorXd& q_s,
                                           const CovarianceEstimate& cov,
                                           const RandomizationParams& rp,
                                           int m,
                                           const Eigen::VectorXd* ses = nullptr);

// One-sided bootstrap p-value for "excluding the predictor does not raise
// the error": resamples the rescaled population, re-runs the de-biasing on
// every replicate, centers by the reference errors, adds the degeneracy
// guard w_b ~ N(0, gamma2^2 sigma0^2 / n) and compares against the observed
// de-biased gap.
double bootstrap_pvalue(const CvLossMatrix& M, const RandomizationParams& rp,
                        const BootstrapParams& bp);

// Shared paired-bootstrap selection pass: refit on each resample of (X, y),
// select a penalty by the randomized criterion, record the active set of the
// resample's full fit at that penalty.
struct SelectionFrequencies {
  std::vector<std::vector<char>> active;  // successful resamples x predictors
  std::vector<int> k_star;                // chosen penalty per resample
  int failures = 0;                       // resamples dropped for solver/fold errors
};

SelectionFrequencies selection_frequency_pass(const Dataset& d,
                                              const std::vector<double>& lambdas,
                                              int V,
                                              const RandomizationParams& rp,
                                              int n_boot);

// Fraction of successful resamples in which any member of `target` is active.
double frequency_for(const SelectionFrequencies& f,
                     const std::vector<int>& target);

// s = pvalue / gamma_j, defined only when the selection frequency clears the
// cutoff; an undefined score is never rejectable.
struct ModelScore {
  bool defined = false;
  double value = 0.0;
};
ModelScore model_score(double pvalue, double gamma_j, double cutoff = 0.05);

}  // namespace nextdoor
