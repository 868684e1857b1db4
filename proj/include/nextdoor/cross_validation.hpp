#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nextdoor/dataset.hpp"

namespace nextdoor {

// Partition of samples into validation folds, ids 0..V-1.
struct FoldAssignment {
  std::vector<int> fold_of;
  int V = 0;
};

// Per-sample held-out losses.  Columns 0..m-1 hold the base model along the
// penalty grid; when an exclusion block is present, columns m..2m-1 hold the
// model with `excluded_predictor` pinned to zero, at the same penalties.
struct CvLossMatrix {
  Eigen::MatrixXd losses;
  std::vector<double> lambdas;
  int excluded_predictor = -1;  // -1: base columns only
  FoldAssignment folds;
  Family family = Family::gaussian;
};

struct CovarianceEstimate {
  Eigen::MatrixXd sigma_hat;  // 1/n cross-moment matrix of loss columns
  double sigma0_sq = 0.0;     // smallest diagonal entry
  int n_samples = 0;          // rows behind the estimate (the CV sample size)
};

// Seeded balanced partition: fold sizes differ by at most one.
FoldAssignment make_folds(int n, int V, std::uint64_t seed);

// Adopt user-supplied integer labels (e.g. patient ids); at least two
// distinct values required.  Balance is whatever the user provided.
FoldAssignment folds_from_labels(const std::vector<int>& labels);

// n x m matrix of held-out losses: squared error (gaussian) or deviance
// -2[y log p + (1-y) log(1-p)] (binomial).  Each training fold is
// re-standardized before fitting; fits are warm-started along the grid
// within a fold only.
Eigen::MatrixXd cv_losses(const Dataset& d, const std::vector<double>& lambdas,
                          const FoldAssignment& folds,
                          const std::vector<int>& excluded = {});

// [base | excluding j] in one n x 2m matrix.
CvLossMatrix cv_loss_matrix(const Dataset& d,
                            const std::vector<double>& lambdas,
                            const FoldAssignment& folds, int j);

CovarianceEstimate sample_covariance(const Eigen::MatrixXd& losses);

// Index of the largest penalty whose mean loss stays within one standard
// error of the minimum; `ses` must align with `means`.
int one_se_from(const Eigen::VectorXd& means, const Eigen::VectorXd& ses);

// Same rule evaluated on the first `m` columns of a loss matrix.
int one_se_index(const Eigen::MatrixXd& losses, int m);

// Standard errors of the first m column means (1/n variance over sqrt n).
Eigen::VectorXd column_ses(const Eigen::MatrixXd& losses, int m);

}  // namespace nextdoor
