#pragma once

#include <Eigen/Dense>

namespace nextdoor {

// Lower Cholesky factor of a symmetric PSD matrix.  Sample covariances are
// often numerically rank-deficient, so on failure an escalating diagonal
// jitter (1e-12 * trace/dim, then x10, up to three retries) is added before
// giving up.  A zero-trace matrix factors to zero.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& s);

}  // namespace nextdoor
