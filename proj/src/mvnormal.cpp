#include "nextdoor/mvnormal.hpp"

#include <Eigen/Cholesky>

#include "nextdoor/dataset.hpp"

namespace nextdoor {

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& s) {
  const Eigen::Index d = s.rows();
  if (d == 0) return s;
  const double trace = s.trace();
  if (trace <= 0.0) return Eigen::MatrixXd::Zero(d, d);

  double jitter = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd shifted = s;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success)
      return Eigen::MatrixXd(llt.matrixL());
    jitter = jitter == 0.0 ? 1e-12 * trace / double(d) : 10.0 * jitter;
  }
  throw NumericalError("covariance matrix is not positive semi-definite");
}

}  // namespace nextdoor
