#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nextdoor/dataset.hpp"

namespace nextdoor {

// Solution of the l1-penalized problem at a single penalty value, on the
// standardized scale the solver works in.  For the gaussian family the
// problem carries no intercept (the response is centered before solving), so
// `intercept` is 0; for the binomial family the intercept is fit unpenalized.
struct LassoFit {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<int> active_set;  // j with beta[j] != 0, ascending
  std::vector<int> excluded;    // coordinates pinned to zero, ascending
  int n_iter = 0;               // coordinate-descent sweeps, all phases
  double max_kkt_violation = 0.0;
};

struct LambdaGrid {
  std::vector<double> values;  // strictly decreasing, all positive
};

// Thrown when the solver exhausts its iteration budget.  The last iterate is
// attached so callers can report where the search stalled.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& msg, LassoFit last)
      : NumericalError(msg), last_iterate(std::move(last)) {}
  LassoFit last_iterate;
};

// Penalty grid from lambda_max = max_j |x_j^T (y - mean(y))| / n down to
// ratio * lambda_max, log-equally spaced.  Expects standardized x.
LambdaGrid lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       Family family, int m, double ratio);

// Minimizes
//   gaussian:  (1/2n) ||y - x b||^2 + lambda |b|_1
//   binomial:  (1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] + lambda |b|_1,
//              eta_i = b0 + x_i^T b
// subject to b[j] = 0 for j in `excluded`.  x must be standardized (centered
// columns, unit 1/n variance or zeroed); y must be centered for gaussian and
// in {0,1} for binomial.
LassoFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   Family family, double lambda,
                   const std::vector<int>& excluded = {},
                   const LassoFit* warm = nullptr);

// Fits every lambda in order, warm-starting each fit from the previous one.
std::vector<LassoFit> fit_path(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, Family family,
                               const std::vector<double>& lambdas,
                               const std::vector<int>& excluded = {});

// Independent stationarity check: largest violation of
//   |grad_j| <= lambda           when beta[j] == 0
//   grad_j = -lambda sign(beta_j) otherwise
// over non-excluded coordinates (plus the intercept gradient for binomial).
double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     Family family, double lambda, double intercept,
                     const Eigen::VectorXd& beta,
                     const std::vector<int>& excluded = {});

// Penalized objective at an arbitrary point, same conventions as fit_lasso.
double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       Family family, double lambda, double intercept,
                       const Eigen::VectorXd& beta);

}  // namespace nextdoor
