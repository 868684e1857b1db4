#include "nextdoor/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nextdoor {
namespace {

// Internal targets are one order stricter than the public contract
// (1e-6 gaussian / 1e-5 binomial) so downstream checks hold with margin.
constexpr double kCoefTol = 1e-7;      // max coefficient change per sweep
constexpr double kDevTol = 1e-8;       // outer-loop mean-deviance change
constexpr double kKktGaussian = 1e-7;
constexpr double kKktBinomial = 1e-6;
constexpr int kMaxSweeps = 100000;
constexpr int kMaxOuter = 1000;
constexpr double kProbClamp = 1e-5;    // working-response probability clip

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Convex objectives cannot go up under exact coordinate minimization; a rise
// beyond rounding noise means the residual bookkeeping is broken.
void check_monotone(double before, double after) {
  if (after > before + 1e-10 * (1.0 + std::abs(before)))
    throw NumericalError("coordinate descent objective increased");
}

std::vector<char> excluded_mask(int p, const std::vector<int>& excluded) {
  std::vector<char> mask(p, 0);
  for (int j : excluded) {
    if (j < 0 || j >= p) throw DataError("excluded index out of range");
    mask[j] = 1;
  }
  return mask;
}

std::vector<int> free_coordinates(const Eigen::VectorXd& colsq,
                                  const std::vector<char>& mask) {
  std::vector<int> order;
  for (int j = 0; j < colsq.size(); ++j)
    if (!mask[j] && colsq(j) > 0.0) order.push_back(j);
  return order;
}

LassoFit snapshot(const Eigen::VectorXd& beta, double intercept, double lambda,
                  int sweeps) {
  LassoFit f;
  f.beta = beta;
  f.intercept = intercept;
  f.lambda = lambda;
  f.n_iter = sweeps;
  return f;
}

// One cyclic pass over `order`; keeps r == y - x beta and returns the largest
// coefficient move.
double gaussian_sweep(const Eigen::MatrixXd& x, const Eigen::VectorXd& colsq,
                      double lambda, const std::vector<int>& order,
                      Eigen::VectorXd& beta, Eigen::VectorXd& r) {
  const double n = double(x.rows());
  double maxd = 0.0;
  for (int j : order) {
    const double old = beta(j);
    const double z = x.col(j).dot(r) / n + colsq(j) * old;
    const double next = soft_threshold(z, lambda) / colsq(j);
    if (next != old) {
      r -= (next - old) * x.col(j);
      beta(j) = next;
      maxd = std::max(maxd, std::abs(next - old));
    }
  }
  return maxd;
}

// lambda == 0 is plain least squares: solve the kept columns directly so the
// fit matches the normal equations to machine precision rather than to the
// sweep tolerance.  Rank-deficient designs get a basic solution, which still
// zeroes the gradient.
void solve_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<char>& mask, Eigen::VectorXd& beta,
                         double& kkt) {
  const int p = int(x.cols());
  std::vector<int> keep;
  for (int j = 0; j < p; ++j)
    if (!mask[j]) keep.push_back(j);
  beta.setZero();
  if (!keep.empty()) {
    Eigen::MatrixXd xk(x.rows(), Eigen::Index(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      xk.col(Eigen::Index(c)) = x.col(keep[std::size_t(c)]);
    const Eigen::VectorXd bk = xk.colPivHouseholderQr().solve(y);
    for (std::size_t c = 0; c < keep.size(); ++c)
      beta(keep[std::size_t(c)]) = bk[Eigen::Index(c)];
  }
  const Eigen::VectorXd grad = x.transpose() * (y - x * beta) / double(x.rows());
  kkt = 0.0;
  for (int j : keep) kkt = std::max(kkt, std::abs(grad(j)));
}

void solve_gaussian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda, const std::vector<char>& mask,
                    Eigen::VectorXd& beta, int& sweeps, double& kkt) {
  const double n = double(x.rows());
  const int p = int(x.cols());
  const Eigen::VectorXd colsq = x.colwise().squaredNorm() / n;
  const std::vector<int> full = free_coordinates(colsq, mask);

  for (int j = 0; j < p; ++j)
    if (mask[j] || colsq(j) <= 0.0) beta(j) = 0.0;
  Eigen::VectorXd r = y - x * beta;

  auto objective = [&] {
    return 0.5 / n * r.squaredNorm() + lambda * beta.lpNorm<1>();
  };
  auto violation = [&] {
    // fresh residual: also sheds drift accumulated by incremental updates
    r = y - x * beta;
    const Eigen::VectorXd grad = -(x.transpose() * r) / n;
    double v = 0.0;
    for (int j : full)
      v = std::max(v, beta(j) == 0.0
                          ? std::max(0.0, std::abs(grad(j)) - lambda)
                          : std::abs(grad(j) + lambda * (beta(j) > 0 ? 1 : -1)));
    return v;
  };

  double obj = objective();
  while (true) {
    if (sweeps >= kMaxSweeps)
      throw ConvergenceError("lasso did not converge",
                             snapshot(beta, 0.0, lambda, sweeps));
    const double moved = gaussian_sweep(x, colsq, lambda, full, beta, r);
    ++sweeps;
    const double now = objective();
    check_monotone(obj, now);
    obj = now;
    if (moved < kCoefTol) {
      kkt = violation();
      if (kkt <= kKktGaussian) return;
      continue;  // stationarity not yet tight enough; keep sweeping
    }
    // polish the current support before paying for another full pass
    while (sweeps < kMaxSweeps) {
      std::vector<int> active;
      for (int j : full)
        if (beta(j) != 0.0) active.push_back(j);
      const double d = gaussian_sweep(x, colsq, lambda, active, beta, r);
      ++sweeps;
      const double after = objective();
      check_monotone(obj, after);
      obj = after;
      if (d < kCoefTol) break;
    }
  }
}

void solve_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda, const std::vector<char>& mask,
                    Eigen::VectorXd& beta, double& intercept, int& sweeps,
                    double& kkt) {
  const double n = double(x.rows());
  const int p = int(x.cols());
  const Eigen::VectorXd base_colsq = x.colwise().squaredNorm() / n;
  const std::vector<int> full = free_coordinates(base_colsq, mask);

  for (int j = 0; j < p; ++j)
    if (mask[j] || base_colsq(j) <= 0.0) beta(j) = 0.0;

  auto mean_deviance = [&](const Eigen::VectorXd& eta) {
    double d = 0.0;
    for (int i = 0; i < eta.size(); ++i) {
      const double pi =
          std::clamp(logistic(eta(i)), 1e-12, 1.0 - 1e-12);
      d += y(i) > 0.5 ? -2.0 * std::log(pi) : -2.0 * std::log(1.0 - pi);
    }
    return d / n;
  };
  auto violation = [&] {
    const Eigen::VectorXd eta = (x * beta).array() + intercept;
    Eigen::VectorXd prob(eta.size());
    for (int i = 0; i < prob.size(); ++i) prob(i) = logistic(eta(i));
    const Eigen::VectorXd grad = x.transpose() * (prob - y) / n;
    double v = std::abs((prob - y).mean());  // unpenalized intercept
    for (int j : full)
      v = std::max(v, beta(j) == 0.0
                          ? std::max(0.0, std::abs(grad(j)) - lambda)
                          : std::abs(grad(j) + lambda * (beta(j) > 0 ? 1 : -1)));
    return v;
  };

  Eigen::VectorXd eta = (x * beta).array() + intercept;
  double dev = mean_deviance(eta);

  for (int outer = 0; outer < kMaxOuter; ++outer) {
    // quadratic approximation at the current iterate
    const int rows = int(x.rows());
    Eigen::VectorXd w(rows), r(rows);
    for (int i = 0; i < rows; ++i) {
      const double pi =
          std::clamp(logistic(eta(i)), kProbClamp, 1.0 - kProbClamp);
      w(i) = pi * (1.0 - pi);
      r(i) = (y(i) - pi) / w(i);  // z_i - eta_i for working response z
    }
    const double wsum = w.sum();
    Eigen::VectorXd colsq(p);
    for (int j : full) colsq(j) = x.col(j).cwiseProduct(w).dot(x.col(j)) / n;

    auto inner_objective = [&] {
      return 0.5 / n * r.cwiseProduct(w).dot(r) + lambda * beta.lpNorm<1>();
    };
    double inner_obj = inner_objective();
    while (true) {
      if (sweeps >= kMaxSweeps)
        throw ConvergenceError("lasso did not converge (binomial)",
                               snapshot(beta, intercept, lambda, sweeps));
      double maxd = 0.0;
      for (int j : full) {
        const double old = beta(j);
        const double z =
            x.col(j).cwiseProduct(w).dot(r) / n + colsq(j) * old;
        const double next = soft_threshold(z, lambda) / colsq(j);
        if (next != old) {
          r -= (next - old) * x.col(j);
          beta(j) = next;
          maxd = std::max(maxd, std::abs(next - old));
        }
      }
      const double shift = w.dot(r) / wsum;
      if (shift != 0.0) {
        intercept += shift;
        r.array() -= shift;
        maxd = std::max(maxd, std::abs(shift));
      }
      ++sweeps;
      const double after = inner_objective();
      check_monotone(inner_obj, after);
      inner_obj = after;
      if (maxd < kCoefTol) break;
    }

    eta = (x * beta).array() + intercept;
    // An unpenalized fit has no finite optimum under separation; the linear
    // predictor then runs away monotonically.  |eta| = 30 already puts every
    // probability within 1e-13 of its label.
    if (lambda == 0.0 && eta.cwiseAbs().maxCoeff() > 30.0)
      throw ConvergenceError(
          "unpenalized logistic fit diverged: classes appear separated",
          snapshot(beta, intercept, lambda, sweeps));
    const double next_dev = mean_deviance(eta);
    const bool settled = std::abs(next_dev - dev) < kDevTol;
    dev = next_dev;
    if (settled) {
      kkt = violation();
      if (kkt <= kKktBinomial) return;
    }
  }
  throw ConvergenceError(
      "logistic lasso did not converge; with lambda = 0 this typically "
      "signals separated classes",
      snapshot(beta, intercept, lambda, sweeps));
}

}  // namespace

LambdaGrid lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       Family family, int m, double ratio) {
  (void)family;  // y - mean(y) is the right score direction for both families
  if (m < 1) throw DataError("lambda grid needs at least one value");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw DataError("lambda ratio must lie in (0, 1)");
  const Eigen::VectorXd centered = y.array() - y.mean();
  // rounded up a hair so the top of the path really yields the empty model:
  // the solver's per-coordinate gradient may exceed the matrix-product form
  // of the same correlation by a few ulps
  const double lambda_max =
      (x.transpose() * centered).cwiseAbs().maxCoeff() / double(x.rows()) *
      (1.0 + 32.0 * std::numeric_limits<double>::epsilon());
  if (!(lambda_max > 0.0))
    throw DataError("penalty grid is degenerate: response is uncorrelated "
                    "with every predictor");
  LambdaGrid grid;
  grid.values.resize(m);
  for (int k = 0; k < m; ++k)
    grid.values[k] =
        m == 1 ? lambda_max
               : lambda_max * std::pow(ratio, double(k) / double(m - 1));
  return grid;
}

LassoFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   Family family, double lambda,
                   const std::vector<int>& excluded, const LassoFit* warm) {
  if (x.rows() != y.size()) throw DataError("x and y row counts differ");
  if (lambda < 0.0) throw DataError("lambda must be nonnegative");
  const int p = int(x.cols());
  const std::vector<char> mask = excluded_mask(p, excluded);

  LassoFit fit;
  fit.lambda = lambda;
  fit.excluded = excluded;
  std::sort(fit.excluded.begin(), fit.excluded.end());
  fit.excluded.erase(std::unique(fit.excluded.begin(), fit.excluded.end()),
                     fit.excluded.end());
  fit.beta = warm ? warm->beta : Eigen::VectorXd::Zero(p);
  if (fit.beta.size() != p) throw DataError("warm start has wrong dimension");
  fit.intercept = warm ? warm->intercept : 0.0;

  int sweeps = 0;
  if (family == Family::gaussian) {
    fit.intercept = 0.0;
    if (lambda == 0.0)
      solve_least_squares(x, y, mask, fit.beta, fit.max_kkt_violation);
    else
      solve_gaussian(x, y, lambda, mask, fit.beta, sweeps,
                     fit.max_kkt_violation);
  } else {
    if (!warm) {
      const double ybar = std::clamp(y.mean(), kProbClamp, 1.0 - kProbClamp);
      fit.intercept = std::log(ybar / (1.0 - ybar));
    }
    solve_binomial(x, y, lambda, mask, fit.beta, fit.intercept, sweeps,
                   fit.max_kkt_violation);
  }
  fit.n_iter = sweeps;
  for (int j = 0; j < p; ++j)
    if (fit.beta(j) != 0.0) fit.active_set.push_back(j);
  return fit;
}

std::vector<LassoFit> fit_path(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, Family family,
                               const std::vector<double>& lambdas,
                               const std::vector<int>& excluded) {
  std::vector<LassoFit> fits;
  fits.reserve(lambdas.size());
  for (double lambda : lambdas)
    fits.push_back(fit_lasso(x, y, family, lambda, excluded,
                             fits.empty() ? nullptr : &fits.back()));
  return fits;
}

double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     Family family, double lambda, double intercept,
                     const Eigen::VectorXd& beta,
                     const std::vector<int>& excluded) {
  const double n = double(x.rows());
  const std::vector<char> mask = excluded_mask(int(x.cols()), excluded);
  Eigen::VectorXd grad;
  double v = 0.0;
  if (family == Family::gaussian) {
    grad = -(x.transpose() * (y - x * beta)) / n;
  } else {
    Eigen::VectorXd prob(y.size());
    const Eigen::VectorXd eta = (x * beta).array() + intercept;
    for (int i = 0; i < prob.size(); ++i) prob(i) = logistic(eta(i));
    grad = x.transpose() * (prob - y) / n;
    v = std::abs((prob - y).mean());
  }
  for (int j = 0; j < beta.size(); ++j) {
    if (mask[j] || x.col(j).squaredNorm() <= 0.0) continue;
    v = std::max(v, beta(j) == 0.0
                        ? std::max(0.0, std::abs(grad(j)) - lambda)
                        : std::abs(grad(j) + lambda * (beta(j) > 0 ? 1 : -1)));
  }
  return v;
}

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       Family family, double lambda, double intercept,
                       const Eigen::VectorXd& beta) {
  const double n = double(x.rows());
  if (family == Family::gaussian)
    return 0.5 / n * (y - x * beta).squaredNorm() + lambda * beta.lpNorm<1>();
  const Eigen::VectorXd eta = (x * beta).array() + intercept;
  double nll = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) - y eta, computed without overflow
    const double e = eta(i);
    nll += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) -
           y(i) * e;
  }
  return nll / n + lambda * beta.lpNorm<1>();
}

}  // namespace nextdoor
