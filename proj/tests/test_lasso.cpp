#include "doctest.h"
#include "nextdoor/lasso.hpp"
#include "nextdoor/rng.hpp"

#include <Eigen/QR>
#include <cmath>

using namespace nextdoor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(int n, int p, uint64_t seed) {
  RngStream r(seed);
  MatrixXd x(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = r.normal();
  return x;
}

MatrixXd standardize_cols(MatrixXd x) {
  for (int j = 0; j < x.cols(); ++j) {
    x.col(j).array() -= x.col(j).mean();
    const double s = std::sqrt(x.col(j).squaredNorm() / double(x.rows()));
    if (s > 0) x.col(j) /= s;
  }
  return x;
}

// columns orthonormal under the 1/n inner product: x^T x / n = I
MatrixXd orthonormal_design(int n, int p, uint64_t seed) {
  const MatrixXd a = random_matrix(n, p, seed);
  const MatrixXd q =
      Eigen::HouseholderQR<MatrixXd>(a).householderQ() *
      MatrixXd::Identity(n, p);
  return std::sqrt(double(n)) * q;
}

double soft(double z, double t) {
  return z > t ? z - t : (z < -t ? z + t : 0.0);
}

// Unpenalized logistic MLE by full Newton steps — independent of the
// coordinate-descent solver under test.
std::pair<double, VectorXd> newton_logistic(const MatrixXd& x,
                                            const VectorXd& y) {
  const int n = int(x.rows()), p = int(x.cols());
  MatrixXd xx(n, p + 1);
  xx.col(0).setOnes();
  xx.rightCols(p) = x;
  VectorXd th = VectorXd::Zero(p + 1);
  for (int it = 0; it < 100; ++it) {
    const VectorXd eta = xx * th;
    VectorXd prob(n), w(n);
    for (int i = 0; i < n; ++i) {
      prob(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const VectorXd g = xx.transpose() * (prob - y) / n;
    const MatrixXd h = xx.transpose() * w.asDiagonal() * xx / n;
    const VectorXd step = h.ldlt().solve(g);
    th -= step;
    if (step.cwiseAbs().maxCoeff() < 1e-12) break;
  }
  return {th(0), th.tail(p)};
}

}  // namespace

TEST_SUITE("lasso") {

TEST_CASE("lambda grid endpoints and log spacing") {
  // x1 = (1,-1,1,-1), x2 = (1,1,-1,-1): orthonormal under 1/n, zero mean
  MatrixXd x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;
  const VectorXd y = 0.7 * x.col(0) + 0.2 * x.col(1);

  LambdaGrid g1 = lambda_grid(x, y, Family::gaussian, 1, 0.5);
  REQUIRE(g1.values.size() == 1);
  CHECK(g1.values[0] == doctest::Approx(0.7).epsilon(1e-12));

  LambdaGrid g3 = lambda_grid(x, y, Family::gaussian, 3, 0.01);
  REQUIRE(g3.values.size() == 3);
  CHECK(g3.values[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(g3.values[1] == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(g3.values[2] == doctest::Approx(0.007).epsilon(1e-12));
  CHECK(std::is_sorted(g3.values.rbegin(), g3.values.rend()));

  CHECK_THROWS_AS(lambda_grid(x, VectorXd::Ones(4), Family::gaussian, 5, 0.01),
                  DataError);  // constant response: lambda_max = 0
}

TEST_CASE("orthonormal design recovers the soft-threshold closed form") {
  MatrixXd x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;
  const VectorXd y = 0.5 * x.col(0) + 0.5 * x.col(1);

  // threshold exceeds every correlation
  LassoFit hard = fit_lasso(x, y, Family::gaussian, 1.0);
  CHECK(hard.beta(0) == 0.0);
  CHECK(hard.beta(1) == 0.0);
  CHECK(hard.active_set.empty());

  LassoFit soft_fit = fit_lasso(x, y, Family::gaussian, 0.2);
  CHECK(soft_fit.beta(0) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(soft_fit.beta(1) == doctest::Approx(0.3).epsilon(1e-10));

  // larger random instance against the same closed form
  const MatrixXd q = orthonormal_design(40, 6, 91);
  const VectorXd yr = random_matrix(40, 1, 92).col(0);
  const VectorXd corr = q.transpose() * yr / 40.0;
  for (double lambda : {0.02, 0.1, 0.3}) {
    LassoFit f = fit_lasso(q, yr, Family::gaussian, lambda);
    for (int j = 0; j < 6; ++j)
      CHECK(f.beta(j) == doctest::Approx(soft(corr(j), lambda)).epsilon(1e-9));
  }
}

TEST_CASE("zero penalty reproduces least squares") {
  const MatrixXd x = standardize_cols(random_matrix(30, 5, 7));
  VectorXd y = x * VectorXd::LinSpaced(5, 1.0, -1.0);
  RngStream noise(8);
  for (int i = 0; i < 30; ++i) y(i) += 0.3 * noise.normal();
  y.array() -= y.mean();

  const VectorXd ols =
      (x.transpose() * x).ldlt().solve(x.transpose() * y);
  LassoFit f = fit_lasso(x, y, Family::gaussian, 0.0);
  CHECK((f.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("solver matches a dense grid search on a 3-predictor problem") {
  const int n = 20;
  const MatrixXd x = standardize_cols(random_matrix(n, 3, 21));
  VectorXd y = 1.2 * x.col(0) - 0.8 * x.col(1);
  RngStream noise(22);
  for (int i = 0; i < n; ++i) y(i) += 0.5 * noise.normal();
  y.array() -= y.mean();
  const double lambda = 0.17;

  // exhaustive scan of beta in [-5,5]^3, step 0.01; the cubic term is
  // evaluated in O(1) from per-(b1,b2) sufficient statistics
  const double a3 = x.col(2).squaredNorm() / n;
  double best = std::numeric_limits<double>::infinity();
  VectorXd r1(n), r12(n);
  for (int i1 = 0; i1 <= 1000; ++i1) {
    const double b1 = (i1 - 500) * 0.01;
    r1 = y - b1 * x.col(0);
    r12 = r1 + 5.0 * x.col(1);
    for (int i2 = 0; i2 <= 1000; ++i2) {
      const double b2 = (i2 - 500) * 0.01;
      if (i2 > 0) r12 -= 0.01 * x.col(1);
      const double f0 = 0.5 / n * r12.squaredNorm();
      const double c = x.col(2).dot(r12) / n;
      const double s12 = std::abs(b1) + std::abs(b2);
      for (int i3 = 0; i3 <= 1000; ++i3) {
        const double b3 = (i3 - 500) * 0.01;
        const double f = f0 - c * b3 + 0.5 * a3 * b3 * b3 +
                         lambda * (s12 + std::abs(b3));
        if (f < best) best = f;
      }
    }
  }

  LassoFit fit = fit_lasso(x, y, Family::gaussian, lambda);
  const double obj =
      lasso_objective(x, y, Family::gaussian, lambda, 0.0, fit.beta);
  CHECK(obj <= best + 1e-4);
}

TEST_CASE("excluded coordinates stay bitwise zero and cost optimality") {
  const int n = 60;
  MatrixXd x = random_matrix(n, 3, 33);
  x.col(1) = 0.9 * x.col(0) + 0.45 * x.col(1);  // stand-in predictor
  x = standardize_cols(x);
  VectorXd y = 3.0 * x.col(0);
  RngStream noise(34);
  for (int i = 0; i < n; ++i) y(i) += 0.1 * noise.normal();
  y.array() -= y.mean();

  LassoFit free = fit_lasso(x, y, Family::gaussian, 0.05);
  LassoFit constrained = fit_lasso(x, y, Family::gaussian, 0.05, {0}, &free);
  CHECK(constrained.beta(0) == 0.0);
  CHECK(constrained.excluded == std::vector<int>{0});
  CHECK(constrained.beta(1) > 0.5);  // the correlated column absorbs signal

  const double obj_free =
      lasso_objective(x, y, Family::gaussian, 0.05, 0.0, free.beta);
  const double obj_con =
      lasso_objective(x, y, Family::gaussian, 0.05, 0.0, constrained.beta);
  CHECK(obj_con >= obj_free - 1e-12);

  CHECK_THROWS_AS(fit_lasso(x, y, Family::gaussian, 0.05, {7}), DataError);
}

TEST_CASE("warm-started path agrees with cold starts") {
  const MatrixXd x = standardize_cols(random_matrix(50, 10, 55));
  VectorXd y = x.leftCols(3) * Eigen::Vector3d(2.0, -1.0, 0.5);
  RngStream noise(56);
  for (int i = 0; i < 50; ++i) y(i) += noise.normal();
  y.array() -= y.mean();

  LambdaGrid grid = lambda_grid(x, y, Family::gaussian, 20, 0.01);
  std::vector<LassoFit> path = fit_path(x, y, Family::gaussian, grid.values);
  REQUIRE(path.size() == 20);
  for (int k : {0, 5, 10, 19}) {
    LassoFit cold = fit_lasso(x, y, Family::gaussian, grid.values[k]);
    const double warm_obj = lasso_objective(x, y, Family::gaussian,
                                            grid.values[k], 0.0, path[k].beta);
    const double cold_obj = lasso_objective(x, y, Family::gaussian,
                                            grid.values[k], 0.0, cold.beta);
    CHECK(std::abs(warm_obj - cold_obj) < 1e-7);
  }
  // every fit on the path satisfies stationarity independently
  for (const LassoFit& f : path) {
    CHECK(f.max_kkt_violation <= 1e-6);
    CHECK(kkt_violation(x, y, Family::gaussian, f.lambda, 0.0, f.beta) <=
          1e-6);
    for (int j : f.active_set) CHECK(f.beta(j) != 0.0);
  }
  // at lambda >= lambda_max nothing enters
  LassoFit empty =
      fit_lasso(x, y, Family::gaussian, grid.values[0] * 1.0001);
  CHECK(empty.active_set.empty());
}

TEST_CASE("logistic fit matches a Newton oracle at zero penalty") {
  const int n = 300;
  const MatrixXd x = standardize_cols(random_matrix(n, 4, 77));
  const VectorXd eta =
      (x * Eigen::Vector4d(1.5, -1.0, 0.0, 0.0)).array() + 0.3;
  VectorXd y(n);
  RngStream coin(78);
  for (int i = 0; i < n; ++i)
    y(i) = coin.uniform() < 1.0 / (1.0 + std::exp(-eta(i))) ? 1.0 : 0.0;

  auto [b0, beta] = newton_logistic(x, y);
  LassoFit f = fit_lasso(x, y, Family::binomial, 0.0);
  CHECK(std::abs(f.intercept - b0) < 1e-6);
  CHECK((f.beta - beta).cwiseAbs().maxCoeff() < 1e-6);

  LassoFit pen = fit_lasso(x, y, Family::binomial, 0.05);
  CHECK(pen.max_kkt_violation <= 1e-5);
  CHECK(kkt_violation(x, y, Family::binomial, 0.05, pen.intercept, pen.beta) <=
        1e-5);
  CHECK(pen.beta(0) > 0.0);
  CHECK(pen.beta(1) < 0.0);
}

TEST_CASE("separated classes make the unpenalized logistic fit error out") {
  const int n = 40;
  const MatrixXd x = standardize_cols(random_matrix(n, 1, 99));
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = x(i, 0) > 0 ? 1.0 : 0.0;
  CHECK_THROWS_AS(fit_lasso(x, y, Family::binomial, 0.0), ConvergenceError);
  // the penalty restores a finite optimum
  LassoFit pen = fit_lasso(x, y, Family::binomial, 0.1);
  CHECK(pen.max_kkt_violation <= 1e-5);
}

}  // TEST_SUITE
