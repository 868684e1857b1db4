#include "doctest.h"
#include "nextdoor/bootstrap.hpp"
#include "nextdoor/lasso.hpp"
#include "nextdoor/rng.hpp"

#include <cmath>

using namespace nextdoor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Base columns around per-column means; exclusion columns are the base plus
// `gap` plus independent noise, giving a paired 2m loss matrix.
CvLossMatrix synthetic_losses(int n, int m, double gap, double noise_sd,
                              uint64_t seed) {
  RngStream r(seed);
  CvLossMatrix M;
  M.lambdas.assign(std::size_t(m), 0.0);
  for (int k = 0; k < m; ++k) M.lambdas[std::size_t(k)] = 1.0 / (k + 1);
  M.losses.resize(n, 2 * m);
  for (int k = 0; k < m; ++k) {
    const double mu = 1.0 + 0.05 * k;
    for (int i = 0; i < n; ++i) {
      const double base = mu + 0.3 * r.normal();
      M.losses(i, k) = base;
      M.losses(i, m + k) = base + gap + noise_sd * r.normal();
    }
  }
  return M;
}

}  // namespace

TEST_SUITE("bootstrap") {

TEST_CASE("mean rescale reproduces the two-point worked example") {
  VectorXd q(2);
  q << 1.0, 3.0;
  const VectorXd q_s = mean_rescale_group(q, MatrixXd::Identity(2, 2), 100);
  // SS = 2, correction = 2/100 - 2/200 = 0.01, factor = sqrt(1.99/2)
  const double root = std::sqrt(0.995);
  CHECK(q_s(0) == doctest::Approx(2.0 - root).epsilon(1e-14));
  CHECK(q_s(1) == doctest::Approx(2.0 + root).epsilon(1e-14));
}

TEST_CASE("mean rescale keeps group means and handles edge cases") {
  VectorXd q(3);
  q << 0.5, 0.9, 0.7;

  // no estimation noise: nothing to remove
  const VectorXd same = mean_rescale_group(q, MatrixXd::Zero(3, 3), 50);
  CHECK((same - q).cwiseAbs().maxCoeff() < 1e-15);

  // overwhelming noise: the bracket clips at zero, group collapses
  const VectorXd flat =
      mean_rescale_group(q, 1000.0 * MatrixXd::Identity(3, 3), 10);
  CHECK(flat(0) == doctest::Approx(q.mean()));
  CHECK(flat(1) == doctest::Approx(q.mean()));
  CHECK(flat(2) == doctest::Approx(q.mean()));

  // a constant group stays put
  const VectorXd constant =
      mean_rescale_group(VectorXd::Constant(4, 2.5),
                         MatrixXd::Identity(4, 4), 20);
  CHECK((constant.array() == 2.5).all());

  // generic case preserves the mean exactly
  const VectorXd shrunk =
      mean_rescale_group(q, 0.4 * MatrixXd::Identity(3, 3), 30);
  CHECK(shrunk.mean() == doctest::Approx(q.mean()).epsilon(1e-14));
  CHECK((shrunk.array() - shrunk.mean()).abs().maxCoeff() <
        (q.array() - q.mean()).abs().maxCoeff());
}

TEST_CASE("paired rescale works per group and the population shift is exact") {
  CvLossMatrix M = synthetic_losses(60, 3, 0.2, 0.1, 7);
  const VectorXd q = M.losses.colwise().mean();
  const CovarianceEstimate cov = sample_covariance(M.losses);
  const VectorXd q_s = mean_rescale(q, cov, 3);
  CHECK(q_s.head(3).mean() == doctest::Approx(q.head(3).mean()).epsilon(1e-13));
  CHECK(q_s.tail(3).mean() == doctest::Approx(q.tail(3).mean()).epsilon(1e-13));

  const MatrixXd pop = rescale_rows(M.losses, q_s);
  const VectorXd mean_pop = pop.colwise().mean();
  CHECK((mean_pop - q_s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reference errors follow the selection rule") {
  RandomizationParams rp;
  rp.H = 4000;
  rp.seed = 3;

  // m = 1: no selection, exact values
  VectorXd two(2);
  two << 0.8, 1.3;
  CovarianceEstimate cov1;
  cov1.sigma_hat = 0.2 * MatrixXd::Identity(2, 2);
  cov1.sigma0_sq = 0.2;
  cov1.n_samples = 100;
  auto [r1, r1j] = reference_errors(two, cov1, rp, 1);
  CHECK(r1 == 0.8);
  CHECK(r1j == 1.3);

  // one base entry far below the rest: its pair is all that matters
  VectorXd gap(6);
  gap << 0.1, 2.0, 2.1, 0.55, 3.0, 3.1;
  CovarianceEstimate cov2;
  cov2.sigma_hat = 1e-4 * MatrixXd::Identity(6, 6);
  cov2.sigma0_sq = 1e-4;
  cov2.n_samples = 200;
  auto [r2, r2j] = reference_errors(gap, cov2, rp, 3);
  CHECK(r2 == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(r2j == doctest::Approx(0.55).epsilon(1e-10));

  // symmetric base pair: partners average out
  VectorXd sym(4);
  sym << 1.0, 1.0, 0.4, 0.8;
  CovarianceEstimate cov3;
  cov3.sigma_hat = 0.5 * MatrixXd::Identity(4, 4);
  cov3.sigma0_sq = 0.5;
  cov3.n_samples = 100;
  auto [r3, r3j] = reference_errors(sym, cov3, rp, 2);
  CHECK(r3 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r3j == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("exact null gives a central p-value, deterministically") {
  CvLossMatrix M = synthetic_losses(80, 3, 0.0, 0.0, 11);
  // exclusion columns are bitwise copies of the base columns
  REQUIRE((M.losses.leftCols(3).array() == M.losses.rightCols(3).array())
              .all());
  RandomizationParams rp;
  rp.H = 80;
  rp.seed = 21;
  BootstrapParams bp;
  bp.B = 400;
  bp.seed = 22;
  const double p = bootstrap_pvalue(M, rp, bp);
  CHECK(p > 0.01);
  CHECK(p < 0.99);
  CHECK(bootstrap_pvalue(M, rp, bp) == p);
}

TEST_CASE("raising the exclusion error lowers the p-value") {
  RandomizationParams rp;
  rp.H = 60;
  rp.seed = 31;
  BootstrapParams bp;
  bp.B = 300;
  bp.seed = 32;

  CvLossMatrix M = synthetic_losses(70, 3, 0.0, 0.15, 13);
  double prev = 1.1;
  bool non_increasing = true;
  for (double gap : {0.0, 0.1, 0.25, 0.6}) {
    CvLossMatrix shifted = M;
    shifted.losses.rightCols(3).array() += gap;
    const double p = bootstrap_pvalue(shifted, rp, bp);
    non_increasing = non_increasing && (p <= prev + 1e-12);
    prev = p;
  }
  CHECK(non_increasing);
  CHECK(prev < 0.05);  // a 0.6 gap on 0.15 noise is overwhelming
}

TEST_CASE("selection frequencies separate signal from noise") {
  RngStream r(17);
  Dataset d;
  const int n = 60, p = 4;
  d.x.resize(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) d.x(i, j) = r.normal();
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y(i) = 2.0 * d.x(i, 0) + 0.4 * r.normal();
  d.names = {"a", "b", "c", "d"};
  d.family = Family::gaussian;

  std::vector<double> grid;
  {
    auto [sd, info] = standardize(d);
    grid = lambda_grid(sd.x, sd.y, d.family, 8, 0.05).values;
  }
  RandomizationParams rp;
  rp.seed = 41;
  SelectionFrequencies f = selection_frequency_pass(d, grid, 5, rp, 16);
  CHECK(f.failures == 0);
  CHECK(f.active.size() == 16);
  for (int k : f.k_star) {
    CHECK(k >= 0);
    CHECK(k < 8);
  }
  const double g_signal = frequency_for(f, {0});
  const double g_noise = frequency_for(f, {3});
  CHECK(g_signal >= 0.9);
  CHECK(g_noise <= 0.5);
  CHECK(frequency_for(f, {3, 0}) >= g_signal);  // any-member rule

  // identical run reproduces identically
  SelectionFrequencies f2 = selection_frequency_pass(d, grid, 5, rp, 16);
  CHECK(frequency_for(f2, {0}) == g_signal);
  CHECK(f2.k_star == f.k_star);
}

TEST_CASE("model score divides by the frequency above the cutoff") {
  ModelScore a = model_score(0.01, 1.0);
  CHECK(a.defined);
  CHECK(a.value == doctest::Approx(0.01));

  ModelScore b = model_score(0.29, 0.78);
  CHECK(b.defined);
  CHECK(b.value == doctest::Approx(0.29 / 0.78));

  ModelScore c = model_score(0.5, 0.03);
  CHECK(!c.defined);

  CHECK(model_score(1.0, 1.0).value == doctest::Approx(1.0));
  CHECK_THROWS_AS(model_score(1.5, 0.5), DataError);
}

}  // TEST_SUITE
