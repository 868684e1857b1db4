#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "nextdoor/cross_validation.hpp"

namespace nextdoor {

// Conditional test of "excluding the predictor does not raise the error",
// given that penalty k* won the perturbed argmin.  The perturbed column
// means are an affine function of the test statistic T, so the selection
// event pins T to an interval and the p-value is a truncated-Gaussian tail.

struct TruncationInterval {
  double a;  // -inf when no constraint binds from below
  double b;  // +inf when none binds from above
};

// Row per competitor k != k_star encoding q[k_star] - q[k] <= 0 (+1 at
// (k, k_star), -1 at (k, k)); the k_star row is zero.  B * q <= 0 holds
// exactly when k_star attains the minimum of q.
Eigen::MatrixXd affine_constraints(int k_star, int m);

// Bounds on T from the decomposition q = alpha * T + resid with resid
// independent of T: each competitor turns into a one-sided bound on T,
// lower when alpha[k_star] - alpha[k] < 0, upper when positive.
TruncationInterval truncation_interval(const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& resid,
                                       int k_star);

// log P(Z >= t) for standard normal Z, accurate in absolute terms over the
// whole line and in relative terms deep into the right tail (t up to ~700).
double log_norm_sf(double t);

// P(Z >= x | Z in (a, b)) for Z ~ N(0, sd^2), via log-scale tail ratios so
// no cancellation occurs even at |x|/sd around 40.  Exact at the ends:
// x == a gives 1, x == b gives 0.
double truncated_gaussian_sf(double x, double sd, double a, double b);

// Conditional p-value from a paired loss matrix (m base columns, m
// exclusion columns).  Draws one N(0, tau_sq) perturbation per penalty and
// an independent one for the statistic (in that order), picks
// k* = argmin of the perturbed base means, forms
// T = Q[m+k*] - Q[k*] + eps/sqrt(n), and evaluates the truncated-Gaussian
// tail of T on its selection-compatible interval at mean zero.
double post_selection_pvalue(const CvLossMatrix& M, double tau_sq,
                             std::uint64_t seed);

}  // namespace nextdoor
