#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nextdoor/analysis.hpp"
#include "nextdoor/dataset.hpp"

namespace nextdoor {

enum class Design { orthogonal, redundant1, correlated, redundant2 };

Design design_from_name(const std::string& name);
std::string design_name(Design d);

// Synthetic regression: coefficients 2/j on the first s predictors,
// standard-normal noise.  Orthogonal: iid N(0,1) columns.  Redundant I:
// second half mirrors the first as 0.95 x + 0.05 w.  Correlated: unit
// variance, all pairwise correlations 1/2.  Redundant II: correlated first
// half with the redundant second half.
struct DesignSpec {
  Design design = Design::orthogonal;
  int n = 100;
  int p = 10;
  int s = 5;
  std::uint64_t seed = 0;
};

struct GeneratedData {
  Dataset data;
  Eigen::VectorXd beta;  // the true coefficients used to build y
};

GeneratedData generate_design(const DesignSpec& spec);

// One line of a plot-ready experiment table.
struct ExperimentCell {
  std::string design;
  int p = 0;
  int s = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  double se = 0.0;
  int reps = 0;
};

std::string cells_to_csv(const std::vector<ExperimentCell>& cells);

// Run the full analysis `reps` times on fresh draws of the design and count
// rejections at `level` among the selected NULL predictors (index > s in
// the plain designs, the five mirrored slots in the redundant ones) for
// each method in {model_pvalue, model_score, post_selection, naive}.
std::vector<ExperimentCell> type_one_error_experiment(
    const DesignSpec& spec, double level, int reps,
    const std::vector<std::string>& methods, const AnalysisConfig& cfg);

// Rejection rate on one designated predictor as its true coefficient sweeps
// a grid (everything else per the design); also records how often that
// predictor was selected at all.  target < 0 picks index s-1, the weakest
// signal slot.
std::vector<ExperimentCell> power_curve(const DesignSpec& spec,
                                        const std::vector<double>& signal_grid,
                                        double level, int reps,
                                        const std::vector<std::string>& methods,
                                        const AnalysisConfig& cfg,
                                        int target = -1);

// Calibration study of the bootstrap p-value for a single group of m error
// columns (no exclusion pairing): columns are N(mu_j, 1), the de-biased and
// plug-in estimates are bootstrapped B times, and left/right p-values are
// recorded against the marginalized truth (exactly zero when all mu_j = 0).
enum class MeanMode { zero, n_scaled_random };

struct CalibrationParams {
  int m = 20;
  int n = 100;
  MeanMode mean_mode = MeanMode::zero;
  int reps = 1000;
  bool rescale = true;  // bootstrap the mean-rescaled population
  int H = 1000;
  int B = 1000;
  double alpha = 0.1;   // gamma1 = gamma2 = 0 throughout this experiment
  std::uint64_t seed = 0;
  int oracle_sims = 400;  // Monte Carlo size for the truth, random-mean mode
};

struct CalibrationResult {
  std::vector<double> p_naive_left, p_naive_right;
  std::vector<double> p_debias_left, p_debias_right;
  double bias_naive = 0.0;   // mean(plug-in estimate - truth)
  double bias_debias = 0.0;  // mean(de-biased estimate - truth)
};

CalibrationResult pvalue_calibration_experiment(const CalibrationParams& params);

// Kolmogorov-Smirnov distance between the sample and Uniform(0,1).
double ks_to_uniform(std::vector<double> sample);

}  // namespace nextdoor
