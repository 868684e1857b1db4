#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nextdoor/report.hpp"

namespace nextdoor {

enum class Criterion { randomized_min, randomized_one_se };

// Everything derives from the single master `seed`: folds, the base and
// per-target randomization streams, bootstrap replicates, the frequency
// pass and the post-selection perturbations each live on their own
// substream, so results are independent of evaluation order.
struct AnalysisConfig {
  int V = 10;           // CV folds (ignored when the data carries fold labels)
  int m = 100;          // penalty grid size
  double ratio = 0.01;  // grid floor as a fraction of lambda_max
  Criterion criterion = Criterion::randomized_min;
  double alpha = 0.1;   // randomization split
  double gamma1 = 0.1;  // de-biasing noise floor, relative to sigma0^2
  int H = 1000;         // randomization draws
  int B = 10000;        // bootstrap replicates for the model p-value
  double gamma2 = 0.05;  // degeneracy-noise scale in the bootstrap
  int n_boot_freq = 50;  // resamples behind the selection frequency
  double frequency_cutoff = 0.05;  // below it the model score is undefined
  double tau_sq = 0.0;  // post-selection perturbation; <= 0 means
                        // gamma1 * sigma0^2 of the paired loss matrix
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> exclusion_sets;  // extra user-chosen targets
};

// Mean held-out loss of an original-scale fit: squared error for gaussian,
// deviance for binomial (same clamping as the CV losses).
double held_out_error(const Dataset& test, const Coefficients& coef);

// The full pipeline: grid and folds, base CV losses, randomized penalty
// choice, base fit, then per target (each base-active predictor plus each
// user exclusion set) the paired losses, de-biased errors, bootstrap
// p-value, selection frequency, model score, post-selection p-value, and a
// proximal refit at the chosen penalty.  Entries come back sorted by
// ascending de-biased error.
NextDoorReport run_next_door(const Dataset& d, const AnalysisConfig& cfg,
                             const Dataset* test = nullptr);

enum class NestedOrdering { model_pvalue, model_score };

// Forward selection along the report's own ranking: order base-active
// predictors by the chosen measure, refit unpenalized on the best k of
// them, and score on held-out data, for k = start_size .. |active|.
std::vector<std::pair<int, double>> nested_model_curve(
    const Dataset& train, const Dataset& test, const NextDoorReport& report,
    NestedOrdering ordering, int start_size = 1);

}  // namespace nextdoor
