#pragma once

#include <limits>
#include <string>
#include <vector>

#include "nextdoor/bootstrap.hpp"
#include "nextdoor/dataset.hpp"

namespace nextdoor {

// One proximal model: the refit with `excluded` pinned to zero plus every
// indispensability measure for that exclusion.
struct PredictorResult {
  std::string label;          // "lcavol", or "lcavol+svi" for a user set
  std::vector<int> excluded;  // column indices pinned to zero
  Coefficients coef;          // original-scale proximal fit
  double cv_error = 0.0;      // raw CV mean at the chosen penalty
  double debiased_error = 0.0;
  double selection_frequency = 0.0;
  double model_pvalue = 1.0;
  ModelScore score;
  double post_selection_pvalue = 1.0;
  // paired-t comparator that ignores selection; consumed by the simulation
  // tables, never rendered
  double naive_pvalue = 1.0;
  double test_error = std::numeric_limits<double>::quiet_NaN();
};

struct NextDoorReport {
  Family family = Family::gaussian;
  std::vector<std::string> names;  // every predictor, in data column order
  std::vector<double> grid;        // descending penalties
  int chosen_lambda_index = 0;     // 0-based here; rendered 1-based
  Coefficients base;               // original-scale base fit
  std::vector<int> base_active;
  double base_cv_error = 0.0;
  double base_debiased_error = 0.0;
  double base_test_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> selection_counts;  // base randomized selections, sum H
  std::vector<PredictorResult> entries;  // ascending debiased_error
  std::string notice;  // set when there was nothing to exclude
  bool has_test = false;
};

// Fixed-width table in the benchmark layout: coefficient rows (blank for
// exact zeros), then error rows, then the per-exclusion measures; proximal
// columns run left to right by ascending de-biased error.
std::string render_text(const NextDoorReport& r);

// One row per model (base first), full-precision values, empty cells where
// a measure does not apply.
std::string render_csv(const NextDoorReport& r);

// Deterministic serialization: insertion-ordered keys, shortest round-trip
// doubles; an undefined model score renders as "frequency-below-cutoff".
std::string render_json(const NextDoorReport& r);

}  // namespace nextdoor
