#include "doctest.h"
#include "nextdoor/analysis.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "json.hpp"
#include "nextdoor/rng.hpp"

using namespace nextdoor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Gaussian toy data with one or two strong signals among noise columns.
Dataset toy_data(int n, int p, double b0, double b1, uint64_t seed) {
  RngStream r(seed);
  Dataset d;
  d.x.resize(n, p);
  d.y.resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.x(i, j) = r.normal();
  for (int i = 0; i < n; ++i)
    d.y(i) = b0 * d.x(i, 0) + (p > 1 ? b1 * d.x(i, 1) : 0.0) + 0.4 * r.normal();
  for (int j = 0; j < p; ++j) d.names.push_back(std::string(1, char('a' + j)));
  return d;
}

AnalysisConfig small_config() {
  AnalysisConfig cfg;
  cfg.V = 4;
  cfg.m = 15;
  cfg.ratio = 0.05;
  cfg.H = 60;
  cfg.B = 150;
  cfg.n_boot_freq = 10;
  cfg.seed = 7;
  return cfg;
}

double ols_test_error(const Dataset& train, const Dataset& test,
                      const std::vector<int>& cols) {
  const int k = int(cols.size());
  MatrixXd a(train.n(), k + 1);
  MatrixXd at(test.n(), k + 1);
  a.col(0).setOnes();
  at.col(0).setOnes();
  for (int i = 0; i < k; ++i) {
    a.col(i + 1) = train.x.col(cols[std::size_t(i)]);
    at.col(i + 1) = test.x.col(cols[std::size_t(i)]);
  }
  const VectorXd coef = a.colPivHouseholderQr().solve(train.y);
  return (test.y - at * coef).squaredNorm() / double(test.n());
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("the full pipeline fills every field coherently") {
  const Dataset d = toy_data(40, 5, 2.0, 0.0, 3);
  const AnalysisConfig cfg = small_config();
  const NextDoorReport rep = run_next_door(d, cfg);

  REQUIRE(!rep.base_active.empty());
  CHECK(std::find(rep.base_active.begin(), rep.base_active.end(), 0) !=
        rep.base_active.end());
  CHECK(rep.entries.size() == rep.base_active.size());
  CHECK(rep.grid.size() == 15);
  CHECK(rep.chosen_lambda_index >= 0);
  CHECK(rep.chosen_lambda_index < 15);

  int draws = 0;
  for (int c : rep.selection_counts) draws += c;
  CHECK(draws == cfg.H);

  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const auto& e = rep.entries[i];
    REQUIRE(e.excluded.size() == 1);
    CHECK(e.label == rep.names[std::size_t(e.excluded[0])]);
    CHECK(e.coef.beta(e.excluded[0]) == 0.0);  // pinned exactly
    CHECK(std::isfinite(e.debiased_error));
    CHECK(e.cv_error > 0.0);
    CHECK(e.model_pvalue >= 0.0);
    CHECK(e.model_pvalue <= 1.0);
    CHECK(e.post_selection_pvalue >= 0.0);
    CHECK(e.post_selection_pvalue <= 1.0);
    CHECK(e.naive_pvalue >= 0.0);
    CHECK(e.naive_pvalue <= 1.0);
    CHECK(e.selection_frequency >= 0.0);
    CHECK(e.selection_frequency <= 1.0);
    if (e.score.defined)
      CHECK(std::abs(e.score.value -
                     e.model_pvalue / e.selection_frequency) <= 1e-12);
    else
      CHECK(e.selection_frequency < cfg.frequency_cutoff);
    if (i + 1 < rep.entries.size())
      CHECK(e.debiased_error <= rep.entries[i + 1].debiased_error);
  }

  // a strong signal's exclusion should look much worse than a noise column's
  const auto* signal = &rep.entries.front();
  for (const auto& e : rep.entries)
    if (e.excluded[0] == 0) signal = &e;
  CHECK(signal->excluded[0] == 0);
  CHECK(signal->debiased_error == rep.entries.back().debiased_error);
  CHECK(signal->model_pvalue <= 0.05);
  CHECK(signal->selection_frequency >= 0.8);
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  const Dataset d = toy_data(40, 5, 2.0, 0.0, 3);
  const AnalysisConfig cfg = small_config();
  const std::string first = render_json(run_next_door(d, cfg));
  CHECK(render_json(run_next_door(d, cfg)) == first);

  setenv("NEXTDOOR_THREADS", "2", 1);
  const std::string threaded = render_json(run_next_door(d, cfg));
  setenv("NEXTDOOR_THREADS", "1", 1);
  const std::string serial = render_json(run_next_door(d, cfg));
  unsetenv("NEXTDOOR_THREADS");
  CHECK(threaded == first);
  CHECK(serial == first);
}

TEST_CASE("user exclusion sets ride along with the selected singles") {
  const Dataset d = toy_data(40, 5, 2.0, 1.2, 11);
  AnalysisConfig cfg = small_config();
  cfg.exclusion_sets = {{1, 0}};  // unsorted on purpose
  const NextDoorReport rep = run_next_door(d, cfg);

  const PredictorResult* joint = nullptr;
  for (const auto& e : rep.entries)
    if (e.excluded.size() == 2) joint = &e;
  REQUIRE(joint != nullptr);
  CHECK(joint->label == "a+b");
  CHECK(joint->excluded == std::vector<int>{0, 1});
  CHECK(joint->coef.beta(0) == 0.0);
  CHECK(joint->coef.beta(1) == 0.0);
  // dropping both signals must cost at least as much as dropping either
  for (const auto& e : rep.entries)
    if (e.excluded.size() == 1 &&
        (e.excluded[0] == 0 || e.excluded[0] == 1))
      CHECK(joint->debiased_error >= e.debiased_error - 1e-9);

  cfg.exclusion_sets = {{7}};
  CHECK_THROWS_AS(run_next_door(d, cfg), DataError);
  cfg.exclusion_sets = {{}};
  CHECK_THROWS_AS(run_next_door(d, cfg), DataError);
}

TEST_CASE("a single-penalty grid selects nothing and says so") {
  const Dataset d = toy_data(30, 4, 2.0, 0.0, 5);
  AnalysisConfig cfg = small_config();
  cfg.m = 1;  // lambda_max alone: every coefficient stays zero
  const NextDoorReport rep = run_next_door(d, cfg);
  CHECK(rep.base_active.empty());
  CHECK(rep.entries.empty());
  CHECK(rep.notice ==
        "base model selected no predictors; nothing to exclude");
  CHECK(rep.selection_counts == std::vector<int>{cfg.H});
  CHECK(render_text(rep).find("notice:") != std::string::npos);
}

TEST_CASE("held-out data flows into every model column") {
  const Dataset train = toy_data(40, 5, 2.0, 0.0, 3);
  const Dataset test = toy_data(25, 5, 2.0, 0.0, 21);
  const AnalysisConfig cfg = small_config();
  const NextDoorReport rep = run_next_door(train, cfg, &test);

  REQUIRE(rep.has_test);
  const VectorXd base_pred =
      (test.x * rep.base.beta).array() + rep.base.intercept;
  const double base_mse =
      (test.y - base_pred).squaredNorm() / double(test.n());
  CHECK(rep.base_test_error == doctest::Approx(base_mse).epsilon(1e-14));
  for (const auto& e : rep.entries) {
    CHECK(std::isfinite(e.test_error));
    CHECK(e.test_error > 0.0);
  }
}

TEST_CASE("held-out error matches the per-family formulas") {
  Dataset test;
  test.x.resize(2, 1);
  test.x << 1.0, 3.0;
  test.y.resize(2);
  test.y << 2.0, 5.0;
  Coefficients coef;
  coef.intercept = 1.0;
  coef.beta = VectorXd::Constant(1, 1.0);
  // residuals 0 and 1
  CHECK(held_out_error(test, coef) == doctest::Approx(0.5).epsilon(1e-15));

  Dataset bin;
  bin.family = Family::binomial;
  bin.x.resize(2, 1);
  bin.x << -60.0, -60.0;
  bin.y.resize(2);
  bin.y << 1.0, 0.0;
  const double clamp_dev =
      (-2.0 * std::log(1e-10) - 2.0 * std::log1p(-1e-10)) / 2.0;
  CHECK(held_out_error(bin, coef) ==
        doctest::Approx(clamp_dev).epsilon(1e-12));

  Dataset wrong;
  wrong.x.resize(2, 3);
  wrong.x.setZero();
  wrong.y = test.y;
  CHECK_THROWS_AS(held_out_error(wrong, coef), DataError);
}

TEST_CASE("the nested curve ends at the all-predictors least-squares fit") {
  const Dataset train = toy_data(50, 5, 2.0, 1.2, 13);
  const Dataset test = toy_data(30, 5, 2.0, 1.2, 29);
  const AnalysisConfig cfg = small_config();
  const NextDoorReport rep = run_next_door(train, cfg);
  REQUIRE(rep.base_active.size() >= 2);

  const auto curve =
      nested_model_curve(train, test, rep, NestedOrdering::model_pvalue);
  REQUIRE(curve.size() == rep.base_active.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].first == int(i) + 1);
    CHECK(std::isfinite(curve[i].second));
  }
  CHECK(curve.back().second ==
        doctest::Approx(ols_test_error(train, test, rep.base_active))
            .epsilon(1e-8));

  // both orderings agree on the final (full) model
  const auto by_score =
      nested_model_curve(train, test, rep, NestedOrdering::model_score);
  CHECK(by_score.back().second ==
        doctest::Approx(curve.back().second).epsilon(1e-12));

  const int total = int(curve.size());
  const auto tail = nested_model_curve(train, test, rep,
                                       NestedOrdering::model_pvalue, total);
  REQUIRE(tail.size() == 1);
  CHECK(tail[0].second == doctest::Approx(curve.back().second).epsilon(1e-12));
}

TEST_CASE("the nested curve rejects impossible sizes") {
  const Dataset train = toy_data(50, 5, 2.0, 1.2, 13);
  const Dataset test = toy_data(30, 5, 2.0, 1.2, 29);
  const AnalysisConfig cfg = small_config();
  const NextDoorReport rep = run_next_door(train, cfg);

  CHECK_THROWS_AS(
      nested_model_curve(train, test, rep, NestedOrdering::model_pvalue, 0),
      DataError);
  CHECK_THROWS_AS(
      nested_model_curve(train, test, rep, NestedOrdering::model_pvalue,
                         int(rep.base_active.size()) + 1),
      DataError);

  NextDoorReport empty = rep;
  empty.base_active.clear();
  CHECK_THROWS_AS(
      nested_model_curve(train, test, empty, NestedOrdering::model_pvalue),
      DataError);

  // more coefficients than rows: the unpenalized refit must refuse
  Dataset tiny = toy_data(3, 3, 1.0, 0.5, 17);
  Dataset tiny_test = toy_data(4, 3, 1.0, 0.5, 19);
  NextDoorReport hand;
  hand.names = tiny.names;
  hand.base_active = {0, 1, 2};
  for (int j = 0; j < 3; ++j) {
    PredictorResult e;
    e.excluded = {j};
    e.model_pvalue = 0.1 * (j + 1);
    hand.entries.push_back(e);
  }
  CHECK_THROWS_AS(nested_model_curve(tiny, tiny_test, hand,
                                     NestedOrdering::model_pvalue),
                  DataError);
}

}  // TEST_SUITE
