#include "nextdoor/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "nextdoor/bootstrap.hpp"
#include "nextdoor/debias.hpp"
#include "nextdoor/parallel.hpp"
#include "nextdoor/rng.hpp"

namespace nextdoor {

namespace {

constexpr std::array<const char*, 4> kMethods = {"model_pvalue", "model_score",
                                                 "post_selection", "naive"};

int method_index(const std::string& name) {
  for (int k = 0; k < int(kMethods.size()); ++k)
    if (name == kMethods[std::size_t(k)]) return k;
  throw DataError("unknown method '" + name + "'");
}

std::vector<int> resolve_methods(const std::vector<std::string>& methods) {
  std::vector<int> out;
  if (methods.empty()) {
    for (int k = 0; k < int(kMethods.size()); ++k) out.push_back(k);
    return out;
  }
  for (const auto& name : methods) out.push_back(method_index(name));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_redundant(Design d) {
  return d == Design::redundant1 || d == Design::redundant2;
}

void check_spec(const DesignSpec& spec) {
  if (spec.n < 2) throw DataError("design needs at least two rows");
  if (spec.p < 1) throw DataError("design needs at least one predictor");
  if (spec.s < 0 || spec.s > spec.p)
    throw DataError("sparsity s must lie in [0, p]");
  if (is_redundant(spec.design) && spec.p % 2 != 0)
    throw DataError("redundant designs need an even predictor count");
}

// Null slots: everything past the signal block, or the five mirrored
// columns in the redundant designs (whose mirrors carry the signal).
std::vector<int> null_indices(const DesignSpec& spec) {
  std::vector<int> nulls;
  if (is_redundant(spec.design)) {
    const int half = spec.p / 2;
    if (half < 5) throw DataError("redundant null rule needs p >= 10");
    if (spec.s > half)
      throw DataError("redundant null rule needs s <= p/2");
    for (int j = half; j < half + 5; ++j) nulls.push_back(j);
  } else {
    for (int j = spec.s; j < spec.p; ++j) nulls.push_back(j);
  }
  if (nulls.empty()) throw DataError("design has no null predictors");
  return nulls;
}

double binomial_se(double rate, int count) {
  return count > 0 ? std::sqrt(rate * (1.0 - rate) / count) : 0.0;
}

std::string short_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string full_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool rejects(const PredictorResult& e, int method, double level) {
  switch (method) {
    case 0:
      return e.model_pvalue <= level;
    case 1:
      return e.score.defined && e.score.value <= level;
    case 2:
      return e.post_selection_pvalue <= level;
    default:
      return e.naive_pvalue <= level;
  }
}

}  // namespace

Design design_from_name(const std::string& name) {
  if (name == "orthogonal") return Design::orthogonal;
  if (name == "redundant1") return Design::redundant1;
  if (name == "correlated") return Design::correlated;
  if (name == "redundant2") return Design::redundant2;
  throw DataError("unknown design '" + name + "'");
}

std::string design_name(Design d) {
  switch (d) {
    case Design::orthogonal:
      return "orthogonal";
    case Design::redundant1:
      return "redundant1";
    case Design::correlated:
      return "correlated";
    default:
      return "redundant2";
  }
}

GeneratedData generate_design(const DesignSpec& spec) {
  check_spec(spec);
  const int n = spec.n;
  const int p = spec.p;
  const int half = p / 2;
  const bool equicorr =
      spec.design == Design::correlated || spec.design == Design::redundant2;
  const bool mirror = is_redundant(spec.design);
  const int direct = mirror ? half : p;  // columns drawn outright
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  RngStream rng(spec.seed, Stream::simulation);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    const double shared = equicorr ? rng.normal() : 0.0;
    for (int j = 0; j < direct; ++j) {
      const double z = rng.normal();
      x(i, j) = equicorr ? (shared + z) * inv_sqrt2 : z;
    }
    if (mirror)
      for (int j = 0; j < half; ++j)
        x(i, half + j) = 0.95 * x(i, j) + 0.05 * rng.normal();
  }

  GeneratedData out;
  out.beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < spec.s; ++j) out.beta(j) = 2.0 / (j + 1);
  out.data.x = x;
  out.data.y = x * out.beta;
  for (int i = 0; i < n; ++i) out.data.y(i) += rng.normal();
  out.data.family = Family::gaussian;
  out.data.names.reserve(std::size_t(p));
  for (int j = 1; j <= p; ++j) out.data.names.push_back("x" + std::to_string(j));
  return out;
}

std::string cells_to_csv(const std::vector<ExperimentCell>& cells) {
  std::string out = "design,p,s,method,metric,value,se,reps\n";
  for (const auto& c : cells) {
    out += c.design + ',' + std::to_string(c.p) + ',' + std::to_string(c.s) +
           ',' + c.method + ',' + c.metric + ',' + full_number(c.value) + ',' +
           full_number(c.se) + ',' + std::to_string(c.reps) + '\n';
  }
  return out;
}

std::vector<ExperimentCell> type_one_error_experiment(
    const DesignSpec& spec, double level, int reps,
    const std::vector<std::string>& methods, const AnalysisConfig& cfg) {
  check_spec(spec);
  if (reps < 1) throw DataError("reps must be positive");
  if (!(level > 0.0 && level < 1.0)) throw DataError("level must lie in (0, 1)");
  const std::vector<int> chosen = resolve_methods(methods);
  const std::vector<int> nulls = null_indices(spec);

  const std::size_t R = std::size_t(reps);
  std::vector<int> instances(R, 0);
  std::vector<std::array<int, 4>> hits(R, {0, 0, 0, 0});

  parallel_for(R, [&](std::size_t r) {
    DesignSpec ds = spec;
    ds.seed = derive_seed(spec.seed, Stream::simulation, r, 0);
    const GeneratedData gd = generate_design(ds);
    AnalysisConfig ac = cfg;
    ac.seed = derive_seed(spec.seed, Stream::simulation, r, 1);
    const NextDoorReport report = run_next_door(gd.data, ac);
    for (const auto& e : report.entries) {
      if (e.excluded.size() != 1) continue;
      if (std::find(nulls.begin(), nulls.end(), e.excluded[0]) == nulls.end())
        continue;
      ++instances[r];
      for (int k = 0; k < 4; ++k)
        if (rejects(e, k, level)) ++hits[r][std::size_t(k)];
    }
  });

  const int total = std::accumulate(instances.begin(), instances.end(), 0);
  std::vector<ExperimentCell> cells;
  for (int k : chosen) {
    int rej = 0;
    for (const auto& h : hits) rej += h[std::size_t(k)];
    const double rate = total > 0 ? double(rej) / total : 0.0;
    cells.push_back({design_name(spec.design), spec.p, spec.s,
                     kMethods[std::size_t(k)], "type_one_error", rate,
                     binomial_se(rate, total), total});
  }
  // reconciliation row: value * reps recovers the instance total above
  const double per_rep = double(total) / reps;
  double var = 0.0;
  for (int c : instances) var += (c - per_rep) * (c - per_rep);
  var = reps > 1 ? var / (reps - 1) : 0.0;
  cells.push_back({design_name(spec.design), spec.p, spec.s, "any",
                   "selected_nulls_per_rep", per_rep,
                   std::sqrt(var / reps), reps});
  return cells;
}

std::vector<ExperimentCell> power_curve(const DesignSpec& spec,
                                        const std::vector<double>& signal_grid,
                                        double level, int reps,
                                        const std::vector<std::string>& methods,
                                        const AnalysisConfig& cfg, int target) {
  check_spec(spec);
  if (reps < 1) throw DataError("reps must be positive");
  if (!(level > 0.0 && level < 1.0)) throw DataError("level must lie in (0, 1)");
  if (signal_grid.empty()) throw DataError("signal grid is empty");
  if (target < 0) target = spec.s > 0 ? spec.s - 1 : 0;
  if (target >= spec.p) throw DataError("target predictor out of range");
  const std::vector<int> chosen = resolve_methods(methods);

  std::vector<ExperimentCell> cells;
  const std::size_t R = std::size_t(reps);
  for (double signal : signal_grid) {
    std::vector<char> selected(R, 0);
    std::vector<std::array<int, 4>> hit(R, {0, 0, 0, 0});

    parallel_for(R, [&](std::size_t r) {
      DesignSpec ds = spec;
      ds.seed = derive_seed(spec.seed, Stream::simulation, r, 0);
      GeneratedData gd = generate_design(ds);
      Eigen::VectorXd beta = gd.beta;
      beta(target) = signal;
      // same X and y-noise across the grid, so curves are paired in signal
      RngStream noise(spec.seed, Stream::simulation, r, 2);
      gd.data.y = gd.data.x * beta;
      for (int i = 0; i < spec.n; ++i) gd.data.y(i) += noise.normal();
      AnalysisConfig ac = cfg;
      ac.seed = derive_seed(spec.seed, Stream::simulation, r, 1);
      const NextDoorReport report = run_next_door(gd.data, ac);
      for (const auto& e : report.entries) {
        if (e.excluded.size() != 1 || e.excluded[0] != target) continue;
        selected[r] = 1;
        for (int k = 0; k < 4; ++k)
          if (rejects(e, k, level)) hit[r][std::size_t(k)] = 1;
        break;
      }
    });

    int sel = 0;
    for (char c : selected) sel += c;
    const std::string tag = short_number(signal);
    for (int k : chosen) {
      int rej = 0;
      for (const auto& h : hit) rej += h[std::size_t(k)];
      const double rate = sel > 0 ? double(rej) / sel : 0.0;
      cells.push_back({design_name(spec.design), spec.p, spec.s,
                       kMethods[std::size_t(k)], "power:signal=" + tag, rate,
                       binomial_se(rate, sel), sel});
    }
    const double sel_rate = double(sel) / reps;
    cells.push_back({design_name(spec.design), spec.p, spec.s, "any",
                     "selection_rate:signal=" + tag, sel_rate,
                     binomial_se(sel_rate, reps), reps});
  }
  return cells;
}

CalibrationResult pvalue_calibration_experiment(const CalibrationParams& params) {
  const int m = params.m;
  const int n = params.n;
  if (m < 1) throw DataError("calibration experiment needs m >= 1");
  if (n < 2) throw DataError("calibration experiment needs n >= 2");
  if (params.reps < 1 || params.B < 1 || params.H < 1 || params.oracle_sims < 1)
    throw DataError("calibration experiment counts must be positive");

  const std::size_t R = std::size_t(params.reps);
  CalibrationResult res;
  res.p_naive_left.resize(R);
  res.p_naive_right.resize(R);
  res.p_debias_left.resize(R);
  res.p_debias_right.resize(R);
  std::vector<double> gap_naive(R, 0.0), gap_debias(R, 0.0);

  parallel_for(R, [&](std::size_t r) {
    RngStream data_rng(params.seed, Stream::simulation, r);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
    if (params.mean_mode == MeanMode::n_scaled_random)
      for (int j = 0; j < m; ++j)
        mu(j) = data_rng.normal() / std::sqrt(double(n));
    Eigen::MatrixXd x(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) x(i, j) = mu(j) + data_rng.normal();

    const Eigen::VectorXd q = x.colwise().mean();
    const CovarianceEstimate cov = sample_covariance(x);
    const RandomizationParams rp{
        params.alpha, 0.0, params.H,
        derive_seed(params.seed, Stream::base_debias, r), false};
    const DebiasedErrors de = debias_errors(q, cov, rp, m);

    Eigen::MatrixXd pop = x;
    if (params.rescale)
      pop = rescale_rows(x, mean_rescale_group(q, cov.sigma_hat, cov.n_samples));

    // bootstrap replicates of both estimators, centered at their own means
    Eigen::VectorXd s1(params.B), s2(params.B);
    Eigen::MatrixXd xb(n, m);
    for (int b = 0; b < params.B; ++b) {
      RngStream rows(params.seed, Stream::bootstrap, r, std::uint64_t(b));
      for (int i = 0; i < n; ++i)
        xb.row(i) = pop.row(Eigen::Index(rows.index(std::size_t(n))));
      const Eigen::VectorXd qb = xb.colwise().mean();
      const CovarianceEstimate covb = sample_covariance(xb);
      RandomizationParams rp_b = rp;
      rp_b.seed = derive_seed(params.seed, Stream::noise_draw, r, std::uint64_t(b));
      const DebiasedErrors deb = debias_errors(qb, covb, rp_b, m);
      s1(b) = deb.plug_in_mean;
      s2(b) = deb.err_hat;
    }
    s1.array() -= s1.mean();
    s2.array() -= s2.mean();

    // truth marginalized over the randomized selection: exactly zero under
    // null means, otherwise a Monte Carlo pass over fresh data draws
    double mu_bar = 0.0;
    if (params.mean_mode == MeanMode::n_scaled_random) {
      double acc = 0.0;
      Eigen::MatrixXd xo(n, m);
      for (int t = 0; t < params.oracle_sims; ++t) {
        RngStream osim(params.seed, Stream::reference, r, std::uint64_t(t));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) xo(i, j) = mu(j) + osim.normal();
        const Eigen::VectorXd qo = xo.colwise().mean();
        const CovarianceEstimate covo = sample_covariance(xo);
        const auto paths = pseudo_errors(qo, covo, rp, osim);
        acc += mu(select_randomized(paths.first, m));
      }
      mu_bar = acc / params.oracle_sims;
    }

    const double d_naive = de.plug_in_mean - mu_bar;
    const double d_debias = de.err_hat - mu_bar;
    int nl = 0, nr = 0, dl = 0, dr = 0;
    for (int b = 0; b < params.B; ++b) {
      if (d_naive >= s1(b)) ++nl;
      if (d_naive <= s1(b)) ++nr;
      if (d_debias >= s2(b)) ++dl;
      if (d_debias <= s2(b)) ++dr;
    }
    res.p_naive_left[r] = double(nl) / params.B;
    res.p_naive_right[r] = double(nr) / params.B;
    res.p_debias_left[r] = double(dl) / params.B;
    res.p_debias_right[r] = double(dr) / params.B;
    gap_naive[r] = d_naive;
    gap_debias[r] = d_debias;
  });

  res.bias_naive =
      std::accumulate(gap_naive.begin(), gap_naive.end(), 0.0) / params.reps;
  res.bias_debias =
      std::accumulate(gap_debias.begin(), gap_debias.end(), 0.0) / params.reps;
  return res;
}

double ks_to_uniform(std::vector<double> sample) {
  if (sample.empty()) throw DataError("empty p-value sample");
  std::sort(sample.begin(), sample.end());
  const double N = double(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    d = std::max(d, std::abs((double(i) + 1.0) / N - sample[i]));
    d = std::max(d, std::abs(sample[i] - double(i) / N));
  }
  return d;
}

}  // namespace nextdoor
