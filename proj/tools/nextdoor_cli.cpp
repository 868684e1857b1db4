#include "CLI11.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "nextdoor/analysis.hpp"
#include "nextdoor/dataset.hpp"
#include "nextdoor/report.hpp"
#include "nextdoor/simulation.hpp"

namespace {

using nextdoor::AnalysisConfig;
using nextdoor::Criterion;
using nextdoor::DataError;
using nextdoor::Dataset;
using nextdoor::Family;

// Flags shared by `analyze`, `nested`, and (with cheaper defaults) `simulate`.
struct AnalysisFlags {
  int folds = 10;
  int nlambda = 100;
  double lambda_ratio = 0.01;
  std::string criterion = "min";
  double alpha = 0.1;
  double gamma1 = 0.1;
  double gamma2 = 0.05;
  int H = 1000;
  int B = 10000;
  int boot_freq = 50;
  double freq_cutoff = 0.05;
  double tau2 = 0.0;  // <= 0 falls back to gamma1 * sigma0^2
  std::uint64_t seed = 0;
};

void add_analysis_options(CLI::App* sub, AnalysisFlags& f) {
  sub->add_option("--folds", f.folds, "cross-validation folds")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 20));
  sub->add_option("--nlambda", f.nlambda, "penalty grid size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--lambda-ratio", f.lambda_ratio,
                  "grid floor as a fraction of lambda_max")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--criterion", f.criterion, "penalty selection rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"min", "1se"}));
  sub->add_option("--alpha", f.alpha, "randomization split")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--gamma1", f.gamma1, "de-biasing noise floor")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--gamma2", f.gamma2, "bootstrap degeneracy-noise scale")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--H", f.H, "randomization draws")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--B", f.B, "bootstrap replicates for the model p-value")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--boot-freq", f.boot_freq,
                  "resamples behind the selection frequency")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--freq-cutoff", f.freq_cutoff,
                  "frequency below which the model score is undefined")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--tau2", f.tau2,
                  "post-selection perturbation variance (<= 0: default)")
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "master seed")->capture_default_str();
}

AnalysisConfig to_config(const AnalysisFlags& f) {
  AnalysisConfig cfg;
  cfg.V = f.folds;
  cfg.m = f.nlambda;
  cfg.ratio = f.lambda_ratio;
  cfg.criterion = f.criterion == "1se" ? Criterion::randomized_one_se
                                       : Criterion::randomized_min;
  cfg.alpha = f.alpha;
  cfg.gamma1 = f.gamma1;
  cfg.gamma2 = f.gamma2;
  cfg.H = f.H;
  cfg.B = f.B;
  cfg.n_boot_freq = f.boot_freq;
  cfg.frequency_cutoff = f.freq_cutoff;
  cfg.tau_sq = f.tau2;
  cfg.seed = f.seed;
  return cfg;
}

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return parts;
    start = pos + 1;
  }
}

// "name1,name2;name3" -> {{i1, i2}, {i3}}, resolved against the data header.
std::vector<std::vector<int>> parse_exclusions(
    const std::string& text, const std::vector<std::string>& names) {
  std::vector<std::vector<int>> sets;
  for (const auto& group : split(text, ';')) {
    if (trimmed(group).empty()) continue;
    std::vector<int> set;
    for (const auto& raw : split(group, ',')) {
      const std::string name = trimmed(raw);
      if (name.empty()) throw DataError("empty name in --exclude");
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end())
        throw DataError("unknown predictor '" + name + "' in --exclude");
      set.push_back(int(it - names.begin()));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + out_path + "'");
  out << text;
  if (!out.good())
    throw DataError("failed writing output file '" + out_path + "'");
}

// An explicit --format wins; otherwise the --out extension decides.
std::string pick_format(const std::string& format, const std::string& out) {
  if (!format.empty()) return format;
  if (out.ends_with(".json")) return "json";
  if (out.ends_with(".csv")) return "csv";
  return "text";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Next-Door analysis for l1-penalized regression"};
  app.require_subcommand(1);

  std::string data_path, test_path, response, fold_col, exclude, out_path;
  std::string format, family_name = "gaussian";
  AnalysisFlags flags;

  auto add_data_options = [&](CLI::App* sub) {
    sub->add_option("--data", data_path, "training CSV (header row)")
        ->required();
    sub->add_option("--response", response, "response column name")
        ->required();
    sub->add_option("--family", family_name, "response family")
        ->capture_default_str()
        ->check(CLI::IsMember({"gaussian", "binomial"}));
    sub->add_option("--fold-col", fold_col,
                    "column carrying pre-assigned fold ids");
    sub->add_option("--exclude", exclude,
                    "extra exclusion sets, e.g. \"name1,name2;name3\"");
    sub->add_option("--out", out_path, "output path (default: stdout)");
  };

  CLI::App* analyze = app.add_subcommand(
      "analyze", "next-door report for every base-active predictor");
  add_data_options(analyze);
  analyze->add_option("--test-data", test_path,
                      "held-out CSV for descriptive test errors");
  analyze->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  add_analysis_options(analyze, flags);

  // Experiment cells are cheap only at reduced fidelity; the defaults here
  // match the scale of the reported tables, not the single-dataset report.
  AnalysisFlags sim_flags;
  sim_flags.nlambda = 40;
  sim_flags.H = 150;
  sim_flags.B = 300;
  sim_flags.boot_freq = 30;

  std::string design_name = "orthogonal";
  int sim_n = 100, sim_p = 10, sim_s = 5, sim_reps = 200;
  double sim_level = 0.1;
  std::vector<std::string> sim_methods;
  std::vector<double> signal_grid;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "type-I-error table, or a power curve with --signal-grid");
  simulate->add_option("--design", design_name, "synthetic design")
      ->required()
      ->check(CLI::IsMember(
          {"orthogonal", "redundant1", "correlated", "redundant2"}));
  simulate->add_option("--n", sim_n, "rows per replication")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 26));
  simulate->add_option("--p", sim_p, "predictors")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--s", sim_s, "nonzero true coefficients")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--reps", sim_reps, "replications")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--level", sim_level, "nominal test level")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  simulate
      ->add_option("--methods", sim_methods,
                   "subset of model_pvalue,model_score,post_selection,naive")
      ->delimiter(',');
  simulate
      ->add_option("--signal-grid", signal_grid,
                   "coefficient grid for the power curve")
      ->delimiter(',');
  simulate->add_option("--out", out_path, "output path (default: stdout)");
  add_analysis_options(simulate, sim_flags);

  std::string ordering = "pvalue";
  int start_size = 1;
  CLI::App* nested = app.add_subcommand(
      "nested", "held-out error along the report's own feature ranking");
  add_data_options(nested);
  nested->add_option("--test-data", test_path, "held-out CSV (required)")
      ->required();
  nested->add_option("--ordering", ordering, "feature ranking measure")
      ->capture_default_str()
      ->check(CLI::IsMember({"pvalue", "score"}));
  nested->add_option("--start-size", start_size, "smallest model size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_analysis_options(nested, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const Family family =
        family_name == "binomial" ? Family::binomial : Family::gaussian;

    if (simulate->parsed()) {
      nextdoor::DesignSpec spec;
      spec.design = nextdoor::design_from_name(design_name);
      spec.n = sim_n;
      spec.p = sim_p;
      spec.s = sim_s;
      spec.seed = sim_flags.seed;
      const AnalysisConfig cfg = to_config(sim_flags);
      const auto cells =
          signal_grid.empty()
              ? nextdoor::type_one_error_experiment(spec, sim_level, sim_reps,
                                                    sim_methods, cfg)
              : nextdoor::power_curve(spec, signal_grid, sim_level, sim_reps,
                                      sim_methods, cfg);
      emit(nextdoor::cells_to_csv(cells), out_path);
      return 0;
    }

    const Dataset train = nextdoor::load_csv(data_path, response, family, fold_col);
    AnalysisConfig cfg = to_config(flags);
    cfg.exclusion_sets = parse_exclusions(exclude, train.names);

    if (nested->parsed()) {
      const Dataset test = nextdoor::load_csv(test_path, response, family);
      const auto report = nextdoor::run_next_door(train, cfg, &test);
      const auto ordering_enum = ordering == "score"
                                     ? nextdoor::NestedOrdering::model_score
                                     : nextdoor::NestedOrdering::model_pvalue;
      const auto curve = nextdoor::nested_model_curve(train, test, report,
                                                      ordering_enum, start_size);
      std::string csv = "k,test_error\n";
      for (const auto& [k, err] : curve) {
        char line[64];
        std::snprintf(line, sizeof line, "%d,%.17g\n", k, err);
        csv += line;
      }
      emit(csv, out_path);
      return 0;
    }

    Dataset test;
    const bool has_test = !test_path.empty();
    if (has_test) test = nextdoor::load_csv(test_path, response, family);
    const auto report =
        nextdoor::run_next_door(train, cfg, has_test ? &test : nullptr);
    const std::string fmt = pick_format(format, out_path);
    emit(fmt == "json"  ? nextdoor::render_json(report)
         : fmt == "csv" ? nextdoor::render_csv(report)
                        : nextdoor::render_text(report),
         out_path);
    return 0;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nextdoor::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
