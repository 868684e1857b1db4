#include "nextdoor/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace nextdoor {

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string family_name(Family f) {
  return f == Family::gaussian ? "gaussian" : "binomial";
}

// Predictor rows: exclusion targets in column order first, then any other
// predictor that shows up with a nonzero coefficient somewhere.
std::vector<int> row_order(const NextDoorReport& r) {
  std::vector<int> rows;
  std::vector<char> seen(r.names.size(), 0);
  auto add = [&](int j) {
    if (!seen[std::size_t(j)]) {
      seen[std::size_t(j)] = 1;
      rows.push_back(j);
    }
  };
  for (const auto& e : r.entries)
    for (int j : e.excluded) add(j);
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    bool used = r.base.beta(int(j)) != 0.0;
    for (const auto& e : r.entries) used = used || e.coef.beta(int(j)) != 0.0;
    if (used) add(int(j));
  }
  return rows;
}

double entropy_nats(const std::vector<int>& counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (int c : counts)
    if (c > 0) {
      const double f = c / total;
      h -= f * std::log(f);
    }
  return h;
}

}  // namespace

std::string render_text(const NextDoorReport& r) {
  const std::size_t ncols = r.entries.size() + 1;  // base + proximal models
  std::vector<std::string> headers = {"base"};
  for (const auto& e : r.entries) headers.push_back(e.label);

  const std::vector<int> rows = row_order(r);
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> cells;  // per row, ncols entries
  auto blank_row = [&](const std::string& label) -> std::vector<std::string>& {
    labels.push_back(label);
    cells.emplace_back(ncols, "");
    return cells.back();
  };

  for (int j : rows) {
    auto& row = blank_row(r.names[std::size_t(j)]);
    if (r.base.beta(j) != 0.0) row[0] = fixed3(r.base.beta(j));
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      const double b = r.entries[i].coef.beta(j);
      if (b != 0.0) row[i + 1] = fixed3(b);
    }
  }

  {
    auto& row = blank_row("cv_error");
    row[0] = fixed3(r.base_cv_error);
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].cv_error);
  }
  {
    auto& row = blank_row("debiased_error");
    row[0] = fixed3(r.base_debiased_error);
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].debiased_error);
  }
  if (r.has_test) {
    auto& row = blank_row("test_error");
    row[0] = fixed3(r.base_test_error);
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].test_error);
  }
  {
    auto& row = blank_row("selection_frequency");
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].selection_frequency);
  }
  {
    auto& row = blank_row("model_pvalue");
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].model_pvalue);
  }
  {
    auto& row = blank_row("model_score");
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      if (r.entries[i].score.defined)
        row[i + 1] = fixed3(r.entries[i].score.value);
  }
  {
    auto& row = blank_row("post_selection_pvalue");
    for (std::size_t i = 0; i < r.entries.size(); ++i)
      row[i + 1] = fixed3(r.entries[i].post_selection_pvalue);
  }

  std::size_t label_w = 0;
  for (const auto& l : labels) label_w = std::max(label_w, l.size());
  std::vector<std::size_t> widths(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : cells) widths[c] = std::max(widths[c], row[c].size());
  }

  std::ostringstream out;
  out << "family: " << family_name(r.family)
      << "   chosen penalty: " << (r.chosen_lambda_index + 1) << " of "
      << r.grid.size() << " (lambda = "
      << fixed3(r.grid[std::size_t(r.chosen_lambda_index)]) << ")\n";
  if (!r.selection_counts.empty())
    out << "randomized selection entropy: " << fixed3(entropy_nats(r.selection_counts))
        << " nats over " << r.selection_counts.size() << " penalties\n";
  if (!r.notice.empty()) out << "notice: " << r.notice << "\n";
  out << "\n";

  out << std::string(label_w, ' ');
  for (std::size_t c = 0; c < ncols; ++c)
    out << "  " << std::string(widths[c] - headers[c].size(), ' ')
        << headers[c];
  out << "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i] << std::string(label_w - labels[i].size(), ' ');
    for (std::size_t c = 0; c < ncols; ++c)
      out << "  " << std::string(widths[c] - cells[i][c].size(), ' ')
          << cells[i][c];
    out << "\n";
  }
  return out.str();
}

std::string render_csv(const NextDoorReport& r) {
  std::ostringstream out;
  out << "model,excluded,cv_error,debiased_error,test_error,"
         "selection_frequency,model_pvalue,model_score,"
         "post_selection_pvalue,intercept";
  for (const auto& n : r.names) out << ",coef_" << n;
  out << "\n";

  auto coef_cells = [&](const Coefficients& c) {
    std::string s = "," + full(c.intercept);
    for (int j = 0; j < c.beta.size(); ++j) s += "," + full(c.beta(j));
    return s;
  };

  out << "base,," << full(r.base_cv_error) << "," << full(r.base_debiased_error)
      << "," << (r.has_test ? full(r.base_test_error) : "") << ",,,,"
      << coef_cells(r.base) << "\n";
  for (const auto& e : r.entries) {
    std::string excl;
    for (std::size_t k = 0; k < e.excluded.size(); ++k)
      excl += (k ? "+" : "") + r.names[std::size_t(e.excluded[k])];
    out << e.label << "," << excl << "," << full(e.cv_error) << ","
        << full(e.debiased_error) << ","
        << (r.has_test ? full(e.test_error) : "") << ","
        << full(e.selection_frequency) << "," << full(e.model_pvalue) << ","
        << (e.score.defined ? full(e.score.value) : "") << ","
        << full(e.post_selection_pvalue) << coef_cells(e.coef) << "\n";
  }
  return out.str();
}

std::string render_json(const NextDoorReport& r) {
  using json = nlohmann::ordered_json;
  json root;
  root["family"] = family_name(r.family);
  root["chosen_lambda_index"] = r.chosen_lambda_index + 1;  // 1-based
  root["lambda"] = r.grid[std::size_t(r.chosen_lambda_index)];
  root["grid"] = r.grid;
  root["selection_counts"] = r.selection_counts;
  if (!r.notice.empty()) root["notice"] = r.notice;

  auto coef_map = [&](const Coefficients& c) {
    json m;
    for (std::size_t j = 0; j < r.names.size(); ++j)
      m[r.names[j]] = c.beta(int(j));
    return m;
  };

  json base;
  base["intercept"] = r.base.intercept;
  base["coefficients"] = coef_map(r.base);
  base["cv_error"] = r.base_cv_error;
  base["debiased_error"] = r.base_debiased_error;
  if (r.has_test) base["test_error"] = r.base_test_error;
  root["base"] = base;

  json prox = json::array();
  for (const auto& e : r.entries) {
    json p;
    p["label"] = e.label;
    json excl = json::array();
    for (int j : e.excluded) excl.push_back(r.names[std::size_t(j)]);
    p["excluded"] = excl;
    p["intercept"] = e.coef.intercept;
    p["coefficients"] = coef_map(e.coef);
    p["cv_error"] = e.cv_error;
    p["debiased_error"] = e.debiased_error;
    p["selection_frequency"] = e.selection_frequency;
    p["model_pvalue"] = e.model_pvalue;
    if (e.score.defined)
      p["model_score"] = e.score.value;
    else
      p["model_score"] = "frequency-below-cutoff";
    p["post_selection_pvalue"] = e.post_selection_pvalue;
    if (r.has_test) p["test_error"] = e.test_error;
    prox.push_back(p);
  }
  root["proximal"] = prox;
  return root.dump(2) + "\n";
}

}  // namespace nextdoor
