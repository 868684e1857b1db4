#include "nextdoor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace nextdoor {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& origin,
                    std::size_t row, const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (cell.empty() || end == begin || (end && *end != '\0')) {
    throw DataError(origin + ": row " + std::to_string(row) + ", column '" +
                    col + "': not a number: '" + cell + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError(origin + ": row " + std::to_string(row) + ", column '" +
                    col + "': non-finite value");
  }
  return v;
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& response,
                  Family family, const std::string& fold_column,
                  const std::string& origin) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");
  std::vector<std::string> header = split_line(line);
  if (header.empty()) throw DataError(origin + ": empty header");

  std::set<std::string> seen(header.begin(), header.end());
  if (seen.size() != header.size())
    throw DataError(origin + ": duplicate column names in header");

  long y_col = -1, fold_col = -1;
  std::vector<long> x_cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response) {
      y_col = static_cast<long>(j);
    } else if (!fold_column.empty() && header[j] == fold_column) {
      fold_col = static_cast<long>(j);
    } else {
      x_cols.push_back(static_cast<long>(j));
      names.push_back(header[j]);
    }
  }
  if (y_col < 0)
    throw DataError(origin + ": response column '" + response + "' not found");
  if (!fold_column.empty() && fold_col < 0)
    throw DataError(origin + ": fold column '" + fold_column + "' not found");
  if (x_cols.empty()) throw DataError(origin + ": no predictor columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> folds;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError(origin + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    std::vector<double> values;
    values.reserve(x_cols.size() + 1);
    for (long j : x_cols)
      values.push_back(parse_number(cells[static_cast<std::size_t>(j)], origin,
                                    row_no, header[static_cast<std::size_t>(j)]));
    values.push_back(parse_number(cells[static_cast<std::size_t>(y_col)], origin,
                                  row_no, response));
    rows.push_back(std::move(values));
    if (fold_col >= 0) {
      double f = parse_number(cells[static_cast<std::size_t>(fold_col)], origin,
                              row_no, fold_column);
      if (f != std::floor(f))
        throw DataError(origin + ": row " + std::to_string(row_no) +
                        ": fold label must be an integer");
      folds.push_back(static_cast<int>(f));
    }
  }
  if (rows.empty()) throw DataError(origin + ": no data rows");

  Dataset d;
  d.family = family;
  d.names = std::move(names);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(x_cols.size());
  d.x.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j)
      d.x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    d.y(i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
  }
  d.fold_labels = std::move(folds);

  if (family == Family::binomial) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d.y(i) != 0.0 && d.y(i) != 1.0)
        throw DataError(origin + ": binomial response must be 0 or 1, got " +
                        std::to_string(d.y(i)));
    }
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if ((d.x.col(j).array() == d.x(0, j)).all())
      throw DataError(origin + ": predictor '" + d.names[static_cast<std::size_t>(j)] +
                      "' is constant");
  }
  if (!d.fold_labels.empty()) {
    std::set<int> distinct(d.fold_labels.begin(), d.fold_labels.end());
    if (distinct.size() < 2)
      throw DataError(origin + ": fold column must contain at least 2 labels");
  }
  return d;
}

Dataset load_csv(const std::string& path, const std::string& response,
                 Family family, const std::string& fold_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), response, family, fold_column, path);
}

Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.names = d.names;
  out.family = d.family;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d.p());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  if (!d.fold_labels.empty()) out.fold_labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= d.n()) throw DataError("row index out of range");
    out.x.row(static_cast<Eigen::Index>(i)) = d.x.row(r);
    out.y(static_cast<Eigen::Index>(i)) = d.y(r);
    if (!d.fold_labels.empty())
      out.fold_labels.push_back(d.fold_labels[static_cast<std::size_t>(r)]);
  }
  return out;
}

std::pair<Dataset, Standardization> standardize(const Dataset& d) {
  const double n = static_cast<double>(d.n());
  Standardization s;
  s.center = d.x.colwise().mean();
  Eigen::MatrixXd centered = d.x.rowwise() - s.center.transpose();
  s.scale = (centered.array().square().colwise().sum() / n).sqrt();

  Dataset out = d;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    // A column constant within this subset carries no signal; leave it zero.
    if (s.scale(j) < 1e-12) {
      s.scale(j) = 1.0;
      out.x.col(j).setZero();
    } else {
      out.x.col(j) = centered.col(j) / s.scale(j);
    }
  }
  if (d.family == Family::gaussian) {
    s.response_mean = d.y.mean();
    out.y = d.y.array() - s.response_mean;
  }
  return {std::move(out), std::move(s)};
}

Coefficients destandardize(double intercept_std, const Eigen::VectorXd& beta_std,
                           const Standardization& s) {
  Coefficients c;
  c.beta = beta_std.array() / s.scale.array();
  c.intercept = intercept_std + s.response_mean - c.beta.dot(s.center);
  return c;
}

}  // namespace nextdoor
