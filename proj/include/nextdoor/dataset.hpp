#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nextdoor {

enum class Family { gaussian, binomial };

// Malformed input: parse failures, bad response values, constant predictors.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: solver non-convergence, covariance factorization.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Eigen::MatrixXd x;               // n x p
  Eigen::VectorXd y;               // n
  std::vector<std::string> names;  // p predictor names
  Family family = Family::gaussian;
  std::vector<int> fold_labels;    // per-row fold ids; empty if none given

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

// Reads a numeric CSV with a header row. The response column becomes y, an
// optional fold column becomes fold_labels, every other column a predictor.
Dataset load_csv(const std::string& path, const std::string& response,
                 Family family, const std::string& fold_column = "");

// Same parser on an in-memory string (used by tests and round trips).
Dataset parse_csv(const std::string& text, const std::string& response,
                  Family family, const std::string& fold_column = "",
                  const std::string& origin = "<memory>");

// Row subset in the given order (rows may repeat, e.g. bootstrap resamples).
Dataset subset_rows(const Dataset& d, const std::vector<int>& rows);

struct Standardization {
  Eigen::VectorXd center;      // column means
  Eigen::VectorXd scale;       // sqrt(mean squared deviation), 1/n convention
  double response_mean = 0.0;  // subtracted from y for gaussian families
};

// Columns to mean zero and mean square one; gaussian responses centered.
// Columns with (near-)zero variance keep scale 1 and become all zeros.
std::pair<Dataset, Standardization> standardize(const Dataset& d);

struct Coefficients {
  double intercept = 0.0;
  Eigen::VectorXd beta;
};

// Maps coefficients fit on standardized data back to the original scale, so
// that predictions on raw predictor rows agree with the standardized fit.
Coefficients destandardize(double intercept_std, const Eigen::VectorXd& beta_std,
                           const Standardization& s);

}  // namespace nextdoor
