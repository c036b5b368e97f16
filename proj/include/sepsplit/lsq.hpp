#pragma once

#include <string>
#include <vector>

namespace sepsplit {

struct LsqResult {
  std::vector<double> coeffs;
  std::vector<double> residuals;  // observation − model
  std::vector<double> std_errors;
  double rss = 0.0;
};

// Least squares by column-pivoted Householder QR. Column names are only used
// in the rank-deficiency message.
LsqResult fit_linear_lsq(const std::vector<std::vector<double>>& rows, const std::vector<double>& obs,
                         const std::vector<std::string>& column_names = {});

}  // namespace sepsplit
