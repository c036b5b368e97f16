#include "sepsplit/lsq.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sepsplit/errors.hpp"

namespace sepsplit {

LsqResult fit_linear_lsq(const std::vector<std::vector<double>>& rows, const std::vector<double>& obs,
                         const std::vector<std::string>& column_names) {
  if (rows.empty()) throw ValidationError("fit_linear_lsq: no rows");
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = static_cast<Eigen::Index>(rows[0].size());
  if (n == 0) throw ValidationError("fit_linear_lsq: no columns");
  if (static_cast<Eigen::Index>(obs.size()) != m) throw ValidationError("fit_linear_lsq: rows/observations size mismatch");
  if (m < n) throw ValidationError("fit_linear_lsq: fewer rows than columns");
  auto name = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(column_names.size()) ? column_names[j] : "column " + std::to_string(j);
  };

  Eigen::MatrixXd a(m, n);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ValidationError("fit_linear_lsq: ragged design matrix");
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rows[i][j];
    b(i) = obs[i];
  }
  // Equilibrate columns so the rank threshold is scale-free.
  Eigen::VectorXd scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = a.col(j).norm();
    if (s == 0.0) throw NumericalError("fit_linear_lsq: rank-deficient design, degenerate column '" + name(j) + "'");
    scale(j) = s;
    a.col(j) /= s;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) {
    Eigen::Index bad = qr.colsPermutation().indices()(qr.rank());
    throw NumericalError("fit_linear_lsq: rank-deficient design, degenerate column '" + name(bad) + "'");
  }
  Eigen::VectorXd x = qr.solve(b);
  Eigen::VectorXd res = b - a * x;

  LsqResult out;
  out.rss = res.squaredNorm();
  double sigma2 = m > n ? out.rss / static_cast<double>(m - n) : 0.0;
  Eigen::MatrixXd cov = (a.transpose() * a).inverse() * sigma2;
  for (Eigen::Index j = 0; j < n; ++j) {
    out.coeffs.push_back(x(j) / scale(j));
    out.std_errors.push_back(std::sqrt(std::max(0.0, cov(j, j))) / scale(j));
  }
  for (Eigen::Index i = 0; i < m; ++i) out.residuals.push_back(res(i));
  return out;
}

}  // namespace sepsplit
