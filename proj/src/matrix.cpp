#include "pnn/matrix.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace pnn {

namespace {

Eigen::MatrixXd to_eigen(const Matrix<double>& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

}  // namespace

FloatRank float_rank(const Matrix<double>& m, double rel_tol) {
  FloatRank out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(to_eigen(m));
  const Eigen::VectorXd s = svd.singularValues();
  out.singular_values.assign(s.data(), s.data() + s.size());
  const double smax = out.singular_values.empty() ? 0.0 : out.singular_values.front();
  if (smax == 0.0) {
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  for (const double v : out.singular_values)
    if (v > rel_tol * smax) ++out.rank;
  if (out.rank == out.singular_values.size()) {
    out.gap = std::numeric_limits<double>::infinity();
  } else {
    const double below = out.singular_values[out.rank];
    out.gap = below == 0.0 ? std::numeric_limits<double>::infinity() : out.singular_values[out.rank - 1] / below;
  }
  return out;
}

std::optional<Matrix<double>> solve_float(const Matrix<double>& a, const Matrix<double>& b, double rel_tol) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) throw std::invalid_argument("solve_float: shape mismatch");
  const Eigen::MatrixXd ea = to_eigen(a);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ea);
  lu.setThreshold(rel_tol);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::MatrixXd x = lu.solve(to_eigen(b));
  Matrix<double> out(b.rows(), b.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace pnn
