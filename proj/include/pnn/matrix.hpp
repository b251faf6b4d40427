// Small dense row-major matrix over any scalar, plus the rank and solve
// routines every module shares: exact Gaussian elimination for Rational and
// Fp, SVD with a relative threshold for double.
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnn/scalar.hpp"

namespace pnn {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw std::invalid_argument("Matrix: data size does not match shape");
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  [[nodiscard]] Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix product: shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& aik = a(i, k);
        if (is_zero(aik)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  /// Rows `rs` and columns `cs` of this matrix.
  [[nodiscard]] Matrix submatrix(std::span<const std::size_t> rs, std::span<const std::size_t> cs) const {
    Matrix s(rs.size(), cs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
      for (std::size_t j = 0; j < cs.size(); ++j) s(i, j) = (*this)(rs[i], cs[j]);
    return s;
  }

  template <class U, class F>
  [[nodiscard]] Matrix<U> map(F&& f) const {
    std::vector<U> out;
    out.reserve(data_.size());
    for (const auto& v : data_) out.push_back(f(v));
    return Matrix<U>(rows_, cols_, std::move(out));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Numerical rank of a float matrix: singular values below rel_tol * sigma_max
/// count as zero. `gap` is sigma_rank / sigma_{rank+1} (infinity when the
/// spectrum has no trailing zero block).
struct FloatRank {
  std::size_t rank = 0;
  std::vector<double> singular_values;
  double gap = 0.0;
};

FloatRank float_rank(const Matrix<double>& m, double rel_tol);

/// Exact rank by Gaussian elimination over Rational or Fp.
template <class T>
std::size_t exact_rank(Matrix<T> m) {
  static_assert(is_exact_v<T>, "exact_rank needs an exact field");
  std::size_t rank = 0;
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && is_zero(m(pivot, c))) ++pivot;
    if (pivot == rows) continue;
    if (pivot != rank)
      for (std::size_t j = c; j < cols; ++j) std::swap(m(pivot, j), m(rank, j));
    const T inv = T(1) / m(rank, c);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      if (is_zero(m(i, c))) continue;
      const T f = m(i, c) * inv;
      for (std::size_t j = c; j < cols; ++j) m(i, j) -= f * m(rank, j);
    }
    ++rank;
  }
  return rank;
}

/// Solves A X = B for square A over an exact field; nullopt when A is singular.
template <class T>
std::optional<Matrix<T>> solve_exact(Matrix<T> a, Matrix<T> b) {
  static_assert(is_exact_v<T>, "solve_exact needs an exact field");
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("solve_exact: shape mismatch");
  const std::size_t m = b.cols();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    while (pivot < n && is_zero(a(pivot, c))) ++pivot;
    if (pivot == n) return std::nullopt;
    if (pivot != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(c, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(b(pivot, j), b(c, j));
    }
    const T inv = T(1) / a(c, c);
    for (std::size_t j = c; j < n; ++j) a(c, j) *= inv;
    for (std::size_t j = 0; j < m; ++j) b(c, j) *= inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || is_zero(a(i, c))) continue;
      const T f = a(i, c);
      for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
      for (std::size_t j = 0; j < m; ++j) b(i, j) -= f * b(c, j);
    }
  }
  return b;
}

/// Solves A X = B for square float A by LU with full pivoting; nullopt when
/// the pivot ratio falls below rel_tol (numerically singular).
std::optional<Matrix<double>> solve_float(const Matrix<double>& a, const Matrix<double>& b, double rel_tol = 1e-13);

/// Determinant by cofactor-free elimination; works for any field scalar.
template <class T>
T determinant(Matrix<T> m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("determinant: matrix not square");
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (n == 3) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  }
  T det(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    if constexpr (std::is_same_v<T, double>) {
      for (std::size_t i = c + 1; i < n; ++i)
        if (std::abs(m(i, c)) > std::abs(m(pivot, c))) pivot = i;
    } else {
      while (pivot < n && is_zero(m(pivot, c))) ++pivot;
      if (pivot == n) return T(0);
    }
    if (is_zero(m(pivot, c))) return T(0);
    if (pivot != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(pivot, j), m(c, j));
      det = -det;
    }
    det *= m(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      const T f = m(i, c) / m(c, c);
      for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
    }
  }
  return det;
}

/// Calls f(rows, cols) for every k-subset pair of rows and columns.
template <class F>
void for_each_minor_index(std::size_t rows, std::size_t cols, std::size_t k, F&& f) {
  if (k > rows || k > cols || k == 0) return;
  std::vector<std::size_t> ri(k);
  std::vector<std::size_t> ci(k);
  auto next = [](std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t kk = idx.size();
    for (std::size_t p = kk; p-- > 0;) {
      if (idx[p] < n - kk + p) {
        ++idx[p];
        for (std::size_t q = p + 1; q < kk; ++q) idx[q] = idx[q - 1] + 1;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < k; ++i) ri[i] = i;
  do {
    for (std::size_t i = 0; i < k; ++i) ci[i] = i;
    do {
      if (!f(std::span<const std::size_t>(ri), std::span<const std::size_t>(ci))) return;
    } while (next(ci, cols));
  } while (next(ri, rows));
}

}  // namespace pnn
