#include "stacksense/matrix.hpp"

#include <cmath>

#include "stacksense/error.hpp"

namespace stacksense {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("Matrix row", cols_, r.size());
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) throw DimensionMismatch("Matrix::from_rows", m.cols_, rows[r].size());
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
  Matrix s(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = (*this)(rows[i], cols[j]);
  return s;
}

Matrix Matrix::select_columns(std::span<const std::size_t> cols) const {
  Matrix s(rows_, cols.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = (*this)(i, cols[j]);
  return s;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product", a.cols(), b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product", a.cols(), x.size());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

double norm_inf(const Matrix& m) {
  double best = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double norm_frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace stacksense
