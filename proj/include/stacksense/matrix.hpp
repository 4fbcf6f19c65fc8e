#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace stacksense {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  // Builds a matrix from N row vectors of equal length.
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  // Submatrix of the given rows and columns, in the given order.
  Matrix select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;
  Matrix select_columns(std::span<const std::size_t> cols) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(const Matrix& m);
// Max absolute row sum.
double norm_inf(const Matrix& m);
double norm_frobenius(const Matrix& m);

}  // namespace stacksense
