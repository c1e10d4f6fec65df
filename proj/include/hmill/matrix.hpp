#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hmill {

/// Dense row-major matrix of doubles. Observations are stored in columns
/// throughout the library, so a batch of B samples is an m x B matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of row-major `data`; throws ShapeError on length mismatch.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Literal helper: {{1, 2}, {3, 4}} is a 2x2 matrix.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> values);

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws ShapeError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

/// a (n x k) * b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T (k x n)^T * b (k x m) without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a (n x m) * b^T (k x m)^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Horizontal concatenation; all parts must share the row count.
Matrix hcat(std::span<const Matrix> parts);
/// Vertical concatenation; all parts must share the column count.
Matrix vcat(std::span<const Matrix> parts);

/// Columns `idx` of `m`, in the given order.
Matrix select_cols(const Matrix& m, std::span<const std::size_t> idx);
/// Rows [begin, begin + count) of `m`.
Matrix row_block(const Matrix& m, std::size_t begin, std::size_t count);

std::string shape_str(const Matrix& m);

}  // namespace hmill
