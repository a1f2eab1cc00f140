#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace tmt {

/// Dense row-major matrix of doubles.
///
/// Entries are expected to be finite; additive attention masks are the one
/// place where -infinity is stored on purpose.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a · b. Throws ShapeError when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// Accumulate `src` into `dst` (same shape).
void add_inplace(Matrix& dst, const Matrix& src, double scale = 1.0);
/// Adds the 1×cols row vector `bias` to every row of `m`.
void add_row_broadcast(Matrix& m, const Matrix& bias);
/// Sum over rows, giving a 1×cols matrix.
Matrix column_sums(const Matrix& m);

/// Column-wise softmax with max subtraction.
///
/// -infinity entries map to exactly zero. Throws DegenerateColumnError if a
/// column has no finite entry.
Matrix softmax_columns(const Matrix& m);

/// Row-wise softmax (used for class logits); same stabilization.
Matrix softmax_rows(const Matrix& m);

double sigmoid(double x);

}  // namespace tmt
