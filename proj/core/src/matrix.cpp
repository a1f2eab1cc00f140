#include "tmt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T x " + shape_str(b));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " x " + shape_str(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a_row[k] * b_row[k];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

void add_inplace(Matrix& dst, const Matrix& src, double scale) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add: " + shape_str(dst) + " vs " + shape_str(src));
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

void add_row_broadcast(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw ShapeError("bias " + shape_str(bias) + " does not broadcast over " + shape_str(m));
  }
  auto b = bias.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  auto o = out.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) o[j] += r[j];
  }
  return out;
}

Matrix softmax_columns(const Matrix& m) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mx = kNegInf;
    for (std::size_t i = 0; i < m.rows(); ++i) mx = std::max(mx, m(i, j));
    if (!std::isfinite(mx)) {
      throw DegenerateColumnError("softmax column " + std::to_string(j) +
                                  " has no finite entry");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      const double e = v == kNegInf ? 0.0 : std::exp(v - mx);
      out(i, j) = e;
      total += e;
    }
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) /= total;
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    double mx = kNegInf;
    for (double v : in) mx = std::max(mx, v);
    if (!std::isfinite(mx)) {
      throw DegenerateColumnError("softmax row " + std::to_string(i) + " has no finite entry");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = in[j] == kNegInf ? 0.0 : std::exp(in[j] - mx);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace tmt
