#include "cedr/matrix.hpp"

#include <cmath>

#include "cedr/error.hpp"

namespace cedr::nn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(rows * cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
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

void Matrix::fill(double v) {
  for (auto& x : data_) x = v;
}

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) {
    throw ShapeError("cannot add " + other.shape_string() + " to " + shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " times " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* o = out.data() + r * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(r, k);
      if (s == 0.0) continue;
      const double* w = b.data() + k * n;
      for (std::size_t c = 0; c < n; ++c) o[c] += s * w[c];
    }
  }
  return out;
}

}  // namespace cedr::nn
