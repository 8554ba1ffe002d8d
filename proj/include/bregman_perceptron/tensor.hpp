#pragma once

// Dense row-major vectors and matrices plus the few kernels the perceptron
// trainers need. Everything is double precision; reductions run in a fixed
// ascending index order so results are reproducible bit for bit.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bregman {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  DenseVector(std::initializer_list<double> values) : data_(values) {}
  explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {}
  explicit DenseVector(std::span<const double> values)
      : data_(values.begin(), values.end()) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> data_;
};

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of row-major `values`; throws DimensionError if the
  /// entry count is not rows * cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  /// Nested-list construction, one inner list per row.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// W^T x for W of shape m x n and x of length m.
DenseVector matvec_transposed(const DenseMatrix& W, std::span<const double> x);
inline DenseVector matvec_transposed(const DenseMatrix& W, const DenseVector& x) {
  return matvec_transposed(W, x.values());
}

/// The m x n matrix x e^T, i.e. entry (i, j) = x[i] * e[j]. Adding it to an
/// m x n weight matrix applies the rank-one update W + e x^T in the
/// transposed storage convention used throughout.
DenseMatrix outer_product(const DenseVector& e, std::span<const double> x);
inline DenseMatrix outer_product(const DenseVector& e, const DenseVector& x) {
  return outer_product(e, x.values());
}

/// B + alpha * A.
DenseMatrix axpy_matrix(double alpha, const DenseMatrix& A, const DenseMatrix& B);

double l1_norm(const DenseMatrix& W);

// Small vector helpers shared by the loss and optimizer code.
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
DenseVector subtract(const DenseVector& a, const DenseVector& b);
DenseVector add(const DenseVector& a, const DenseVector& b);
DenseVector scale(double c, const DenseVector& a);
DenseMatrix scale(double c, const DenseMatrix& A);
bool all_finite(std::span<const double> values);

}  // namespace bregman
