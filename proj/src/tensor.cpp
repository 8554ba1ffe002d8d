#include "bregman_perceptron/tensor.hpp"

#include <cmath>

#include "bregman_perceptron/errors.hpp"

namespace bregman {

namespace {

std::string shape(std::size_t r, std::size_t c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: " + std::to_string(data_.size()) +
                         " entries do not fill shape " + shape(rows_, cols_));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged row list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix I(n, n);
  for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

std::string DenseMatrix::shape_string() const { return shape(rows_, cols_); }

DenseVector matvec_transposed(const DenseMatrix& W, std::span<const double> x) {
  if (x.size() != W.rows()) {
    throw DimensionError("matvec_transposed: W is " + W.shape_string() + " but x has length " +
                         std::to_string(x.size()));
  }
  const std::size_t n = W.cols();
  DenseVector out(n);
  auto acc = out.values();
  // Row sweep keeps memory access contiguous; each out[j] still accumulates
  // over i in ascending order.
  for (std::size_t i = 0; i < W.rows(); ++i) {
    const double xi = x[i];
    const auto wrow = W.row(i);
    for (std::size_t j = 0; j < n; ++j) acc[j] += wrow[j] * xi;
  }
  return out;
}

DenseMatrix outer_product(const DenseVector& e, std::span<const double> x) {
  DenseMatrix out(x.size(), e.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < e.size(); ++j) r[j] = x[i] * e[j];
  }
  return out;
}

DenseMatrix axpy_matrix(double alpha, const DenseMatrix& A, const DenseMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw DimensionError("axpy_matrix: A is " + A.shape_string() + " but B is " + B.shape_string());
  }
  DenseMatrix out = B;
  auto o = out.values();
  const auto a = A.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += alpha * a[k];
  return out;
}

double l1_norm(const DenseMatrix& W) {
  double s = 0.0;
  for (double w : W.values()) s += std::abs(w);
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

DenseVector subtract(const DenseVector& a, const DenseVector& b) {
  require_same_length(a.values(), b.values(), "subtract");
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

DenseVector add(const DenseVector& a, const DenseVector& b) {
  require_same_length(a.values(), b.values(), "add");
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

DenseVector scale(double c, const DenseVector& a) {
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

DenseMatrix scale(double c, const DenseMatrix& A) {
  DenseMatrix out(A.rows(), A.cols());
  auto o = out.values();
  const auto a = A.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = c * a[k];
  return out;
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace bregman
