#include "subsearch/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "subsearch/kernels.hpp"

namespace subsearch {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string shape(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "DenseMatrix: data length " + std::to_string(data_.size()) +
                                           " does not match " + shape(rows, cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  require(row_ptr_.size() == rows_ + 1, "SparseMatrix: row_ptr must have rows+1 entries");
  require(row_ptr_.front() == 0 && row_ptr_.back() == values_.size() &&
              col_idx_.size() == values_.size(),
          "SparseMatrix: inconsistent index arrays");
  for (std::size_t i = 0; i < rows_; ++i) {
    require(row_ptr_[i] <= row_ptr_[i + 1], "SparseMatrix: row_ptr not monotone");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      require(col_idx_[k] < cols_, "SparseMatrix: column index out of range in row " +
                                       std::to_string(i));
      require(k == row_ptr_[i] || col_idx_[k - 1] < col_idx_[k],
              "SparseMatrix: column indices not strictly increasing in row " + std::to_string(i));
      require(std::isfinite(values_[k]) && values_[k] != 0.0,
              "SparseMatrix: stored values must be finite and nonzero");
    }
  }
  build_columns();
}

void SparseMatrix::build_columns() {
  col_ptr_.assign(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++col_ptr_[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) col_ptr_[j + 1] += col_ptr_[j];
  row_idx_.resize(values_.size());
  col_values_.resize(values_.size());
  std::vector<std::size_t> next(col_ptr_.begin(), col_ptr_.end() - 1);
  // Row-major traversal keeps row indices ascending within each column.
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t slot = next[col_idx_[k]]++;
      row_idx_[slot] = i;
      col_values_[slot] = values_[k];
    }
  }
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<std::size_t> ptr{0};
  std::vector<std::size_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    for (std::size_t j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        idx.push_back(j);
        val.push_back(dense(i, j));
      }
    }
    ptr.push_back(val.size());
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(ptr), std::move(idx), std::move(val));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out(i, col_idx_[k]) = values_[k];
  return out;
}

CountedMatrix::CountedMatrix(DenseMatrix dense)
    : rows_(dense.rows()), cols_(dense.cols()) {
  require(all_finite(dense.values()), "CountedMatrix: non-finite entry in data matrix");
  payload_ = std::make_shared<const Payload>(std::move(dense));
  counters_ = std::make_shared<Counters>();
}

CountedMatrix::CountedMatrix(SparseMatrix sparse)
    : rows_(sparse.rows()), cols_(sparse.cols()) {
  payload_ = std::make_shared<const Payload>(std::move(sparse));
  counters_ = std::make_shared<Counters>();
}

DenseMatrix CountedMatrix::to_dense() const {
  return std::visit(
      [](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>)
          return m;
        else
          return m.to_dense();
      },
      *payload_);
}

Vector CountedMatrix::multiply(std::span<const double> x) const {
  require(x.size() == cols_, "mat_vec: matrix is " + shape(rows_, cols_) +
                                 " but vector has length " + std::to_string(x.size()));
  Vector y(rows_);
  std::visit([&](const auto& m) { kernels::gemv(m, x, y); }, *payload_);
  return y;
}

Vector CountedMatrix::multiply_transpose(std::span<const double> y) const {
  require(y.size() == rows_, "mat_t_vec: matrix is " + shape(rows_, cols_) +
                                 " but vector has length " + std::to_string(y.size()));
  Vector x(cols_);
  std::visit([&](const auto& m) { kernels::gemv_t(m, y, x); }, *payload_);
  return x;
}

DenseMatrix CountedMatrix::multiply(const DenseMatrix& b) const {
  require(b.rows() == cols_,
          "mat_mat: inner dimensions disagree (" + shape(rows_, cols_) + " * " +
              shape(b.rows(), b.cols()) + ")");
  DenseMatrix c;
  std::visit([&](const auto& m) { kernels::gemm(m, b, c); }, *payload_);
  return c;
}

DenseMatrix CountedMatrix::multiply_transpose(const DenseMatrix& b) const {
  require(b.rows() == rows_,
          "mat_t_mat: inner dimensions disagree (" + shape(cols_, rows_) + " * " +
              shape(b.rows(), b.cols()) + ")");
  DenseMatrix c;
  std::visit([&](const auto& m) { kernels::gemm_tn(m, b, c); }, *payload_);
  return c;
}

Vector CountedMatrix::audit_mat_vec(std::span<const double> x) const {
  auto y = multiply(x);
  counters_->audits.fetch_add(1);
  return y;
}

DenseMatrix CountedMatrix::audit_mat_mat(const DenseMatrix& b) const {
  auto c = multiply(b);
  counters_->audits.fetch_add(1);
  return c;
}

Vector CountedMatrix::audit_mat_t_vec(std::span<const double> y) const {
  auto x = multiply_transpose(y);
  counters_->audits.fetch_add(1);
  return x;
}

DenseMatrix CountedMatrix::audit_mat_t_mat(const DenseMatrix& b) const {
  auto c = multiply_transpose(b);
  counters_->audits.fetch_add(1);
  return c;
}

Vector mat_vec(const CountedMatrix& a, std::span<const double> x) {
  auto y = a.multiply(x);
  a.counters_->products.fetch_add(1);
  return y;
}

Vector mat_t_vec(const CountedMatrix& a, std::span<const double> y) {
  auto x = a.multiply_transpose(y);
  a.counters_->products.fetch_add(1);
  return x;
}

DenseMatrix mat_mat(const CountedMatrix& a, const DenseMatrix& b) {
  auto c = a.multiply(b);
  a.counters_->products.fetch_add(1);
  return c;
}

DenseMatrix mat_t_mat(const CountedMatrix& a, const DenseMatrix& b) {
  auto c = a.multiply_transpose(b);
  a.counters_->products.fetch_add(1);
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(double a, std::span<const double> x) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace subsearch
