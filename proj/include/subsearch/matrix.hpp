#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace subsearch {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse row matrix. A column-compressed copy is built at
/// construction so that both A*x and A^T*y parallelize over output entries.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Validates: row_ptr monotone and sized rows+1, column indices strictly
  /// increasing within each row and < cols, values finite and nonzero.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> col_idx, std::vector<double> values);

  static SparseMatrix from_dense(const DenseMatrix& dense);
  DenseMatrix to_dense() const;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  // Column-compressed view (the transpose in CSR form).
  std::span<const std::size_t> col_ptr() const noexcept { return col_ptr_; }
  std::span<const std::size_t> row_idx() const noexcept { return row_idx_; }
  std::span<const double> col_values() const noexcept { return col_values_; }

 private:
  void build_columns();

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> row_idx_;
  std::vector<double> col_values_;
};

/// The registered data matrix. Every product with the payload bumps a shared
/// counter by exactly one, whatever the width of the other operand. Copies
/// share both the payload and the counters.
class CountedMatrix {
 public:
  using Payload = std::variant<DenseMatrix, SparseMatrix>;

  explicit CountedMatrix(DenseMatrix dense);
  explicit CountedMatrix(SparseMatrix sparse);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_sparse() const noexcept { return std::holds_alternative<SparseMatrix>(*payload_); }
  const Payload& payload() const noexcept { return *payload_; }
  DenseMatrix to_dense() const;

  std::uint64_t count() const noexcept { return counters_->products.load(); }
  void reset_count() const noexcept { counters_->products.store(0); }
  /// Products taken through the audit_* entry points; never part of a budget.
  std::uint64_t audit_count() const noexcept { return counters_->audits.load(); }

  Vector audit_mat_vec(std::span<const double> x) const;
  Vector audit_mat_t_vec(std::span<const double> y) const;
  DenseMatrix audit_mat_mat(const DenseMatrix& b) const;
  DenseMatrix audit_mat_t_mat(const DenseMatrix& b) const;

 private:
  struct Counters {
    std::atomic<std::uint64_t> products{0};
    std::atomic<std::uint64_t> audits{0};
  };

  friend Vector mat_vec(const CountedMatrix&, std::span<const double>);
  friend Vector mat_t_vec(const CountedMatrix&, std::span<const double>);
  friend DenseMatrix mat_mat(const CountedMatrix&, const DenseMatrix&);
  friend DenseMatrix mat_t_mat(const CountedMatrix&, const DenseMatrix&);

  Vector multiply(std::span<const double> x) const;
  Vector multiply_transpose(std::span<const double> y) const;
  DenseMatrix multiply(const DenseMatrix& b) const;
  DenseMatrix multiply_transpose(const DenseMatrix& b) const;

  std::shared_ptr<const Payload> payload_;
  std::shared_ptr<Counters> counters_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// A*x. Throws std::invalid_argument on dimension mismatch.
Vector mat_vec(const CountedMatrix& a, std::span<const double> x);
/// A^T*y.
Vector mat_t_vec(const CountedMatrix& a, std::span<const double> y);
/// A*B for a dense block B; one counted product regardless of B's width.
DenseMatrix mat_mat(const CountedMatrix& a, const DenseMatrix& b);
/// A^T*B.
DenseMatrix mat_t_mat(const CountedMatrix& a, const DenseMatrix& b);

// Small O(n) helpers. Serial on purpose: summation order is fixed so that
// optimizer traces are reproducible bit for bit.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);
/// y += a*x
void axpy(double a, std::span<const double> x, std::span<double> y);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(double a, std::span<const double> x);
bool all_finite(std::span<const double> a);

}  // namespace subsearch
