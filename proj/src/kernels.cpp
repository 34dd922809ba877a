#include "subsearch/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace subsearch::kernels {

namespace {

// Column block width for the transposed dense kernels: each thread owns a
// contiguous slab of output entries and streams the matrix row by row.
constexpr std::int64_t kColumnBlock = 128;

std::int64_t as_index(std::size_t n) { return static_cast<std::int64_t>(n); }

}  // namespace

void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::int64_t rows = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto row = a.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void gemv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto ptr = a.row_ptr();
  const auto idx = a.col_idx();
  const auto val = a.values();
  const std::int64_t rows = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) acc += val[k] * x[idx[k]];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void gemv_t(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::int64_t cols = as_index(a.cols());
  const std::int64_t blocks = (cols + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t j0 = static_cast<std::size_t>(b * kColumnBlock);
    const std::size_t j1 = std::min(static_cast<std::size_t>(cols), j0 + kColumnBlock);
    std::fill(y.begin() + j0, y.begin() + j1, 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double xi = x[i];
      const auto row = a.row(i);
      for (std::size_t j = j0; j < j1; ++j) y[j] += row[j] * xi;
    }
  }
}

void gemv_t(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto ptr = a.col_ptr();
  const auto idx = a.row_idx();
  const auto val = a.col_values();
  const std::int64_t cols = as_index(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t k = ptr[j]; k < ptr[j + 1]; ++k) acc += val[k] * x[idx[k]];
    y[static_cast<std::size_t>(j)] = acc;
  }
}

void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.cols());
  const std::int64_t rows = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    auto out = c.row(static_cast<std::size_t>(i));
    const auto arow = a.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < arow.size(); ++k) {
      const double aik = arow[k];
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += aik * brow[j];
    }
  }
}

void gemm(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.cols());
  const auto ptr = a.row_ptr();
  const auto idx = a.col_idx();
  const auto val = a.values();
  const std::int64_t rows = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    auto out = c.row(static_cast<std::size_t>(i));
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      const auto brow = b.row(idx[k]);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += val[k] * brow[j];
    }
  }
}

void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.cols(), b.cols());
  const std::int64_t cols = as_index(a.cols());
  const std::int64_t blocks = (cols + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk * kColumnBlock);
    const std::size_t j1 = std::min(static_cast<std::size_t>(cols), j0 + kColumnBlock);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto arow = a.row(i);
      const auto brow = b.row(i);
      for (std::size_t j = j0; j < j1; ++j) {
        const double aij = arow[j];
        auto out = c.row(j);
        for (std::size_t l = 0; l < out.size(); ++l) out[l] += aij * brow[l];
      }
    }
  }
}

void gemm_tn(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.cols(), b.cols());
  const auto ptr = a.col_ptr();
  const auto idx = a.row_idx();
  const auto val = a.col_values();
  const std::int64_t cols = as_index(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) {
    auto out = c.row(static_cast<std::size_t>(j));
    for (std::size_t k = ptr[j]; k < ptr[j + 1]; ++k) {
      const auto brow = b.row(idx[k]);
      for (std::size_t l = 0; l < out.size(); ++l) out[l] += val[k] * brow[l];
    }
  }
}

void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.rows());
  const std::int64_t rows = as_index(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto arow = a.row(static_cast<std::size_t>(i));
    auto out = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < out.size(); ++j) {
      const auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t l = 0; l < arow.size(); ++l) acc += arow[l] * brow[l];
      out[j] = acc;
    }
  }
}

namespace reference {

void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    y[i] = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  }
}

void gemv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto ptr = a.row_ptr();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    y[i] = 0.0;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) y[i] += a.values()[k] * x[a.col_idx()[k]];
  }
}

void gemv_t(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
}

void gemv_t(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  const auto ptr = a.row_ptr();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) y[a.col_idx()[k]] += a.values()[k] * x[i];
}

void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
}

void gemm(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.cols());
  const auto ptr = a.row_ptr();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k)
      for (std::size_t j = 0; j < b.cols(); ++j)
        c(i, j) += a.values()[k] * b(a.col_idx()[k], j);
}

void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.rows(); ++k) c(i, j) += a(k, i) * b(k, j);
}

void gemm_tn(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.cols(), b.cols());
  const auto ptr = a.row_ptr();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k)
      for (std::size_t j = 0; j < b.cols(); ++j)
        c(a.col_idx()[k], j) += a.values()[k] * b(i, j);
}

void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  c = DenseMatrix(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(j, k);
}

}  // namespace reference

}  // namespace subsearch::kernels
