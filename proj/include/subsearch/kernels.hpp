#pragma once

// Product kernels behind CountedMatrix.
//
// The default kernels are OpenMP-parallel over output entries (or blocks of
// output entries). Each output entry is accumulated by a single thread in
// ascending index order, so results are independent of the thread count.
// `reference::` holds plain serial loops used as test oracles and as the
// baseline in bench/.

#include <span>

#include "subsearch/matrix.hpp"

namespace subsearch::kernels {

// y = A x
void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void gemv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
// y = A^T x
void gemv_t(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void gemv_t(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
// C = A B
void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
// C = A^T B
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm_tn(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
// C = A B^T
void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);

namespace reference {

void gemv(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void gemv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
void gemv_t(const DenseMatrix& a, std::span<const double> x, std::span<double> y);
void gemv_t(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm_tn(const SparseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);

}  // namespace reference

}  // namespace subsearch::kernels
