#include <doctest.h>

#include <stdexcept>
#include <thread>

#include "subsearch/kernels.hpp"
#include "subsearch/matrix.hpp"
#include "support.hpp"

using namespace subsearch;
using support::random_dense;
using support::random_vector;
using support::to_eigen;

namespace {

SparseMatrix random_sparse(std::size_t r, std::size_t c, Rng& rng, double density = 0.4) {
  DenseMatrix d(r, c);
  for (double& x : d.values())
    if (rng.uniform() < density) x = rng.normal();
  return SparseMatrix::from_dense(d);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("core-matrix") {
  TEST_CASE("identity and zero products") {
    CountedMatrix I(DenseMatrix::identity(3));
    CHECK(mat_vec(I, Vector{1, 2, 3}) == Vector{1, 2, 3});
    CHECK(mat_t_vec(I, Vector{4, 5, 6}) == Vector{4, 5, 6});
    CountedMatrix Z(DenseMatrix(2, 2));
    CHECK(mat_vec(Z, Vector{7, -3}) == Vector{0, 0});
    CountedMatrix row(DenseMatrix(1, 2, {2, 3}));
    CHECK(mat_t_vec(row, Vector{1}) == Vector{2, 3});
    CountedMatrix I2(DenseMatrix::identity(2));
    const DenseMatrix B(2, 2, {1, 2, 3, 4});
    CHECK(mat_mat(I2, B) == B);
  }

  TEST_CASE("dense products match the Eigen oracle") {
    Rng rng(11);
    const DenseMatrix A = random_dense(4, 3, rng);
    const CountedMatrix X(A);
    const Vector x = random_vector(3, rng), y = random_vector(4, rng);
    const Eigen::VectorXd ax = to_eigen(A) * to_eigen(x);
    const Eigen::VectorXd aty = to_eigen(A).transpose() * to_eigen(y);
    CHECK(max_abs_diff(mat_vec(X, x), std::span<const double>(ax.data(), 4)) <= 1e-12);
    CHECK(max_abs_diff(mat_t_vec(X, y), std::span<const double>(aty.data(), 3)) <= 1e-12);

    const DenseMatrix A34 = random_dense(3, 4, rng), B42 = random_dense(4, 2, rng);
    const Eigen::MatrixXd ab = to_eigen(A34) * to_eigen(B42);
    const DenseMatrix got = mat_mat(CountedMatrix(A34), B42);
    CHECK((to_eigen(got) - ab).cwiseAbs().maxCoeff() <= 1e-12);

    const DenseMatrix B32 = random_dense(3, 2, rng);
    const Eigen::MatrixXd atb = to_eigen(A34).transpose() * to_eigen(B32);
    CHECK((to_eigen(mat_t_mat(CountedMatrix(A34), B32)) - atb).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("one-column block reproduces mat_vec") {
    Rng rng(3);
    const CountedMatrix X(random_dense(5, 4, rng));
    const Vector x = random_vector(4, rng);
    const DenseMatrix b(4, 1, x);
    CHECK(mat_mat(X, b).values()[0] == mat_vec(X, x)[0]);
    const DenseMatrix got = mat_mat(X, b);
    CHECK(max_abs_diff(got.values(), mat_vec(X, x)) == 0.0);
  }

  TEST_CASE("sparse products agree with densified products") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const SparseMatrix S = random_sparse(5, 4, rng);
      const CountedMatrix Xs(S), Xd(S.to_dense());
      const Vector x = random_vector(4, rng), y = random_vector(5, rng);
      CHECK(max_abs_diff(mat_vec(Xs, x), mat_vec(Xd, x)) <= 1e-12);
      CHECK(max_abs_diff(mat_t_vec(Xs, y), mat_t_vec(Xd, y)) <= 1e-12);
      const DenseMatrix B = random_dense(4, 3, rng), C = random_dense(5, 2, rng);
      CHECK(max_abs_diff(mat_mat(Xs, B).values(), mat_mat(Xd, B).values()) <= 1e-12);
      CHECK(max_abs_diff(mat_t_mat(Xs, C).values(), mat_t_mat(Xd, C).values()) <= 1e-12);
      const Eigen::VectorXd oracle = to_eigen(S.to_dense()).transpose() * to_eigen(y);
      CHECK(max_abs_diff(mat_t_vec(Xs, y), std::span<const double>(oracle.data(), 4)) <= 1e-12);
    }
  }

  TEST_CASE("parallel kernels agree with serial reference kernels") {
    Rng rng(8);
    const DenseMatrix A = random_dense(37, 23, rng), B = random_dense(23, 5, rng);
    const DenseMatrix C = random_dense(37, 5, rng), E = random_dense(9, 23, rng);
    const SparseMatrix S = random_sparse(37, 23, rng, 0.2);
    const Vector x = random_vector(23, rng), y = random_vector(37, rng);
    Vector p(37), q(37);
    kernels::gemv(A, x, p);
    kernels::reference::gemv(A, x, q);
    CHECK(p == q);
    kernels::gemv(S, x, p);
    kernels::reference::gemv(S, x, q);
    CHECK(max_abs_diff(p, q) <= 1e-12);
    Vector r(23), s(23);
    kernels::gemv_t(A, y, r);
    kernels::reference::gemv_t(A, y, s);
    CHECK(max_abs_diff(r, s) <= 1e-12);
    kernels::gemv_t(S, y, r);
    kernels::reference::gemv_t(S, y, s);
    CHECK(max_abs_diff(r, s) <= 1e-12);
    DenseMatrix m1(37, 5), m2(37, 5);
    kernels::gemm(A, B, m1);
    kernels::reference::gemm(A, B, m2);
    CHECK(max_abs_diff(m1.values(), m2.values()) <= 1e-12);
    kernels::gemm(S, B, m1);
    kernels::reference::gemm(S, B, m2);
    CHECK(max_abs_diff(m1.values(), m2.values()) <= 1e-12);
    DenseMatrix t1(23, 5), t2(23, 5);
    kernels::gemm_tn(A, C, t1);
    kernels::reference::gemm_tn(A, C, t2);
    CHECK(max_abs_diff(t1.values(), t2.values()) <= 1e-12);
    kernels::gemm_tn(S, C, t1);
    kernels::reference::gemm_tn(S, C, t2);
    CHECK(max_abs_diff(t1.values(), t2.values()) <= 1e-12);
    DenseMatrix n1(37, 9), n2(37, 9);
    kernels::gemm_nt(A, E, n1);
    kernels::reference::gemm_nt(A, E, n2);
    CHECK(max_abs_diff(n1.values(), n2.values()) <= 1e-12);
  }

  TEST_CASE("counter: fresh, per-product delta, reset, shared by copies") {
    Rng rng(1);
    const CountedMatrix X(random_dense(6, 4, rng));
    CHECK(X.count() == 0);
    const Vector x = random_vector(4, rng), y = random_vector(6, rng);
    mat_vec(X, x);
    mat_t_vec(X, y);
    CHECK(X.count() == 2);
    for (std::size_t width : {1u, 3u, 17u}) {
      const auto before = X.count();
      mat_mat(X, random_dense(4, width, rng));
      CHECK(X.count() - before == 1);
      mat_t_mat(X, random_dense(6, width, rng));
      CHECK(X.count() - before == 2);
    }
    const CountedMatrix copy = X;
    mat_vec(copy, x);
    CHECK(X.count() == 9);
    X.audit_mat_vec(x);
    X.audit_mat_t_vec(y);
    CHECK(X.count() == 9);
    CHECK(X.audit_count() == 2);
    X.reset_count();
    CHECK(X.count() == 0);
  }

  TEST_CASE("counter tolerates concurrent increments") {
    Rng rng(2);
    const CountedMatrix X(random_dense(8, 8, rng));
    const Vector x = random_vector(8, rng);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
      threads.emplace_back([&] {
        for (int i = 0; i < 250; ++i) mat_vec(X, x);
      });
    for (auto& t : threads) t.join();
    CHECK(X.count() == 1000);
  }

  TEST_CASE("dimension mismatch is rejected") {
    const CountedMatrix X(DenseMatrix(3, 2));
    CHECK_THROWS_AS(mat_vec(X, Vector{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(mat_t_vec(X, Vector{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(mat_mat(X, DenseMatrix(3, 1)), std::invalid_argument);
    CHECK_THROWS_AS(mat_t_mat(X, DenseMatrix(2, 1)), std::invalid_argument);
    CHECK(X.count() == 0);
  }

  TEST_CASE("sparse validation") {
    CHECK_THROWS(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}));
    CHECK_THROWS(SparseMatrix(1, 3, {0, 1}, {3}, {1.0}));
    CHECK_THROWS(SparseMatrix(1, 3, {0, 1}, {0}, {0.0}));
    CHECK_THROWS(SparseMatrix(1, 3, {0, 1}, {0}, {INFINITY}));
    CHECK_NOTHROW(SparseMatrix(1, 3, {0, 2}, {0, 2}, {1.0, -2.0}));
  }
}
