#include <doctest.h>

#include <cmath>
#include <sstream>

#include "subsearch/dataset.hpp"
#include "subsearch/objective.hpp"
#include "support.hpp"

using namespace subsearch;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

}  // namespace

TEST_SUITE("data-io") {
  TEST_CASE("parse a two-line file") {
    const Dataset ds = parse("+1 1:2.0 3:1.0\n-1 2:5.0");
    CHECK(ds.n() == 2);
    CHECK(ds.d() == 3);
    CHECK(ds.y == Vector{1, -1});
    CHECK(ds.label_kind == LabelKind::binary);
    CHECK(ds.X.is_sparse());
    CHECK(ds.X.to_dense() == DenseMatrix(2, 3, {2, 0, 1, 0, 5, 0}));
  }

  TEST_CASE("labels 0/1 map to -1/+1") {
    const Dataset ds = parse("0 1:1\n1 1:2\n0 2:3\n");
    CHECK(ds.y == Vector{-1, 1, -1});
    CHECK(ds.label_kind == LabelKind::binary);
  }

  TEST_CASE("more than two labels stay real") {
    const Dataset ds = parse("0.5 1:1\n1.5 1:2\n2.5 2:3\n");
    CHECK(ds.label_kind == LabelKind::real);
    CHECK(ds.y == Vector{0.5, 1.5, 2.5});
  }

  TEST_CASE("malformed input reports the line") {
    try {
      parse("+1 1:2\n-1 3:1 2:4\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    try {
      parse("+1 1:2\n+1 1:2\n-1 x:4\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse("+1 0:1\n"), ParseError);
    CHECK_THROWS_AS(parse("abc 1:1\n"), ParseError);
  }

  TEST_CASE("write then parse round-trips exactly") {
    Rng rng(4);
    DenseMatrix X(100, 12);
    Vector y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < 12; ++j)
        if (rng.uniform() < 0.3) X(i, j) = rng.normal() * std::pow(10.0, 6 * rng.uniform() - 3);
    }
    X(0, 11) = 1.0;  // pin d
    const Dataset ds = make_dataset(CountedMatrix(SparseMatrix::from_dense(X)), y, LabelKind::binary);
    std::stringstream buf;
    write_libsvm(buf, ds);
    const Dataset back = parse_libsvm(buf);
    CHECK(back.y == ds.y);
    CHECK(back.X.to_dense() == X);
  }

  TEST_CASE("standardize: population sd, zero-variance columns, idempotence") {
    const Dataset ds = make_dataset(CountedMatrix(DenseMatrix(2, 2, {1, 4, 3, 4})), {1, -1},
                                    LabelKind::binary);
    const Dataset s = standardize(ds);
    const DenseMatrix Z = s.X.to_dense();
    CHECK(Z(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(Z(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(Z(0, 1) == 0.0);
    CHECK(Z(1, 1) == 0.0);
    CHECK_FALSE(s.X.is_sparse());

    const Dataset g = gen_logistic(50, 6, 2);
    const DenseMatrix once = standardize(g).X.to_dense();
    const DenseMatrix twice = standardize(standardize(g)).X.to_dense();
    double worst = 0;
    for (std::size_t k = 0; k < once.size(); ++k)
      worst = std::max(worst, std::abs(once.values()[k] - twice.values()[k]));
    CHECK(worst <= 1e-12);
    for (std::size_t j = 0; j < 6; ++j) {
      double mean = 0, var = 0;
      for (std::size_t i = 0; i < 50; ++i) mean += once(i, j);
      mean /= 50;
      for (std::size_t i = 0; i < 50; ++i) var += (once(i, j) - mean) * (once(i, j) - mean);
      CHECK(std::abs(mean) <= 1e-12);
      CHECK(var / 50 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("generators are deterministic") {
    const Dataset a = gen_logistic(40, 5, 9), b = gen_logistic(40, 5, 9);
    CHECK(a.X.to_dense() == b.X.to_dense());
    CHECK(a.y == b.y);
    const Dataset c = gen_logistic(40, 5, 10);
    CHECK_FALSE(a.X.to_dense() == c.X.to_dense());
    const Dataset q1 = gen_quadratic(30, 4, 3), q2 = gen_quadratic(30, 4, 3);
    CHECK(q1.X.to_dense() == q2.X.to_dense());
    CHECK(q1.y == q2.y);
    CHECK(q1.label_kind == LabelKind::real);
    CHECK(a.label_kind == LabelKind::binary);
    for (double v : a.y) CHECK((v == 1.0 || v == -1.0));
  }

  TEST_CASE("condition scale 1 gives comparable column norms") {
    const Dataset ds = gen_logistic(2000, 10, 1, 1.0);
    const DenseMatrix X = ds.X.to_dense();
    double lo = INFINITY, hi = 0;
    for (std::size_t j = 0; j < 10; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < X.rows(); ++i) s += X(i, j) * X(i, j);
      lo = std::min(lo, std::sqrt(s));
      hi = std::max(hi, std::sqrt(s));
    }
    CHECK(hi <= 1.2 * lo);
  }

  TEST_CASE("logistic loss at zero is n ln 2") {
    const LcpObjective f(gen_logistic(200, 20, 1), LossKind::logistic);
    CHECK(f.f_value(Vector(20, 0.0)) == doctest::Approx(200 * std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("least squares: trivial instance and normal equations") {
    const LcpObjective triv(make_dataset(CountedMatrix(DenseMatrix(1, 1, {1})), {0}, LabelKind::real),
                            LossKind::least_squares);
    CHECK(triv.f_grad(Vector{0.0})[0] == 0.0);

    const Dataset q = gen_quadratic(60, 5, 7);
    const Eigen::MatrixXd X = support::to_eigen(q.X.to_dense());
    const Eigen::VectorXd w = (X.transpose() * X).ldlt().solve(X.transpose() * support::to_eigen(q.y));
    const LcpObjective f(q, LossKind::least_squares);
    const Vector g = f.f_grad(support::from_eigen_vec(w));
    CHECK(norm(g) <= 1e-8 * std::max(1.0, norm(q.y)));
  }
}
