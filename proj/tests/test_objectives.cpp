#include <doctest.h>

#include <cmath>

#include "subsearch/objective.hpp"
#include "subsearch/subspace_solver.hpp"
#include "support.hpp"

using namespace subsearch;
using support::fd_gradient;
using support::random_vector;
using support::rel_err;

namespace {

Dataset one_point(double y, double x = 1.0) {
  return make_dataset(CountedMatrix(DenseMatrix(1, 1, {x})), {y}, LabelKind::binary);
}

MarginSubspace make_subspace(const LcpObjective& f, const Vector& w,
                             const std::vector<Vector>& dirs) {
  MarginSubspace s;
  s.w = w;
  s.m = f.X().audit_mat_vec(w);
  for (const auto& p : dirs) s.dirs.push_back({p, f.X().audit_mat_vec(p)});
  return s;
}

}  // namespace

TEST_SUITE("lcp-objectives") {
  TEST_CASE("logistic values at zero and in the tails") {
    const Dataset ds = gen_logistic(30, 4, 1);
    const LcpObjective f(ds, LossKind::logistic);
    CHECK(f.g_value(Vector(30, 0.0)) == doctest::Approx(30 * std::log(2.0)).epsilon(1e-14));
    const Vector g0 = f.g_grad(Vector(30, 0.0));
    for (std::size_t i = 0; i < 30; ++i) CHECK(g0[i] == -ds.y[i] / 2);

    const LcpObjective one(one_point(1.0), LossKind::logistic);
    const double tail = one.g_value(Vector{1e6});
    CHECK(std::isfinite(tail));
    CHECK(tail >= 0.0);
    CHECK(tail <= 1e-300);
    const double wrong = one.g_value(Vector{-1e6});
    CHECK(wrong == doctest::Approx(1e6).epsilon(1e-15));
    CHECK(std::isfinite(one.g_grad(Vector{-1e6})[0]));
  }

  TEST_CASE("least squares at m = y") {
    const Dataset q = gen_quadratic(20, 3, 2);
    const LcpObjective f(q, LossKind::least_squares);
    CHECK(f.g_value(q.y) == 0.0);
    for (double v : f.g_grad(q.y)) CHECK(v == 0.0);
  }

  TEST_CASE("l2 term alone gives lambda/2 ||w||^2") {
    const Dataset zero = make_dataset(CountedMatrix(DenseMatrix(3, 4)), {0, 0, 0}, LabelKind::real);
    const LcpObjective f(zero, LossKind::least_squares, 2.0);
    const Vector w{1.5, -2, 0.25, 3};
    CHECK(f.f_value(w) == doctest::Approx(squared_norm(w)).epsilon(1e-15));
  }

  TEST_CASE("g gradient matches finite differences") {
    Rng rng(6);
    for (auto loss : {LossKind::logistic, LossKind::least_squares}) {
      const Dataset ds = loss == LossKind::logistic ? gen_logistic(25, 3, 3) : gen_quadratic(25, 3, 3);
      const LcpObjective f(ds, loss);
      const Vector m = random_vector(25, rng, 2.0);
      const Vector fd = fd_gradient([&](std::span<const double> x) { return f.g_value(x); }, m);
      CHECK(rel_err(f.g_grad(m), fd) < 1e-6);
    }
  }

  TEST_CASE("f gradient matches finite differences at 20 random points") {
    Rng rng(7);
    struct Case {
      LossKind loss;
      double lambda;
    };
    for (const Case c : {Case{LossKind::logistic, 0.0}, Case{LossKind::logistic, 0.1},
                         Case{LossKind::least_squares, 0.0}, Case{LossKind::least_squares, 0.5}}) {
      const Dataset ds =
          c.loss == LossKind::logistic ? gen_logistic(40, 6, 4, 5.0) : gen_quadratic(40, 6, 4);
      const LcpObjective f(ds, c.loss, c.lambda);
      for (int k = 0; k < 20; ++k) {
        const Vector w = random_vector(6, rng, 0.3);
        const Vector fd = fd_gradient([&](std::span<const double> x) { return f.f_value(x); }, w);
        CHECK(rel_err(f.f_grad(w), fd) < 1e-5);
      }
    }
  }

  TEST_CASE("cached and direct evaluation agree; product counts") {
    Rng rng(8);
    const LcpObjective f(gen_logistic(50, 5, 5), LossKind::logistic, 0.02);
    const Vector w = random_vector(5, rng);
    const Vector m = f.X().audit_mat_vec(w);
    f.X().reset_count();
    const double direct = f.f_value(w);
    CHECK(f.X().count() == 1);
    const double cached = f.f_value_cached(w, m);
    CHECK(f.X().count() == 1);
    CHECK(rel_err(cached, direct) <= 1e-12);
    const Vector gd = f.f_grad(w);
    CHECK(f.X().count() == 3);
    const Vector gc = f.f_grad_cached(w, m);
    CHECK(f.X().count() == 4);
    CHECK(rel_err(gc, gd) <= 1e-12);
  }

  TEST_CASE("restriction: zero step, gradient, and no products") {
    Rng rng(9);
    const LcpObjective f(gen_logistic(60, 5, 6), LossKind::logistic, 0.05);
    const Vector w = random_vector(5, rng, 0.2);
    const MarginSubspace s =
        make_subspace(f, w, {random_vector(5, rng), random_vector(5, rng), random_vector(5, rng)});
    f.X().reset_count();
    const SubProblem sp = f.restrict_to(s);
    CHECK(sp.dim == 3);
    CHECK(rel_err(sp.value(Vector(3, 0.0)), f.f_value_cached(w, s.m)) <= 1e-14);
    for (int k = 0; k < 10; ++k) {
      const Vector th = random_vector(3, rng, 0.1);
      Vector g(3);
      const double v = sp.value_and_gradient(th, g);
      CHECK(rel_err(v, f.f_value_cached(s.params_at(th), s.margins_at(th))) <= 1e-12);
      const Vector fd = fd_gradient([&](std::span<const double> x) { return sp.value(x); }, th);
      CHECK(rel_err(g, fd) < 1e-6);
    }
    CHECK(f.X().count() == 0);
  }

  TEST_CASE("least squares restriction is an exact quadratic") {
    Rng rng(10);
    const Dataset q = gen_quadratic(40, 4, 8);
    const LcpObjective f(q, LossKind::least_squares, 0.3);
    const Vector w = random_vector(4, rng), p = random_vector(4, rng);
    const MarginSubspace s = make_subspace(f, w, {p});
    const SubProblem sp = f.restrict_to(s);
    // phi(a) = 0.5||m + a Xp - y||^2 + 0.15||w + a p||^2
    const Vector& xp = s.dirs[0].margins;
    const Vector r = subtract(s.m, q.y);
    const double curv = squared_norm(xp) + 0.3 * squared_norm(p);
    const double slope = dot(r, xp) + 0.3 * dot(w, p);
    const double a_star = -slope / curv;
    const SubSolveResult res = solve(sp);
    CHECK(std::abs(res.theta[0] - a_star) <= 1e-10 * std::max(1.0, std::abs(a_star)));
  }
}
