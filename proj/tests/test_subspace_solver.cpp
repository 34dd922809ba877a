#include <doctest.h>

#include <cmath>

#include "subsearch/subspace_solver.hpp"
#include "support.hpp"

using namespace subsearch;

namespace {

/// 0.5 theta^T A theta - b^T theta.
SubProblem quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  SubProblem sp;
  sp.dim = static_cast<std::size_t>(b.size());
  sp.value = [A, b](std::span<const double> t) {
    const Eigen::VectorXd x = support::to_eigen(t);
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  sp.value_and_gradient = [A, b](std::span<const double> t, std::span<double> g) {
    const Eigen::VectorXd x = support::to_eigen(t);
    const Eigen::VectorXd gr = A * x - b;
    for (Eigen::Index i = 0; i < gr.size(); ++i) g[i] = gr[i];
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  return sp;
}

Eigen::VectorXd grad_at(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Vector& t) {
  return A * support::to_eigen(t) - b;
}

}  // namespace

TEST_SUITE("subspace-solver") {
  TEST_CASE("stationary start returns zero") {
    const SubSolveResult r = solve(quadratic(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)));
    CHECK(r.theta == Vector{0.0});
    CHECK(r.value == 0.0);
  }

  TEST_CASE("shifted 1-d quadratic") {
    Eigen::VectorXd b(1);
    b << 3.0;
    const SubSolveResult r = solve(quadratic(Eigen::MatrixXd::Identity(1, 1), b));
    CHECK(std::abs(r.theta[0] - 3.0) <= 1e-8);
  }

  TEST_CASE("2-d SPD quadratics match a direct solve") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::MatrixXd A = support::random_spd(2, rng, 1.0 + 99.0 * rng.uniform());
      Eigen::VectorXd b(2);
      b << rng.normal(), rng.normal();
      SubSolverOptions opts;
      opts.max_iters = 50;
      const SubSolveResult r = solve(quadratic(A, b), opts);
      const Eigen::VectorXd x = A.ldlt().solve(b);
      CHECK((support::to_eigen(r.theta) - x).norm() <= 1e-6 * std::max(1.0, x.norm()));
      CHECK(grad_at(A, b, r.theta).norm() <= 1e-8);
      CHECK(r.inner_iters <= 50);
    }
  }

  TEST_CASE("cliff: non-finite values are rejected") {
    SubProblem sp;
    sp.dim = 1;
    const auto f = [](double t) { return t > 0.5 ? NAN : -(t * 10) + 0.5 * t * t; };
    sp.value = [f](std::span<const double> t) { return f(t[0]); };
    sp.value_and_gradient = [f](std::span<const double> t, std::span<double> g) {
      g[0] = t[0] > 0.5 ? NAN : t[0] - 10;
      return f(t[0]);
    };
    const SubSolveResult r = solve(sp);
    CHECK(std::isfinite(r.theta[0]));
    CHECK(r.value <= sp.value(Vector{0.0}));
    CHECK(r.theta[0] <= 0.5);
    CHECK(r.theta[0] > 0.0);
  }

  TEST_CASE("never worse than zero on 1000 random smooth problems") {
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t p = 1 + trial % 4;
      Eigen::VectorXd c(p), a(p);
      for (std::size_t i = 0; i < p; ++i) {
        c[i] = rng.normal();
        a[i] = 3 * rng.normal();
      }
      const double scale = std::exp(4 * rng.normal());
      // sum_i scale*log(1 + exp(a_i t_i - c_i)) + 0.01 ||t||^2 - cos(sum t)
      const auto value = [=](std::span<const double> t) {
        double v = 0, s = 0;
        for (std::size_t i = 0; i < p; ++i) {
          const double z = a[i] * t[i] - c[i];
          v += scale * (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
          v += 0.01 * t[i] * t[i];
          s += t[i];
        }
        return v - std::cos(s);
      };
      SubProblem sp;
      sp.dim = p;
      sp.value = value;
      sp.value_and_gradient = [=](std::span<const double> t, std::span<double> g) {
        double s = 0;
        for (std::size_t i = 0; i < p; ++i) s += t[i];
        for (std::size_t i = 0; i < p; ++i) {
          const double z = a[i] * t[i] - c[i];
          g[i] = scale * a[i] / (1 + std::exp(-z)) + 0.02 * t[i] + std::sin(s);
        }
        return value(t);
      };
      const SubSolveResult r = solve(sp);
      CHECK(r.value <= value(Vector(p, 0.0)));
      CHECK(r.value == value(r.theta));
    }
  }

  TEST_CASE("deterministic") {
    Rng rng(14);
    const Eigen::MatrixXd A = support::random_spd(3, rng, 30);
    const Eigen::VectorXd b = Eigen::VectorXd::Random(3);
    const SubSolveResult r1 = solve(quadratic(A, b)), r2 = solve(quadratic(A, b));
    CHECK(r1.theta == r2.theta);
    CHECK(r1.value == r2.value);
    CHECK(r1.inner_iters == r2.inner_iters);
  }

  TEST_CASE("scaled and balanced solves reach the same minimizer") {
    Rng rng(15);
    const Eigen::MatrixXd A = support::random_spd(2, rng, 10);
    Eigen::VectorXd b(2);
    b << 1.0, -2.0;
    const Eigen::VectorXd x = A.ldlt().solve(b);
    const Vector scale{0.5, 3.0};
    const SubSolveResult s = solve_scaled(quadratic(A, b), scale);
    CHECK((support::to_eigen(s.theta) - x).norm() <= 1e-6);
    const SubSolveResult bal = solve_balanced(quadratic(A, b), Vector{2.0, 0.0});
    CHECK((support::to_eigen(bal.theta) - x).norm() <= 1e-6);
  }

  TEST_CASE("outer-iteration budget schedule is off by default") {
    SubSolverOptions o;
    CHECK(o.budget_for(1) == 100);
    o.outer_iteration_multiple = 3;
    CHECK(o.budget_for(0) == 1);
    CHECK(o.budget_for(2) == 6);
    CHECK(o.budget_for(1000) == 100);
  }
}
