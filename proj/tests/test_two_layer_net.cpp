#include <doctest.h>

#include <cmath>

#include "subsearch/two_layer_net.hpp"
#include "support.hpp"

using namespace subsearch;
using support::rel_err;

namespace {

Dataset regression_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  const Dataset g = gen_logistic(n, d, seed, 5.0);
  return make_dataset(g.X, g.y, LabelKind::real);
}

Vector flatten(const NetParams& p) {
  Vector x(p.W.values().begin(), p.W.values().end());
  x.insert(x.end(), p.v.begin(), p.v.end());
  return x;
}

NetParams unflatten(std::span<const double> x, std::size_t d, std::size_t r) {
  NetParams p{DenseMatrix(d, r), Vector(r)};
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d * r), p.W.values().begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(d * r), x.end(), p.v.begin());
  return p;
}

NetParams random_params(std::size_t d, std::size_t r, Rng& rng, double scale) {
  return {support::random_dense(d, r, rng, scale), support::random_vector(r, rng, scale)};
}

/// Eigen evaluation of ||tanh(XW) v - y||^2 + (lambda/2)(||W||^2 + ||v||^2).
double oracle_value(const Dataset& ds, const NetParams& p, double lambda) {
  const Eigen::MatrixXd H = (support::to_eigen(ds.X.to_dense()) * support::to_eigen(p.W)).array().tanh();
  const double loss = (H * support::to_eigen(p.v) - support::to_eigen(ds.y)).squaredNorm();
  return loss + 0.5 * lambda * (squared_norm(p.W.values()) + squared_norm(p.v));
}

struct Fixture {
  NetObjective obj;
  NetState s;
  NetGradient g;
  DenseMatrix D;  // X * grad_W
};

Fixture make_fixture(double lambda, std::uint64_t seed, std::size_t warmup = 3) {
  NetObjective obj(regression_data(40, 6, seed), lambda);
  NetState s = make_net_state(obj, init_params(6, 5, seed));
  for (std::size_t k = 0; k < warmup; ++k) step_net(obj, s, NetMethod::mg_so);
  NetGradient g = obj.gradient_cached(s.p, s.M);
  DenseMatrix D = obj.X().audit_mat_mat(g.W);
  return {std::move(obj), std::move(s), std::move(g), std::move(D)};
}

DenseMatrix neg(const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& x : out.values()) x = -x;
  return out;
}

DenseMatrix diff(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
  return out;
}

bool le(double a, double b) { return a <= b + 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("two-layer-net") {
  TEST_CASE("initialization: determinism and scale") {
    const NetParams a = init_params(200, 60, 3), b = init_params(200, 60, 3);
    CHECK(a.W == b.W);
    CHECK(a.v == b.v);
    double ss = 0;
    for (double x : a.W.values()) ss += x * x;
    const double sd = std::sqrt(ss / static_cast<double>(a.W.size()));
    const double expect = 1.0 / (60.0 * 201.0);
    CHECK(std::abs(sd - expect) <= 0.1 * expect);
  }

  TEST_CASE("forward: trivial cases and the Eigen oracle") {
    const Dataset ds = regression_data(30, 4, 1);
    const NetObjective obj(ds);
    NetParams p = init_params(4, 3, 1);
    p.v.assign(3, 0.0);
    CHECK(obj.value(p) == doctest::Approx(squared_norm(ds.y)).epsilon(1e-15));
    const NetParams q = init_params(4, 3, 2);
    CHECK(obj.value_cached(q, DenseMatrix(30, 3)) == doctest::Approx(squared_norm(ds.y)).epsilon(1e-15));

    Rng rng(2);
    for (double lambda : {0.0, 0.3}) {
      const NetObjective o(ds, lambda);
      const NetParams r = random_params(4, 3, rng, 0.5);
      CHECK(rel_err(o.value(r), oracle_value(ds, r, lambda)) <= 1e-12);
    }
  }

  TEST_CASE("backward: vanishing first layer and loss derivative") {
    const Dataset ds = regression_data(20, 4, 3);
    const NetObjective obj(ds);
    NetParams p = init_params(4, 3, 3);
    p.v.assign(3, 0.0);
    const DenseMatrix M = obj.X().audit_mat_mat(p.W);
    const auto [R, gv] = obj.backward(p, M);
    for (double x : R.values()) CHECK(x == 0.0);
    // with v = 0 predictions are zero, so grad g = -2y and grad_v = tanh(M)^T (-2y)
    for (std::size_t j = 0; j < 3; ++j) {
      double expect = 0;
      for (std::size_t i = 0; i < 20; ++i) expect += std::tanh(M(i, j)) * (-2 * ds.y[i]);
      CHECK(gv[j] == doctest::Approx(expect).epsilon(1e-13));
    }
  }

  TEST_CASE("full gradient matches finite differences") {
    Rng rng(4);
    for (int inst = 0; inst < 10; ++inst) {
      const Dataset ds = regression_data(6, 5, 10 + inst);
      for (double lambda : {0.0, 1.0 / 6.0}) {
        const NetObjective obj(ds, lambda);
        const NetParams p = random_params(5, 4, rng, 0.5);
        const NetGradient g = obj.gradient_cached(p, obj.X().audit_mat_mat(p.W));
        const Vector fd = support::fd_gradient(
            [&](std::span<const double> x) { return obj.value(unflatten(x, 5, 4)); }, flatten(p));
        CHECK(rel_err(flatten({g.W, g.v}), fd) < 1e-5);
      }
    }
  }

  TEST_CASE("tied restriction: zero step, gradient, no products") {
    Fixture fx = make_fixture(0.0, 5);
    const NetSubspace tied{fx.s.p, fx.s.M, {{neg(fx.g.W), neg(fx.D), scaled(-1.0, fx.g.v)},
                                            {diff(fx.s.p.W, fx.s.p_prev.W), diff(fx.s.M, fx.s.M_prev),
                                             subtract(fx.s.p.v, fx.s.p_prev.v)}}};
    fx.obj.X().reset_count();
    const SubProblem sp = fx.obj.restrict_to(tied);
    CHECK(rel_err(sp.value(Vector{0, 0}), fx.s.f) <= 1e-14);
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
      const Vector th = support::random_vector(2, rng, 1e-2);
      Vector gr(2);
      const double v = sp.value_and_gradient(th, gr);
      if (k < 10) {
        const Vector fd = support::fd_gradient([&](std::span<const double> x) { return sp.value(x); }, th);
        CHECK(rel_err(gr, fd) < 1e-6);
        const NetParams p = tied.params_at(th);
        CHECK(rel_err(v, oracle_value(fx.obj.data(), p, 0.0)) <= 1e-10);
      }
    }
    CHECK(fx.obj.X().count() == 0);
  }

  TEST_CASE("per-layer restriction embeds the tied one") {
    Fixture fx = make_fixture(0.1, 6);
    const NetDirection gw{neg(fx.g.W), neg(fx.D), {}};
    const NetDirection gv{DenseMatrix(), DenseMatrix(), scaled(-1.0, fx.g.v)};
    const NetDirection mw{diff(fx.s.p.W, fx.s.p_prev.W), diff(fx.s.M, fx.s.M_prev), {}};
    const NetDirection mv{DenseMatrix(), DenseMatrix(), subtract(fx.s.p.v, fx.s.p_prev.v)};
    const NetSubspace tied{fx.s.p, fx.s.M,
                           {{gw.P, gw.image, gv.q}, {mw.P, mw.image, mv.q}}};
    const NetSubspace layered{fx.s.p, fx.s.M, {gw, mw, gv, mv}};
    const SubProblem st = fx.obj.restrict_to(tied), sl = fx.obj.restrict_to(layered);
    CHECK(rel_err(sl.value(Vector(4, 0.0)), fx.s.f) <= 1e-14);
    Rng rng(6);
    for (int k = 0; k < 20; ++k) {
      const double a = 0.05 * rng.normal(), b = 0.05 * rng.normal();
      CHECK(rel_err(sl.value(Vector{a, b, a, b}), st.value(Vector{a, b})) <= 1e-12);
      const Vector th = support::random_vector(4, rng, 0.02);
      Vector gr(4);
      sl.value_and_gradient(th, gr);
      const Vector fd = support::fd_gradient([&](std::span<const double> x) { return sl.value(x); }, th);
      CHECK(rel_err(gr, fd) < 1e-6);
    }
  }

  TEST_CASE("per-layer momentum dominates tied momentum under warm start") {
    for (double lambda : {0.0, 1.0 / 40.0}) {
      Fixture fx = make_fixture(lambda, 7, 4);
      for (int k = 0; k < 10; ++k) {
        NetState tied = fx.s;
        const StepRecord r = step_net(fx.obj, tied, NetMethod::mg_so);
        NetStepOptions o;
        o.warm_start = {*r.steps.alpha1, *r.steps.beta1, *r.steps.alpha1, *r.steps.beta1};
        step_net(fx.obj, fx.s, NetMethod::mg_so_sb, o);
        CHECK(le(fx.s.f, tied.f));
      }
    }
  }

  TEST_CASE("runs: monotone, budgets, memory fidelity") {
    const NetObjective obj(regression_data(100, 10, 8), 0.01);
    for (NetMethod m : all_net_methods()) {
      CAPTURE(net_method_name(m));
      NetState s = make_net_state(obj, init_params(10, 8, 8));
      NetRunOptions ro;
      double prev = s.f;
      bool monotone = true, budget = true, wolfe_ok = true;
      ro.on_step = [&](std::size_t, const StepRecord& r, const NetState& st) {
        if (is_subspace_method(m)) {
          monotone = monotone && le(r.f, prev);
          budget = budget && r.products == 2;
        }
        if (r.line_search && r.line_search->status == SearchStatus::wolfe) {
          const auto& ls = *r.line_search;
          wolfe_ok = wolfe_ok && satisfies_strong_wolfe(ls.value, ls.slope, ls.alpha, ls.value0,
                                                        ls.slope0, ro.step.wolfe);
        }
        prev = st.f;
      };
      const std::size_t iters = m == NetMethod::mg_so ? 500 : 200;
      const Trace t = run_net(obj, m, s, iters, ro);
      CHECK(t.steps.size() == iters);
      CHECK(monotone);
      CHECK(budget);
      CHECK(wolfe_ok);
      CHECK(t.max_audit_residual <= 1e-8);
      CHECK(audit_memory(obj, s) <= 1e-8);
      CHECK(rel_err(s.f, obj.value(s.p)) <= 1e-10);
    }
  }

  TEST_CASE("registry names round-trip") {
    CHECK(all_net_methods().size() == 9);
    for (auto m : all_net_methods()) CHECK(parse_net_method(net_method_name(m)) == m);
  }
}
