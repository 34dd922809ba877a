#include "subsearch/two_layer_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "subsearch/random.hpp"

namespace subsearch {

namespace {

bool present(const DenseMatrix& a) { return a.size() > 0; }

double mdot(const DenseMatrix& a, const DenseMatrix& b) { return dot(a.values(), b.values()); }

void maxpy(double a, const DenseMatrix& x, DenseMatrix& y) { axpy(a, x.values(), y.values()); }

DenseMatrix mscaled(double a, const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = a * x.values()[i];
  return out;
}

DenseMatrix mdiff(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  maxpy(-1.0, b, out);
  return out;
}

// Inner product of two (W, v) directions; absent parts count as zero.
double pair_dot(const DenseMatrix& P1, const Vector& q1, const DenseMatrix& P2, const Vector& q2) {
  double acc = 0.0;
  if (present(P1) && present(P2)) acc += mdot(P1, P2);
  if (!q1.empty() && !q2.empty()) acc += dot(q1, q2);
  return acc;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

bool is_zero(const NetDirection& dir) {
  return (!present(dir.P) || all_zero(dir.P.values())) && all_zero(dir.q);
}

bool resolvable(std::span<const double> a, std::span<const double> a_prev, double tol) {
  if (a_prev.size() != a.size() || a.empty()) return false;
  const Vector diff = subtract(a, a_prev);
  return norm(diff) > tol * std::max(norm(a), norm(a_prev));
}

}  // namespace

NetParams init_params(std::size_t d, std::size_t r, std::uint64_t seed) {
  if (r == 0) throw std::invalid_argument("init_params: r must be >= 1");
  Rng rng(seed);
  const double scale = 1.0 / (static_cast<double>(r) * static_cast<double>(d + 1));
  NetParams p{DenseMatrix(d, r), Vector(r)};
  for (double& x : p.W.values()) x = rng.normal() * scale;
  for (double& x : p.v) x = rng.normal() * scale;
  return p;
}

NetParams NetSubspace::params_at(std::span<const double> theta) const {
  NetParams out = base;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    if (present(dirs[j].P)) maxpy(theta[j], dirs[j].P, out.W);
    if (!dirs[j].q.empty()) axpy(theta[j], dirs[j].q, out.v);
  }
  return out;
}

DenseMatrix NetSubspace::memory_at(std::span<const double> theta) const {
  DenseMatrix out = M;
  for (std::size_t j = 0; j < dirs.size(); ++j)
    if (present(dirs[j].image)) maxpy(theta[j], dirs[j].image, out);
  return out;
}

NetObjective::NetObjective(Dataset data, double lambda) : data_(std::move(data)), lambda_(lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("NetObjective: lambda must be >= 0");
}

double NetObjective::value_cached(const NetParams& p, const DenseMatrix& M) const {
  const std::size_t r = p.v.size();
  if (M.rows() != n() || M.cols() != r) throw std::invalid_argument("net: memory has wrong shape");
  double loss = 0.0;
  for (std::size_t i = 0; i < n(); ++i) {
    double pred = 0.0;
    for (std::size_t k = 0; k < r; ++k) pred += std::tanh(M(i, k)) * p.v[k];
    const double e = pred - data_.y[i];
    loss += e * e;
  }
  if (lambda_ > 0.0) loss += 0.5 * lambda_ * (squared_norm(p.W.values()) + squared_norm(p.v));
  return loss;
}

double NetObjective::value(const NetParams& p) const {
  return value_cached(p, mat_mat(data_.X, p.W));
}

std::pair<DenseMatrix, Vector> NetObjective::backward(const NetParams& p,
                                                      const DenseMatrix& M) const {
  const std::size_t r = p.v.size();
  DenseMatrix R(n(), r);
  Vector gv(r, 0.0);
  Vector h(r);
  for (std::size_t i = 0; i < n(); ++i) {
    double pred = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      h[k] = std::tanh(M(i, k));
      pred += h[k] * p.v[k];
    }
    const double gg = 2.0 * (pred - data_.y[i]);
    for (std::size_t k = 0; k < r; ++k) {
      R(i, k) = gg * (1.0 - h[k] * h[k]) * p.v[k];
      gv[k] += h[k] * gg;
    }
  }
  return {std::move(R), std::move(gv)};
}

NetGradient NetObjective::gradient_cached(const NetParams& p, const DenseMatrix& M) const {
  auto [R, gv] = backward(p, M);
  NetGradient g{mat_t_mat(data_.X, R), std::move(gv)};
  if (lambda_ > 0.0) {
    maxpy(lambda_, p.W, g.W);
    axpy(lambda_, p.v, g.v);
  }
  return g;
}

SubProblem NetObjective::restrict_to(const NetSubspace& sub) const {
  const std::size_t p = sub.dim();
  const std::size_t r = sub.base.v.size();
  for (const auto& dir : sub.dirs) {
    const bool w_ok = !present(dir.P) || (dir.P.rows() == d() && dir.P.cols() == r &&
                                          dir.image.rows() == n() && dir.image.cols() == r);
    const bool v_ok = dir.q.empty() || dir.q.size() == r;
    if (!w_ok || !v_ok) throw std::invalid_argument("net restrict_to: direction has wrong shape");
  }

  struct Gram {
    double ww = 0.0;
    Vector wp;
    Vector pp;
  };
  auto gram = std::make_shared<Gram>();
  if (lambda_ > 0.0) {
    gram->ww = pair_dot(sub.base.W, sub.base.v, sub.base.W, sub.base.v);
    gram->wp.resize(p);
    gram->pp.resize(p * p);
    for (std::size_t i = 0; i < p; ++i) {
      gram->wp[i] = pair_dot(sub.base.W, sub.base.v, sub.dirs[i].P, sub.dirs[i].q);
      for (std::size_t j = 0; j < p; ++j)
        gram->pp[i * p + j] = pair_dot(sub.dirs[i].P, sub.dirs[i].q, sub.dirs[j].P, sub.dirs[j].q);
    }
  }

  const NetSubspace* s = &sub;
  const Vector* y = &data_.y;
  const double lambda = lambda_;
  const std::size_t rows = n();

  auto v_at = [s, r](std::span<const double> theta) {
    Vector v = s->base.v;
    for (std::size_t j = 0; j < s->dirs.size(); ++j)
      if (!s->dirs[j].q.empty()) axpy(theta[j], s->dirs[j].q, v);
    return v;
  };
  auto reg_value = [gram, lambda, p](std::span<const double> theta) {
    if (lambda == 0.0) return 0.0;
    double q = gram->ww;
    for (std::size_t i = 0; i < p; ++i) {
      q += 2.0 * theta[i] * gram->wp[i];
      for (std::size_t j = 0; j < p; ++j) q += theta[i] * theta[j] * gram->pp[i * p + j];
    }
    return 0.5 * lambda * q;
  };

  SubProblem out;
  out.dim = p;
  out.value = [s, y, rows, r, v_at, reg_value](std::span<const double> theta) {
    const DenseMatrix M = s->memory_at(theta);
    const Vector v = v_at(theta);
    double loss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double pred = 0.0;
      for (std::size_t k = 0; k < r; ++k) pred += std::tanh(M(i, k)) * v[k];
      const double e = pred - (*y)[i];
      loss += e * e;
    }
    return loss + reg_value(theta);
  };
  out.value_and_gradient = [s, y, rows, r, p, v_at, reg_value, gram, lambda](
                               std::span<const double> theta, std::span<double> grad) {
    const DenseMatrix M = s->memory_at(theta);
    const Vector v = v_at(theta);
    DenseMatrix T(rows, r);  // d loss / d M entrywise
    Vector u(r, 0.0);        // d loss / d v
    Vector h(r);
    double loss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double pred = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        h[k] = std::tanh(M(i, k));
        pred += h[k] * v[k];
      }
      const double e = pred - (*y)[i];
      loss += e * e;
      const double gg = 2.0 * e;
      for (std::size_t k = 0; k < r; ++k) {
        T(i, k) = gg * (1.0 - h[k] * h[k]) * v[k];
        u[k] += h[k] * gg;
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      const auto& dir = s->dirs[j];
      double gj = 0.0;
      if (present(dir.image)) gj += mdot(T, dir.image);
      if (!dir.q.empty()) gj += dot(u, dir.q);
      if (lambda > 0.0) {
        double acc = gram->wp[j];
        for (std::size_t i = 0; i < p; ++i) acc += theta[i] * gram->pp[i * p + j];
        gj += lambda * acc;
      }
      grad[j] = gj;
    }
    return loss + reg_value(theta);
  };
  return out;
}

Vector NetObjective::prediction_sensitivity(const NetSubspace& sub) const {
  const std::size_t r = sub.base.v.size();
  Vector out(sub.dim(), 0.0);
  for (std::size_t j = 0; j < sub.dim(); ++j) {
    const auto& dir = sub.dirs[j];
    double acc = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      double jac = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        const double h = std::tanh(sub.M(i, k));
        if (present(dir.image)) jac += (1.0 - h * h) * dir.image(i, k) * sub.base.v[k];
        if (!dir.q.empty()) jac += h * dir.q[k];
      }
      acc += jac * jac;
    }
    out[j] = std::sqrt(acc);
  }
  return out;
}

NetState make_net_state(const NetObjective& obj, NetParams p) {
  if (p.W.rows() != obj.d() || p.W.cols() != p.v.size() || p.v.empty())
    throw std::invalid_argument("make_net_state: parameters have wrong shape");
  NetState s;
  s.M = obj.X().audit_mat_mat(p.W);
  s.p = std::move(p);
  s.p_prev = s.p;
  s.M_prev = s.M;
  s.f = obj.value_cached(s.p, s.M);
  return s;
}

namespace {

class ProductMeter {
 public:
  explicit ProductMeter(const CountedMatrix& X) : X_(X), start_(X.count()) {}
  std::uint64_t used() const { return X_.count() - start_; }

 private:
  const CountedMatrix& X_;
  std::uint64_t start_;
};

double grad_sq(const NetGradient& g) { return squared_norm(g.W.values()) + squared_norm(g.v); }

void commit(const NetObjective& obj, NetState& s, NetParams p, DenseMatrix M, NetGradient g) {
  s.p_prev = std::exchange(s.p, std::move(p));
  s.M_prev = std::exchange(s.M, std::move(M));
  s.grad_prev = std::move(g);
  s.f = obj.value_cached(s.p, s.M);
  ++s.iteration;
}

struct Slot {
  std::size_t index;
  NetDirection dir;
};

struct Outcome {
  Vector theta;
  std::size_t inner_iters = 0;
  NetParams p;
  DenseMatrix M;
};

Outcome subspace_step(const NetObjective& obj, const NetState& s, std::vector<Slot> slots,
                      std::size_t total, const NetStepOptions& opts) {
  Outcome out;
  out.theta.assign(total, 0.0);
  std::erase_if(slots, [](const Slot& sl) { return is_zero(sl.dir); });
  if (slots.empty()) {
    out.p = s.p;
    out.M = s.M;
    return out;
  }
  NetSubspace sub{s.p, s.M, {}};
  Vector warm;
  for (auto& sl : slots) {
    if (!opts.warm_start.empty())
      warm.push_back(sl.index < opts.warm_start.size() ? opts.warm_start[sl.index] : 0.0);
    sub.dirs.push_back(std::move(sl.dir));
  }
  const SubProblem sp = obj.restrict_to(sub);
  SubSolverOptions so = opts.sub;
  so.max_iters = so.budget_for(s.iteration + 1);
  SubSolveResult r;
  if (opts.scale_subproblem) {
    const Vector norms = obj.prediction_sensitivity(sub);
    r = solve_balanced(sp, norms, so, warm, opts.polish_unscaled);
  } else {
    r = solve(sp, so, warm);
  }
  for (std::size_t j = 0; j < slots.size(); ++j) out.theta[slots[j].index] = r.theta[j];
  out.inner_iters = r.inner_iters;
  out.p = sub.params_at(r.theta);
  out.M = sub.memory_at(r.theta);
  return out;
}

struct LineOutcome {
  LineSearchResult search;
  bool ran = false;
  NetParams p;
  DenseMatrix M;
};

LineOutcome wolfe_step(const NetObjective& obj, const NetState& s, NetDirection dir,
                       double alpha_init, const WolfeOptions& wolfe) {
  LineOutcome out;
  NetSubspace sub{s.p, s.M, {std::move(dir)}};
  const SubProblem sp = obj.restrict_to(sub);
  LineFunction phi = [&sp](double a) {
    const std::array<double, 1> th{a};
    std::array<double, 1> gr{};
    const double v = sp.value_and_gradient(th, gr);
    return std::pair{v, gr[0]};
  };
  const auto [f0, g0] = phi(0.0);
  if (g0 < 0.0) {
    out.search = strong_wolfe(phi, alpha_init, wolfe);
    out.ran = true;
  } else {
    out.search.value0 = out.search.value = f0;
    out.search.slope0 = out.search.slope = g0;
  }
  const std::array<double, 1> th{out.search.alpha};
  out.p = sub.params_at(th);
  out.M = sub.memory_at(th);
  return out;
}

void record_search(StepRecord& rec, NetState& s, const LineOutcome& lo, bool nonzero_grad) {
  if (lo.ran) rec.line_search = lo.search;
  rec.search_failed = nonzero_grad && lo.search.status == SearchStatus::failed;
  rec.inner_iters = lo.search.evals;
  if (lo.search.alpha > 0.0) s.alpha_prev = lo.search.alpha;
}

NetDirection neg_gradient(const NetGradient& g, const DenseMatrix& image) {
  return {mscaled(-1.0, g.W), mscaled(-1.0, image), scaled(-1.0, g.v)};
}

StepRecord gd_fixed(const NetObjective& obj, NetState& s) {
  StepRecord rec;
  NetGradient g = obj.gradient_cached(s.p, s.M);
  const double gn2 = grad_sq(g);
  rec.grad_norm = std::sqrt(gn2);
  if (gn2 == 0.0) {
    rec.steps.alpha1 = 0.0;
    commit(obj, s, s.p, s.M, std::move(g));
    return rec;
  }
  NetParams pt = s.p;
  DenseMatrix Mt;
  auto trial = [&](double L) {
    for (std::size_t i = 0; i < pt.W.size(); ++i)
      pt.W.values()[i] = s.p.W.values()[i] - g.W.values()[i] / L;
    for (std::size_t k = 0; k < pt.v.size(); ++k) pt.v[k] = s.p.v[k] - g.v[k] / L;
    Mt = mat_mat(obj.X(), pt.W);
    return obj.value_cached(pt, Mt);
  };
  const auto bt = backtrack_half(trial, s.f, gn2, s.L);
  if (!bt.success) {
    // Required decrease below evaluation noise: stay put and flag.
    rec.search_failed = true;
    rec.steps.alpha1 = 0.0;
    rec.inner_iters = bt.trials;
    commit(obj, s, s.p, s.M, std::move(g));
    return rec;
  }
  s.L.L = bt.L;
  rec.steps.alpha1 = 1.0 / bt.L;
  rec.inner_iters = bt.trials;
  commit(obj, s, std::move(pt), std::move(Mt), std::move(g));
  return rec;
}

// Tied conjugate-gradient direction (PR+ with restart on non-descent).
NetDirection cg_direction(const NetState& s, const NetGradient& g, const DenseMatrix& image,
                          StepRecord& rec) {
  NetDirection dir = neg_gradient(g, image);
  double eta = 0.0;
  if (s.grad_prev && s.dir_prev) {
    const double denom = grad_sq(*s.grad_prev);
    if (denom > 0.0) {
      const double num = mdot(g.W, mdiff(g.W, s.grad_prev->W)) + dot(g.v, subtract(g.v, s.grad_prev->v));
      eta = std::max(0.0, num / denom);
    }
  }
  if (eta > 0.0) {
    NetDirection cand = dir;
    maxpy(eta, s.dir_prev->P, cand.P);
    maxpy(eta, s.dir_prev->image, cand.image);
    axpy(eta, s.dir_prev->q, cand.q);
    if (pair_dot(g.W, g.v, cand.P, cand.q) < 0.0) {
      dir = std::move(cand);
    } else {
      eta = 0.0;
      rec.momentum_reset = true;
    }
  }
  rec.steps.beta1 = eta;
  return dir;
}

StepRecord cg(const NetObjective& obj, NetState& s, bool wolfe, const NetStepOptions& opts) {
  StepRecord rec;
  NetGradient g = obj.gradient_cached(s.p, s.M);
  DenseMatrix D = mat_mat(obj.X(), g.W);
  rec.grad_norm = std::sqrt(grad_sq(g));
  NetDirection dir = cg_direction(s, g, D, rec);
  NetParams p_new;
  DenseMatrix M_new;
  if (wolfe) {
    auto lo = wolfe_step(obj, s, dir, s.alpha_prev, opts.wolfe);
    record_search(rec, s, lo, rec.grad_norm > 0.0);
    rec.steps.alpha1 = lo.search.alpha;
    p_new = std::move(lo.p);
    M_new = std::move(lo.M);
  } else {
    std::vector<Slot> slots;
    slots.push_back({0, dir});
    auto out = subspace_step(obj, s, std::move(slots), 1, opts);
    rec.steps.alpha1 = out.theta[0];
    rec.inner_iters = out.inner_iters;
    p_new = std::move(out.p);
    M_new = std::move(out.M);
  }
  commit(obj, s, std::move(p_new), std::move(M_new), std::move(g));
  s.dir_prev = std::move(dir);
  return rec;
}

StepRecord gd_search(const NetObjective& obj, NetState& s, bool wolfe, const NetStepOptions& opts) {
  StepRecord rec;
  NetGradient g = obj.gradient_cached(s.p, s.M);
  DenseMatrix D = mat_mat(obj.X(), g.W);
  rec.grad_norm = std::sqrt(grad_sq(g));
  NetParams p_new;
  DenseMatrix M_new;
  if (wolfe) {
    auto lo = wolfe_step(obj, s, neg_gradient(g, D), s.alpha_prev, opts.wolfe);
    record_search(rec, s, lo, rec.grad_norm > 0.0);
    rec.steps.alpha1 = lo.search.alpha;
    p_new = std::move(lo.p);
    M_new = std::move(lo.M);
  } else {
    std::vector<Slot> slots;
    slots.push_back({0, neg_gradient(g, D)});
    auto out = subspace_step(obj, s, std::move(slots), 1, opts);
    rec.steps.alpha1 = out.theta[0];
    rec.inner_iters = out.inner_iters;
    p_new = std::move(out.p);
    M_new = std::move(out.M);
  }
  commit(obj, s, std::move(p_new), std::move(M_new), std::move(g));
  return rec;
}

bool w_momentum_usable(const NetState& s, const NetStepOptions& opts) {
  return s.p.W != s.p_prev.W && resolvable(s.M.values(), s.M_prev.values(), opts.history_tolerance);
}

bool v_momentum_usable(const NetState& s, const NetStepOptions& opts) {
  return s.p.v != s.p_prev.v && resolvable(s.p.v, s.p_prev.v, opts.history_tolerance);
}

StepRecord memory_gradient(const NetObjective& obj, NetState& s, bool per_layer, bool momentum,
                           const NetStepOptions& opts) {
  StepRecord rec;
  NetGradient g = obj.gradient_cached(s.p, s.M);
  DenseMatrix D = mat_mat(obj.X(), g.W);
  rec.grad_norm = std::sqrt(grad_sq(g));

  std::vector<Slot> slots;
  std::size_t total = 0;
  if (!per_layer) {
    slots.push_back({0, neg_gradient(g, D)});
    if (w_momentum_usable(s, opts))
      slots.push_back({1, {mdiff(s.p.W, s.p_prev.W), mdiff(s.M, s.M_prev), subtract(s.p.v, s.p_prev.v)}});
    total = 2;
  } else if (momentum) {
    slots.push_back({0, {mscaled(-1.0, g.W), mscaled(-1.0, D), {}}});
    if (w_momentum_usable(s, opts))
      slots.push_back({1, {mdiff(s.p.W, s.p_prev.W), mdiff(s.M, s.M_prev), {}}});
    slots.push_back({2, {DenseMatrix(), DenseMatrix(), scaled(-1.0, g.v)}});
    if (v_momentum_usable(s, opts))
      slots.push_back({3, {DenseMatrix(), DenseMatrix(), subtract(s.p.v, s.p_prev.v)}});
    total = 4;
  } else {
    slots.push_back({0, {mscaled(-1.0, g.W), mscaled(-1.0, D), {}}});
    slots.push_back({1, {DenseMatrix(), DenseMatrix(), scaled(-1.0, g.v)}});
    total = 2;
  }
  auto out = subspace_step(obj, s, std::move(slots), total, opts);
  rec.inner_iters = out.inner_iters;
  if (!per_layer) {
    rec.steps.alpha1 = out.theta[0];
    rec.steps.beta1 = out.theta[1];
  } else if (momentum) {
    rec.steps.alpha1 = out.theta[0];
    rec.steps.beta1 = out.theta[1];
    rec.steps.alpha2 = out.theta[2];
    rec.steps.beta2 = out.theta[3];
  } else {
    rec.steps.alpha1 = out.theta[0];
    rec.steps.alpha2 = out.theta[1];
  }
  commit(obj, s, std::move(out.p), std::move(out.M), std::move(g));
  return rec;
}

// PR+ separately per layer; both restart when the combined direction is
// not a descent direction.
StepRecord cg_per_layer(const NetObjective& obj, NetState& s, const NetStepOptions& opts) {
  StepRecord rec;
  NetGradient g = obj.gradient_cached(s.p, s.M);
  DenseMatrix D = mat_mat(obj.X(), g.W);
  rec.grad_norm = std::sqrt(grad_sq(g));

  NetDirection d1{mscaled(-1.0, g.W), mscaled(-1.0, D), {}};
  NetDirection d2{DenseMatrix(), DenseMatrix(), scaled(-1.0, g.v)};
  double eta1 = 0.0;
  double eta2 = 0.0;
  if (s.grad_prev && s.dir1_prev && s.dir2_prev) {
    const double den1 = squared_norm(s.grad_prev->W.values());
    const double den2 = squared_norm(s.grad_prev->v);
    if (den1 > 0.0) eta1 = std::max(0.0, mdot(g.W, mdiff(g.W, s.grad_prev->W)) / den1);
    if (den2 > 0.0) eta2 = std::max(0.0, dot(g.v, subtract(g.v, s.grad_prev->v)) / den2);
  }
  if (eta1 > 0.0 || eta2 > 0.0) {
    NetDirection c1 = d1;
    NetDirection c2 = d2;
    maxpy(eta1, s.dir1_prev->P, c1.P);
    maxpy(eta1, s.dir1_prev->image, c1.image);
    axpy(eta2, s.dir2_prev->q, c2.q);
    if (mdot(g.W, c1.P) + dot(g.v, c2.q) < 0.0) {
      d1 = std::move(c1);
      d2 = std::move(c2);
    } else {
      eta1 = eta2 = 0.0;
      rec.momentum_reset = true;
    }
  }
  std::vector<Slot> slots;
  slots.push_back({0, d1});
  slots.push_back({1, d2});
  auto out = subspace_step(obj, s, std::move(slots), 2, opts);
  rec.steps.alpha1 = out.theta[0];
  rec.steps.beta1 = eta1;
  rec.steps.alpha2 = out.theta[1];
  rec.steps.beta2 = eta2;
  rec.inner_iters = out.inner_iters;
  commit(obj, s, std::move(out.p), std::move(out.M), std::move(g));
  s.dir1_prev = std::move(d1);
  s.dir2_prev = std::move(d2);
  return rec;
}

struct MethodInfo {
  NetMethod method;
  std::string_view name;
  bool subspace;
};

constexpr std::array<MethodInfo, 9> kNetMethods{{
    {NetMethod::gd_1L, "gd_1L", false},
    {NetMethod::gd_wolfe, "gd_ls", false},
    {NetMethod::gd_lo, "gd_lo", true},
    {NetMethod::cg_wolfe, "gd+m_ls", false},
    {NetMethod::cg_lo, "gd+m_lo", true},
    {NetMethod::mg_so, "gd+m_so", true},
    {NetMethod::gd_sb, "gd_sb", true},
    {NetMethod::cgm_sb, "gd+m_sb", true},
    {NetMethod::mg_so_sb, "gd+m_so+sb", true},
}};

const MethodInfo& info(NetMethod method) {
  for (const auto& m : kNetMethods)
    if (m.method == method) return m;
  throw std::invalid_argument("unknown network method");
}

}  // namespace

StepRecord step_net(const NetObjective& obj, NetState& s, NetMethod method,
                    const NetStepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  switch (method) {
    case NetMethod::gd_1L: rec = gd_fixed(obj, s); break;
    case NetMethod::gd_wolfe: rec = gd_search(obj, s, true, opts); break;
    case NetMethod::gd_lo: rec = gd_search(obj, s, false, opts); break;
    case NetMethod::cg_wolfe: rec = cg(obj, s, true, opts); break;
    case NetMethod::cg_lo: rec = cg(obj, s, false, opts); break;
    case NetMethod::mg_so: rec = memory_gradient(obj, s, false, true, opts); break;
    case NetMethod::gd_sb: rec = memory_gradient(obj, s, true, false, opts); break;
    case NetMethod::cgm_sb: rec = cg_per_layer(obj, s, opts); break;
    case NetMethod::mg_so_sb: rec = memory_gradient(obj, s, true, true, opts); break;
  }
  rec.method = std::string(net_method_name(method));
  rec.f = s.f;
  rec.products = meter.used();
  return rec;
}

std::string_view net_method_name(NetMethod method) { return info(method).name; }

std::optional<NetMethod> parse_net_method(std::string_view name) {
  for (const auto& m : kNetMethods)
    if (m.name == name) return m.method;
  return std::nullopt;
}

const std::vector<NetMethod>& all_net_methods() {
  static const std::vector<NetMethod> all = [] {
    std::vector<NetMethod> v;
    for (const auto& m : kNetMethods) v.push_back(m.method);
    return v;
  }();
  return all;
}

bool is_subspace_method(NetMethod method) { return info(method).subspace; }

double audit_memory(const NetObjective& obj, const NetState& s) {
  const DenseMatrix fresh = obj.X().audit_mat_mat(s.p.W);
  return norm(mdiff(s.M, fresh).values()) / (1.0 + norm(s.M.values()));
}

Trace run_net(const NetObjective& obj, NetMethod method, NetState& s, std::size_t iters,
              const NetRunOptions& opts) {
  Trace trace;
  trace.method = std::string(net_method_name(method));
  trace.f0 = s.f;
  trace.steps.reserve(iters);
  for (std::size_t k = 1; k <= iters; ++k) {
    StepRecord rec;
    try {
      rec = step_net(obj, s, method, opts.step);
    } catch (const std::exception& e) {
      throw std::runtime_error(trace.method + " failed at iteration " + std::to_string(k) +
                               ": " + e.what());
    }
    if (opts.audit_every > 0 && k % opts.audit_every == 0)
      trace.max_audit_residual = std::max(trace.max_audit_residual, audit_memory(obj, s));
    if (opts.on_step) opts.on_step(k, rec, s);
    trace.steps.push_back(std::move(rec));
  }
  trace.max_audit_residual = std::max(trace.max_audit_residual, audit_memory(obj, s));
  auto [R, gv] = obj.backward(s.p, s.M);
  DenseMatrix gW = obj.X().audit_mat_t_mat(R);
  if (obj.lambda() > 0.0) {
    maxpy(obj.lambda(), s.p.W, gW);
    axpy(obj.lambda(), s.p.v, gv);
  }
  trace.final_grad_norm = std::sqrt(squared_norm(gW.values()) + squared_norm(gv));
  return trace;
}

}  // namespace subsearch
