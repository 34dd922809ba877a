#include "subsearch/matrix_factorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "subsearch/kernels.hpp"
#include "subsearch/random.hpp"

namespace subsearch {

namespace {

double mdot(const DenseMatrix& a, const DenseMatrix& b) { return dot(a.values(), b.values()); }

void maxpy(double a, const DenseMatrix& x, DenseMatrix& y) { axpy(a, x.values(), y.values()); }

DenseMatrix combine(double a, const DenseMatrix& x, double b, const DenseMatrix& y) {
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = a * x.values()[i] + b * y.values()[i];
  return out;
}

void require_shape(const DenseMatrix& a, std::size_t r, std::size_t c, const char* what) {
  if (a.rows() != r || a.cols() != c) throw std::invalid_argument(std::string(what) + ": wrong shape");
}

DenseMatrix plain_nt(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c;
  kernels::gemm_nt(a, b, c);
  return c;
}

}  // namespace

DenseMatrix MfProductCounter::mul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("mf product: inner dimensions disagree");
  DenseMatrix c;
  kernels::gemm(a, b, c);
  ++count_;
  return c;
}

DenseMatrix MfProductCounter::mul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("mf product: inner dimensions disagree");
  DenseMatrix c;
  kernels::gemm_nt(a, b, c);
  ++count_;
  return c;
}

DenseMatrix MfProductCounter::mul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("mf product: inner dimensions disagree");
  DenseMatrix c;
  kernels::gemm_tn(a, b, c);
  ++count_;
  return c;
}

double pca_value(const DenseMatrix& M, const DenseMatrix& X) {
  require_shape(M, X.rows(), X.cols(), "pca_value");
  double acc = 0.0;
  for (std::size_t i = 0; i < M.size(); ++i) {
    const double e = M.values()[i] - X.values()[i];
    acc += e * e;
  }
  return 0.5 * acc;
}

DenseMatrix pca_grad(const DenseMatrix& M, const DenseMatrix& X) {
  require_shape(M, X.rows(), X.cols(), "pca_grad");
  return combine(1.0, M, -1.0, X);
}

std::pair<DenseMatrix, DenseMatrix> mf_gradient(const DenseMatrix& U, const DenseMatrix& W,
                                                const DenseMatrix& X) {
  const DenseMatrix G = pca_grad(plain_nt(U, W), X);
  DenseMatrix gU;
  DenseMatrix gW;
  kernels::gemm(G, W, gU);
  kernels::gemm_tn(G, U, gW);
  return {std::move(gU), std::move(gW)};
}

std::pair<DenseMatrix, DenseMatrix> init_factors(std::size_t n, std::size_t d, std::size_t r,
                                                 std::uint64_t seed) {
  if (r == 0 || r > std::min(n, d)) throw std::invalid_argument("init_factors: need 1 <= r <= min(n, d)");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  DenseMatrix U(n, r);
  DenseMatrix W(d, r);
  for (double& x : U.values()) x = rng.normal() * scale;
  for (double& x : W.values()) x = rng.normal() * scale;
  return {std::move(U), std::move(W)};
}

MfState make_mf_state(const DenseMatrix& X, DenseMatrix U, DenseMatrix W) {
  if (U.rows() != X.rows() || W.rows() != X.cols() || U.cols() != W.cols() || U.cols() == 0)
    throw std::invalid_argument("make_mf_state: factor shapes do not match the data");
  MfState s;
  s.M = plain_nt(U, W);
  s.U = std::move(U);
  s.W = std::move(W);
  s.U_prev = s.U;
  s.W_prev = s.W;
  s.M_prev = s.M;
  s.f = pca_value(s.M, X);
  return s;
}

std::array<double, 9> MfExpansion::coefficients(const std::array<double, 4>& t) {
  const auto [a1, a2, b1, b2] = t;
  return {1.0,           -a1,           -a2,      a1 * a2,  -b1 * b2,
          b1 + b1 * b2,  b2 + b1 * b2,  -a2 * b1, -a1 * b2};
}

std::array<std::array<double, 9>, 4> MfExpansion::coefficient_partials(
    const std::array<double, 4>& t) {
  const auto [a1, a2, b1, b2] = t;
  std::array<std::array<double, 9>, 4> p{};
  p[0] = {0, -1, 0, a2, 0, 0, 0, 0, -b2};
  p[1] = {0, 0, -1, a1, 0, 0, 0, -b1, 0};
  p[2] = {0, 0, 0, 0, -b2, 1 + b2, b2, -a2, 0};
  p[3] = {0, 0, 0, 0, -b1, b1, 1 + b1, 0, -a1};
  return p;
}

DenseMatrix MfExpansion::memory_at(const std::array<double, 4>& theta) const {
  const auto c = coefficients(theta);
  DenseMatrix out(terms[0].rows(), terms[0].cols());
  for (std::size_t t = 0; t < terms.size(); ++t)
    if (present[t] && c[t] != 0.0) maxpy(c[t], terms[t], out);
  return out;
}

MfExpansion build_expansion(const MfState& s, const DenseMatrix& X, MfScheme scheme,
                            MfProductCounter& counter) {
  if (scheme != MfScheme::simultaneous && scheme != MfScheme::momentum_one &&
      scheme != MfScheme::momentum_both)
    throw std::invalid_argument("build_expansion: scheme has no exact expansion");
  const DenseMatrix G = pca_grad(s.M, X);
  MfExpansion e;
  e.grad_U = counter.mul(G, s.W);          // G W
  const DenseMatrix B = counter.mul_tn(s.U, G);  // U^T G
  e.grad_W = B.transposed();
  e.terms[0] = s.M;
  e.terms[1] = counter.mul_nt(e.grad_U, s.W);
  e.terms[2] = counter.mul(s.U, B);
  e.terms[3] = counter.mul(e.grad_U, B);
  for (std::size_t t = 0; t < 4; ++t) e.present[t] = true;
  if (scheme == MfScheme::momentum_one || scheme == MfScheme::momentum_both) {
    const DenseMatrix dU = combine(1.0, s.U, -1.0, s.U_prev);
    e.terms[5] = counter.mul_nt(dU, s.W);
    e.terms[7] = counter.mul(dU, B);
    e.present[5] = e.present[7] = true;
  }
  if (scheme == MfScheme::momentum_both) {
    const DenseMatrix dW = combine(1.0, s.W, -1.0, s.W_prev);
    e.terms[4] = combine(1.0, s.M, -1.0, s.M_prev);
    e.terms[6] = counter.mul_nt(s.U, dW);
    e.terms[8] = counter.mul_nt(e.grad_U, dW);
    e.present[4] = e.present[6] = e.present[8] = true;
  }
  return e;
}

namespace {

// phi over the free coordinates of theta; the others stay zero.
// Predicted relative tracking drift after a step to theta. Rounding in the
// cached terms scales with sum_t |c_t| ||T_t||; difference terms (4-8) carry
// the absolute error of their undifferenced operands. The existing gap
// between the errors in M and M_prev is multiplied by c_4 = -b1 b2.
struct DriftModel {
  std::array<double, 9> scale{};
  double m_norm = 0.0;
  double carried = 0.0;

  DriftModel(const MfExpansion& e, double drift) : carried(drift) {
    for (std::size_t k = 0; k < 9; ++k)
      if (e.present[k]) scale[k] = norm(e.terms[k].values());
    constexpr std::array<std::size_t, 9> operand{0, 1, 2, 3, 0, 0, 0, 2, 1};
    for (std::size_t k = 4; k < 9; ++k)
      if (e.present[k]) scale[k] = std::max(scale[k], scale[operand[k]]);
    m_norm = scale[0];
  }

  double predict(const std::array<double, 4>& t) const {
    const auto c = MfExpansion::coefficients(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < 9; ++k) acc += std::abs(c[k]) * scale[k];
    return std::abs(c[4]) * carried +
           std::numeric_limits<double>::epsilon() * acc / (1.0 + m_norm);
  }
};

// Trials predicted to push the drift past this are rejected: the solve would
// otherwise mistake rounding error for decrease.
constexpr double kDriftLimit = 1e-12;

SubProblem restrict_expansion(const MfExpansion& e, const DenseMatrix& X,
                              std::vector<std::size_t> free, double drift) {
  SubProblem sp;
  sp.dim = free.size();
  auto full = [free](std::span<const double> x) {
    std::array<double, 4> t{};
    for (std::size_t j = 0; j < free.size(); ++j) t[free[j]] = x[j];
    return t;
  };
  const MfExpansion* ex = &e;
  const DenseMatrix* data = &X;
  auto too_noisy = [model = DriftModel(e, drift)](const std::array<double, 4>& t) {
    return !(model.predict(t) <= kDriftLimit);
  };
  sp.value = [ex, data, full, too_noisy](std::span<const double> x) {
    const auto t = full(x);
    if (too_noisy(t)) return std::numeric_limits<double>::infinity();
    return pca_value(ex->memory_at(t), *data);
  };
  sp.value_and_gradient = [ex, data, full, free, too_noisy](std::span<const double> x,
                                                            std::span<double> g) {
    const auto t = full(x);
    if (too_noisy(t)) {
      std::fill(g.begin(), g.end(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
    const DenseMatrix M = ex->memory_at(t);
    const DenseMatrix G = pca_grad(M, *data);
    std::array<double, 9> inner{};
    for (std::size_t k = 0; k < 9; ++k)
      if (ex->present[k]) inner[k] = mdot(G, ex->terms[k]);
    const auto partial = MfExpansion::coefficient_partials(t);
    for (std::size_t j = 0; j < free.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 9; ++k) acc += partial[free[j]][k] * inner[k];
      g[j] = acc;
    }
    return 0.5 * mdot(G, G);
  };
  return sp;
}

// Norm of dM/dtheta_j at theta = 0 for each free coordinate.
Vector expansion_sensitivity(const MfExpansion& e, const std::vector<std::size_t>& free) {
  const auto partial = MfExpansion::coefficient_partials({0, 0, 0, 0});
  Vector out;
  for (std::size_t j : free) {
    DenseMatrix dM(e.terms[0].rows(), e.terms[0].cols());
    for (std::size_t k = 0; k < 9; ++k)
      if (e.present[k] && partial[j][k] != 0.0) maxpy(partial[j][k], e.terms[k], dM);
    out.push_back(norm(dM.values()));
  }
  return out;
}

bool resolvable(const DenseMatrix& a, const DenseMatrix& b, double tol) {
  const DenseMatrix diff = combine(1.0, a, -1.0, b);
  return norm(diff.values()) > tol * std::max(norm(a.values()), norm(b.values()));
}

void advance(MfState& s, const DenseMatrix& X, DenseMatrix U, DenseMatrix W, DenseMatrix M) {
  s.U_prev = std::exchange(s.U, std::move(U));
  s.W_prev = std::exchange(s.W, std::move(W));
  s.M_prev = std::exchange(s.M, std::move(M));
  s.f = pca_value(s.M, X);
  ++s.iteration;
}

StepRecord exact_step(MfState& s, const DenseMatrix& X, MfScheme scheme, MfProductCounter& counter,
                      const MfOptions& opts) {
  const std::uint64_t start = counter.count();
  StepRecord rec;
  MfExpansion e = build_expansion(s, X, scheme, counter);
  rec.grad_norm =
      std::sqrt(squared_norm(e.grad_U.values()) + squared_norm(e.grad_W.values()));
  std::vector<std::size_t> free{0, 1};
  if (scheme != MfScheme::simultaneous && s.U != s.U_prev) free.push_back(2);
  if (scheme == MfScheme::momentum_both && s.W != s.W_prev) free.push_back(3);

  const SubProblem sp = restrict_expansion(e, X, free, s.drift);
  SubSolverOptions so = opts.sub;
  so.max_iters = so.budget_for(s.iteration + 1);
  const SubSolveResult r = solve_balanced(sp, expansion_sensitivity(e, free), so);
  std::array<double, 4> t{};
  for (std::size_t j = 0; j < free.size(); ++j) t[free[j]] = r.theta[j];

  DenseMatrix U = combine(1 + t[2], s.U, -t[2], s.U_prev);
  maxpy(-t[0], e.grad_U, U);
  DenseMatrix W = combine(1 + t[3], s.W, -t[3], s.W_prev);
  maxpy(-t[1], e.grad_W, W);
  DenseMatrix M = e.memory_at(t);
  const double drift = DriftModel(e, s.drift).predict(t);
  advance(s, X, std::move(U), std::move(W), std::move(M));
  s.drift = drift;
  s.steps_prev = t;
  rec.steps.alpha1 = t[0];
  rec.steps.alpha2 = t[1];
  if (scheme != MfScheme::simultaneous) rec.steps.beta1 = t[2];
  if (scheme == MfScheme::momentum_both) rec.steps.beta2 = t[3];
  rec.inner_iters = r.inner_iters;
  rec.f = s.f;
  rec.products = counter.count() - start;
  return rec;
}

}  // namespace

StepRecord step_altmin_so(MfState& s, const DenseMatrix& X, MfFactor which,
                          MfProductCounter& counter, const MfOptions& opts) {
  if (which == MfFactor::none) throw std::invalid_argument("step_altmin_so: choose U or W");
  const std::uint64_t start = counter.count();
  StepRecord rec;
  const bool on_u = which == MfFactor::U;
  // A switch invalidates M_prev as an image of this factor's momentum.
  if (s.last != which) {
    if (on_u) s.U_prev = s.U;
    else s.W_prev = s.W;
    s.M_prev = s.M;
  }
  const DenseMatrix G = pca_grad(s.M, X);
  const DenseMatrix grad = on_u ? counter.mul(G, s.W) : counter.mul_tn(G, s.U);
  const DenseMatrix image = on_u ? counter.mul_nt(grad, s.W) : counter.mul_nt(s.U, grad);
  rec.grad_norm = norm(grad.values());

  const DenseMatrix& factor = on_u ? s.U : s.W;
  const DenseMatrix& factor_prev = on_u ? s.U_prev : s.W_prev;
  const bool momentum = s.last == which && factor != factor_prev &&
                        resolvable(s.M, s.M_prev, opts.history_tolerance);

  std::vector<DenseMatrix> images{DenseMatrix(image.rows(), image.cols())};
  maxpy(-1.0, image, images[0]);
  if (momentum) images.push_back(combine(1.0, s.M, -1.0, s.M_prev));
  const auto all_zero = [](const DenseMatrix& m) {
    return std::all_of(m.values().begin(), m.values().end(), [](double x) { return x == 0.0; });
  };

  Vector theta(2, 0.0);
  if (!all_zero(images[0]) || images.size() > 1) {
    SubProblem sp;
    sp.dim = images.size();
    const DenseMatrix* base = &s.M;
    const DenseMatrix* data = &X;
    const std::vector<DenseMatrix>* imgs = &images;
    auto memory = [base, imgs](std::span<const double> x) {
      DenseMatrix M = *base;
      for (std::size_t j = 0; j < x.size(); ++j) maxpy(x[j], (*imgs)[j], M);
      return M;
    };
    sp.value = [memory, data](std::span<const double> x) { return pca_value(memory(x), *data); };
    sp.value_and_gradient = [memory, data, imgs](std::span<const double> x, std::span<double> g) {
      const DenseMatrix G2 = pca_grad(memory(x), *data);
      for (std::size_t j = 0; j < x.size(); ++j) g[j] = mdot(G2, (*imgs)[j]);
      return 0.5 * mdot(G2, G2);
    };
    Vector norms;
    for (const auto& im : images) norms.push_back(norm(im.values()));
    SubSolverOptions so = opts.sub;
    so.max_iters = so.budget_for(s.iteration + 1);
    const SubSolveResult r = solve_balanced(sp, norms, so);
    for (std::size_t j = 0; j < r.theta.size(); ++j) theta[j] = r.theta[j];
    rec.inner_iters = r.inner_iters;
  }

  DenseMatrix next = combine(1.0 + theta[1], factor, -theta[1], factor_prev);
  maxpy(-theta[0], grad, next);
  DenseMatrix M = combine(1.0 + theta[1], s.M, -theta[1], s.M_prev);
  maxpy(-theta[0], image, M);
  if (on_u) {
    s.U_prev = std::exchange(s.U, std::move(next));
    rec.steps.alpha1 = theta[0];
    rec.steps.beta1 = theta[1];
    s.steps_prev[0] = theta[0];
    s.steps_prev[2] = theta[1];
  } else {
    s.W_prev = std::exchange(s.W, std::move(next));
    rec.steps.alpha2 = theta[0];
    rec.steps.beta2 = theta[1];
    s.steps_prev[1] = theta[0];
    s.steps_prev[3] = theta[1];
  }
  s.M_prev = std::exchange(s.M, std::move(M));
  s.f = pca_value(s.M, X);
  s.last = which;
  ++s.iteration;
  rec.f = s.f;
  rec.products = counter.count() - start;
  return rec;
}

StepRecord step_simul_so2(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                          const MfOptions& opts) {
  return exact_step(s, X, MfScheme::simultaneous, counter, opts);
}

StepRecord step_momentum_one(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                             const MfOptions& opts) {
  return exact_step(s, X, MfScheme::momentum_one, counter, opts);
}

StepRecord step_momentum_both_exact(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                                    const MfOptions& opts) {
  return exact_step(s, X, MfScheme::momentum_both, counter, opts);
}

std::vector<std::array<double, 4>> propose_candidates(const MfState& s) {
  std::array<double, 4> base = s.steps_prev;
  if (base[0] == 0.0 && base[1] == 0.0) {
    const double wn = squared_norm(s.W.values());
    const double un = squared_norm(s.U.values());
    base = {wn > 0.0 ? 1.0 / wn : 1.0, un > 0.0 ? 1.0 / un : 1.0, 0.0, 0.0};
  }
  std::vector<std::array<double, 4>> out{{0, 0, 0, 0}, base};
  for (std::size_t j = 0; j < 2; ++j) {
    for (double factor : {2.0, 0.5}) {
      auto c = base;
      c[j] *= factor;
      out.push_back(c);
    }
  }
  for (std::size_t j = 2; j < 4; ++j) {
    auto c = base;
    c[j] += 0.25;
    out.push_back(c);
  }
  return out;
}

StepRecord step_momentum_both_inexact(MfState& s, const DenseMatrix& X,
                                      const std::vector<std::array<double, 4>>& candidates,
                                      MfProductCounter& counter) {
  const bool has_zero = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) {
    return c == std::array<double, 4>{0, 0, 0, 0};
  });
  if (!has_zero) throw std::invalid_argument("inexact MF step: candidates must include zero");
  const std::uint64_t start = counter.count();
  StepRecord rec;
  const DenseMatrix G = pca_grad(s.M, X);
  const DenseMatrix gU = counter.mul(G, s.W);
  const DenseMatrix gW = counter.mul_tn(G, s.U);
  rec.grad_norm = std::sqrt(squared_norm(gU.values()) + squared_norm(gW.values()));

  double best_f = 0.0;
  std::array<double, 4> best_t{};
  DenseMatrix best_U;
  DenseMatrix best_W;
  DenseMatrix best_M;
  bool first = true;
  for (const auto& t : candidates) {
    DenseMatrix U = combine(1 + t[2], s.U, -t[2], s.U_prev);
    maxpy(-t[0], gU, U);
    DenseMatrix W = combine(1 + t[3], s.W, -t[3], s.W_prev);
    maxpy(-t[1], gW, W);
    DenseMatrix M = counter.mul_nt(U, W);
    const double f = pca_value(M, X);
    if (!std::isfinite(f)) continue;
    if (first || f < best_f) {
      first = false;
      best_f = f;
      best_t = t;
      best_U = std::move(U);
      best_W = std::move(W);
      best_M = std::move(M);
    }
  }
  advance(s, X, std::move(best_U), std::move(best_W), std::move(best_M));
  s.steps_prev = best_t;
  rec.steps.alpha1 = best_t[0];
  rec.steps.alpha2 = best_t[1];
  rec.steps.beta1 = best_t[2];
  rec.steps.beta2 = best_t[3];
  rec.inner_iters = candidates.size();
  rec.f = s.f;
  rec.products = counter.count() - start;
  return rec;
}

namespace {

struct SchemeInfo {
  MfScheme scheme;
  std::string_view name;
};

constexpr std::array<SchemeInfo, 5> kSchemes{{
    {MfScheme::altmin, "altmin_so"},
    {MfScheme::simultaneous, "simul_so"},
    {MfScheme::momentum_one, "mom1_so"},
    {MfScheme::momentum_both, "mom2_so"},
    {MfScheme::momentum_inexact, "mom2_inexact"},
}};

}  // namespace

std::string_view mf_scheme_name(MfScheme scheme) {
  for (const auto& s : kSchemes)
    if (s.scheme == scheme) return s.name;
  throw std::invalid_argument("unknown MF scheme");
}

std::optional<MfScheme> parse_mf_scheme(std::string_view name) {
  for (const auto& s : kSchemes)
    if (s.name == name) return s.scheme;
  return std::nullopt;
}

const std::vector<MfScheme>& all_mf_schemes() {
  static const std::vector<MfScheme> all = [] {
    std::vector<MfScheme> v;
    for (const auto& s : kSchemes) v.push_back(s.scheme);
    return v;
  }();
  return all;
}

StepRecord step_mf(MfState& s, const DenseMatrix& X, MfScheme scheme, MfProductCounter& counter,
                   const MfOptions& opts) {
  StepRecord rec;
  switch (scheme) {
    case MfScheme::altmin: {
      const std::size_t block = std::max<std::size_t>(1, opts.altmin_block);
      const MfFactor which = (s.iteration / block) % 2 == 0 ? MfFactor::U : MfFactor::W;
      rec = step_altmin_so(s, X, which, counter, opts);
      break;
    }
    case MfScheme::simultaneous: rec = step_simul_so2(s, X, counter, opts); break;
    case MfScheme::momentum_one: rec = step_momentum_one(s, X, counter, opts); break;
    case MfScheme::momentum_both: rec = step_momentum_both_exact(s, X, counter, opts); break;
    case MfScheme::momentum_inexact: {
      const auto cands = opts.candidates ? opts.candidates(s) : propose_candidates(s);
      rec = step_momentum_both_inexact(s, X, cands, counter);
      break;
    }
  }
  rec.method = std::string(mf_scheme_name(scheme));
  return rec;
}

double audit_factorization(const MfState& s) {
  const DenseMatrix fresh = plain_nt(s.U, s.W);
  return norm(combine(1.0, s.M, -1.0, fresh).values()) / (1.0 + norm(s.M.values()));
}

Trace run_mf(const DenseMatrix& X, MfScheme scheme, MfState& s, std::size_t iters,
             const MfRunOptions& opts) {
  Trace trace;
  trace.method = std::string(mf_scheme_name(scheme));
  trace.f0 = s.f;
  MfProductCounter counter;
  for (std::size_t k = 1; k <= iters; ++k) {
    StepRecord rec = step_mf(s, X, scheme, counter, opts.step);
    if (opts.audit_every > 0 && k % opts.audit_every == 0)
      trace.max_audit_residual = std::max(trace.max_audit_residual, audit_factorization(s));
    if (opts.on_step) opts.on_step(k, rec, s);
    trace.steps.push_back(std::move(rec));
  }
  trace.max_audit_residual = std::max(trace.max_audit_residual, audit_factorization(s));
  const auto [gU, gW] = mf_gradient(s.U, s.W, X);
  trace.final_grad_norm = std::sqrt(squared_norm(gU.values()) + squared_norm(gW.values()));
  return trace;
}

}  // namespace subsearch
