#include "subsearch/log_det.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsearch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool factorize(const DenseMatrix& a, DenseMatrix& L) {
  const std::size_t d = a.rows();
  L = DenseMatrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    L(j, j) = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / ljj;
    }
  }
  return true;
}

bool symmetric(const DenseMatrix& a) {
  double scale = 0.0;
  for (double x : a.values()) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) return false;
  return true;
}

Vector sym_mat_vec(const DenseMatrix& a, std::span<const double> x) {
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double trace_product(const DenseMatrix& S, const DenseMatrix& V) {
  double t = 0.0;
  for (std::size_t i = 0; i < S.rows(); ++i) t += dot(S.row(i), V.row(i));  // V symmetric
  return t;
}

Vector counted_solve(SpdState& s, std::span<const double> b) {
  ++s.solves;
  Vector x = s.chol.solve(b);
  if (!all_finite(x)) throw std::domain_error("log-det: linear solve is not finite");
  return x;
}

void add_outer(DenseMatrix& V, double alpha, std::span<const double> u) {
  for (std::size_t i = 0; i < V.rows(); ++i)
    for (std::size_t j = 0; j < V.cols(); ++j) V(i, j) += alpha * (u[i] * u[j]);
}

void refactor(SpdState& s) {
  s.chol = Cholesky(s.V);
  s.logdet_V = s.chol.logdet();
  s.since_refactor = 0;
}

}  // namespace

Cholesky::Cholesky(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::domain_error("Cholesky: matrix is not square");
  if (!symmetric(a)) throw std::domain_error("Cholesky: matrix is not symmetric");
  if (!factorize(a, L_)) throw std::domain_error("Cholesky: matrix is not positive definite");
}

std::optional<Cholesky> Cholesky::try_factor(const DenseMatrix& a) {
  if (a.rows() != a.cols() || !symmetric(a)) return std::nullopt;
  Cholesky c;
  if (!factorize(a, c.L_)) return std::nullopt;
  return c;
}

double Cholesky::logdet() const {
  double s = 0.0;
  for (std::size_t i = 0; i < L_.rows(); ++i) s += std::log(L_(i, i));
  return 2.0 * s;
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t d = L_.rows();
  if (b.size() != d) throw std::invalid_argument("Cholesky::solve: size mismatch");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < d; ++i) {
    double v = x[i];
    for (std::size_t k = 0; k < i; ++k) v -= L_(i, k) * x[k];
    x[i] = v / L_(i, i);
  }
  for (std::size_t i = d; i-- > 0;) {
    double v = x[i];
    for (std::size_t k = i + 1; k < d; ++k) v -= L_(k, i) * x[k];
    x[i] = v / L_(i, i);
  }
  return x;
}

bool Cholesky::rank_one_update(double sigma, std::span<const double> x) {
  if (sigma == 0.0) return true;
  const std::size_t d = L_.rows();
  const double sign = sigma > 0.0 ? 1.0 : -1.0;
  Vector w(x.begin(), x.end());
  for (double& wi : w) wi *= std::sqrt(std::abs(sigma));
  for (std::size_t k = 0; k < d; ++k) {
    const double lkk = L_(k, k);
    const double r2 = lkk * lkk + sign * w[k] * w[k];
    if (!(r2 > 0.0)) return false;
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double sn = w[k] / lkk;
    L_(k, k) = r;
    for (std::size_t i = k + 1; i < d; ++i) {
      L_(i, k) = (L_(i, k) + sign * sn * w[i]) / c;
      w[i] = c * w[i] - sn * L_(i, k);
    }
  }
  return true;
}

SpdState make_spd_state(DenseMatrix S, DenseMatrix V, std::uint64_t seed) {
  if (S.rows() != S.cols() || S.rows() != V.rows() || V.rows() != V.cols())
    throw std::domain_error("make_spd_state: S and V must be square of equal size");
  SpdState s{std::move(S), std::move(V), Cholesky(DenseMatrix::identity(1)), 0.0, Rng(seed)};
  refactor(s);
  return s;
}

double f_gauss(const SpdState& s) { return trace_product(s.S, s.V) - s.logdet_V; }

double f_gauss(const DenseMatrix& S, const DenseMatrix& V) {
  if (S.rows() != V.rows() || S.cols() != V.cols())
    throw std::domain_error("f_gauss: shape mismatch");
  return trace_product(S, V) - Cholesky(V).logdet();
}

DenseMatrix gauss_gradient(const DenseMatrix& S, const DenseMatrix& V) {
  const Cholesky c(V);
  const std::size_t d = V.rows();
  DenseMatrix g = S;
  Vector e(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    e[j] = 1.0;
    const Vector col = c.solve(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < d; ++i) g(i, j) -= col[i];
  }
  return g;
}

RankOneFactor rank1_det_factor(SpdState& s, std::span<const double> u, double alpha) {
  RankOneFactor r;
  r.u_tilde = counted_solve(s, u);
  r.factor = 1.0 + alpha * dot(u, r.u_tilde);
  return r;
}

double rank2_det_factor(SpdState& s, std::span<const double> u, std::span<const double> v,
                        double a1, double a2) {
  const Vector ut = counted_solve(s, u);
  const Vector vt = counted_solve(s, v);
  return (1.0 + a1 * dot(u, ut)) * (1.0 + a2 * dot(v, vt)) - a1 * a2 * dot(v, ut) * dot(u, vt);
}

StepRecord step_rank_so(SpdState& s, const std::vector<Vector>& directions,
                        const LogDetOptions& opts) {
  const std::size_t p = directions.size();
  if (p != 1 && p != 2) throw std::invalid_argument("step_rank_so: one or two directions");
  const std::uint64_t start = s.solves;
  StepRecord rec;
  rec.grad_norm = norm(gauss_gradient(s.S, s.V).values());

  std::vector<Vector> tilde;
  Vector sq(p), dq(p);
  for (std::size_t j = 0; j < p; ++j) {
    tilde.push_back(counted_solve(s, directions[j]));
    sq[j] = dot(directions[j], sym_mat_vec(s.S, directions[j]));
    dq[j] = dot(directions[j], tilde[j]);
  }
  const double cross = p == 2 ? dot(directions[0], tilde[1]) : 0.0;
  const double base = f_gauss(s);

  // D(theta) = (1 + a P)(1 + b Q) - a b C^2; feasible iff 1 + a P > 0 and D > 0.
  SubProblem sp;
  sp.dim = p;
  sp.value_and_gradient = [&](std::span<const double> t, std::span<double> g) {
    const double a = t[0];
    const double b = p == 2 ? t[1] : 0.0;
    const double f1 = 1.0 + a * dq[0];
    const double q = p == 2 ? dq[1] : 0.0;
    const double D = f1 * (1.0 + b * q) - a * b * cross * cross;
    if (!(f1 > 0.0) || !(D > 0.0)) {
      std::fill(g.begin(), g.end(), 0.0);
      return kInf;
    }
    g[0] = sq[0] - (dq[0] * (1.0 + b * q) - b * cross * cross) / D;
    double lin = a * sq[0];
    if (p == 2) {
      g[1] = sq[1] - (q * f1 - a * cross * cross) / D;
      lin += b * sq[1];
    }
    return base + lin - std::log(D);
  };
  sp.value = [&](std::span<const double> t) {
    Vector g(p);
    return sp.value_and_gradient(t, g);
  };

  SubSolverOptions so = opts.sub;
  so.max_iters = so.budget_for(s.iteration + 1);
  const SubSolveResult r = solve_balanced(sp, dq, so);

  double log_factor = 0.0;
  // The intermediate matrix after the first term may be nearly singular even
  // when the final one is comfortably SPD, so only the final V is refactored.
  bool updated = true;
  for (std::size_t j = 0; j < p; ++j) {
    const double t = r.theta[j];
    if (t == 0.0) continue;
    add_outer(s.V, t, directions[j]);
    if (updated) updated = s.chol.rank_one_update(t, directions[j]);
  }
  if (!updated) s.chol = Cholesky(s.V);
  {
    const double a = r.theta[0];
    const double b = p == 2 ? r.theta[1] : 0.0;
    const double q = p == 2 ? dq[1] : 0.0;
    log_factor = std::log((1.0 + a * dq[0]) * (1.0 + b * q) - a * b * cross * cross);
  }
  s.logdet_V += log_factor;
  ++s.iteration;
  if (opts.refactor_every > 0 && ++s.since_refactor >= opts.refactor_every) refactor(s);

  rec.steps.alpha1 = r.theta[0];
  if (p == 2) rec.steps.alpha2 = r.theta[1];
  rec.inner_iters = r.inner_iters;
  rec.products = s.solves - start;
  rec.f = f_gauss(s);
  return rec;
}

std::vector<Vector> propose_directions(SpdState& s, std::size_t rank) {
  if (rank != 1 && rank != 2) throw std::invalid_argument("propose_directions: rank 1 or 2");
  Vector x(s.V.rows());
  for (double& xi : x) xi = s.rng.normal();
  const double xn = norm(x);
  for (double& xi : x) xi /= xn;
  ++s.proposal_solves;
  const Vector vinv = s.chol.solve(x);
  Vector u = sym_mat_vec(s.S, x);
  axpy(-1.0, vinv, u);
  const double un = norm(u);
  if (!(un > 0.0) || !std::isfinite(un)) return {x};
  for (double& ui : u) ui /= un;
  std::vector<Vector> out{u};
  if (rank == 2 && std::abs(dot(u, x)) < 1.0 - 1e-8) out.push_back(std::move(x));
  return out;
}

std::string_view logdet_method_name(LogDetMethod m) {
  return m == LogDetMethod::rank1_so ? "rank1_so" : "rank2_so";
}

std::optional<LogDetMethod> parse_logdet_method(std::string_view name) {
  for (LogDetMethod m : all_logdet_methods())
    if (logdet_method_name(m) == name) return m;
  return std::nullopt;
}

const std::vector<LogDetMethod>& all_logdet_methods() {
  static const std::vector<LogDetMethod> all{LogDetMethod::rank1_so, LogDetMethod::rank2_so};
  return all;
}

double audit_logdet(const SpdState& s) {
  const double fresh = Cholesky(s.V).logdet();
  return std::abs(s.logdet_V - fresh) / (1.0 + std::abs(fresh));
}

Trace run_logdet(SpdState& s, LogDetMethod method, std::size_t iters,
                 const LogDetRunOptions& opts) {
  Trace trace;
  trace.method = std::string(logdet_method_name(method));
  trace.f0 = f_gauss(s);
  const std::size_t rank = method == LogDetMethod::rank1_so ? 1 : 2;
  for (std::size_t k = 1; k <= iters; ++k) {
    StepRecord rec = step_rank_so(s, propose_directions(s, rank), opts.step);
    rec.method = trace.method;
    if (opts.audit_every > 0 && k % opts.audit_every == 0)
      trace.max_audit_residual = std::max(trace.max_audit_residual, audit_logdet(s));
    if (opts.on_step) opts.on_step(k, rec, s);
    trace.steps.push_back(std::move(rec));
  }
  trace.max_audit_residual = std::max(trace.max_audit_residual, audit_logdet(s));
  trace.final_grad_norm = norm(gauss_gradient(s.S, s.V).values());
  return trace;
}

}  // namespace subsearch
