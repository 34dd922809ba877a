#include "subsearch/lcp_optimizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace subsearch {

bool LbfgsMemory::push(Vector s_new, Vector y_new) {
  if (!(dot(s_new, y_new) > 0.0)) return false;
  s.push_back(std::move(s_new));
  y.push_back(std::move(y_new));
  while (s.size() > capacity) {
    s.pop_front();
    y.pop_front();
  }
  return true;
}

Vector lbfgs_direction(const LbfgsMemory& memory, std::span<const double> grad) {
  Vector q(grad.begin(), grad.end());
  const std::size_t k = memory.size();
  if (k == 0) return q;
  std::vector<double> rho(k);
  std::vector<double> a(k);
  for (std::size_t i = k; i-- > 0;) {
    rho[i] = 1.0 / dot(memory.s[i], memory.y[i]);
    a[i] = rho[i] * dot(memory.s[i], q);
    axpy(-a[i], memory.y[i], q);
  }
  const double gamma = dot(memory.s.back(), memory.y.back()) / squared_norm(memory.y.back());
  for (double& v : q) v *= gamma;
  for (std::size_t i = 0; i < k; ++i) {
    const double b = rho[i] * dot(memory.y[i], q);
    axpy(a[i] - b, memory.s[i], q);
  }
  return q;
}

Vector adam_direction(AdamAccumulators& acc, std::span<const double> grad,
                      const AdamOptions& opts) {
  const std::size_t d = grad.size();
  if (acc.mu.size() != d) acc.mu.assign(d, 0.0);
  if (acc.v.size() != d) acc.v.assign(d, 0.0);
  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    acc.mu[i] = opts.beta1 * acc.mu[i] + (1.0 - opts.beta1) * grad[i];
    acc.v[i] = opts.beta2 * acc.v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
    out[i] = acc.mu[i] / (std::sqrt(acc.v[i]) + opts.epsilon);
  }
  return out;
}

MarginState make_state(const LcpObjective& obj, Vector w0) {
  if (w0.size() != obj.d()) throw std::invalid_argument("make_state: w0 has wrong length");
  MarginState s;
  s.m = obj.X().audit_mat_vec(w0);
  s.w = std::move(w0);
  s.w_prev = s.w;
  s.m_prev = s.m;
  s.f = obj.f_value_cached(s.w, s.m);
  return s;
}

namespace {

bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

bool has_momentum(const MarginState& s) { return !s.w_prev.empty() && s.w != s.w_prev; }

bool resolvable(std::span<const double> a, std::span<const double> a_prev, double tol) {
  if (a_prev.empty()) return false;
  const Vector diff = subtract(a, a_prev);
  return norm(diff) > tol * std::max(norm(a), norm(a_prev));
}

// Momentum is usable when the margin difference is resolvable.
bool momentum_usable(const MarginState& s, const StepOptions& opts) {
  return has_momentum(s) && resolvable(s.m, s.m_prev, opts.history_tolerance);
}

Vector negated(std::span<const double> v) { return scaled(-1.0, v); }

// Counted products taken between construction and used().
class ProductMeter {
 public:
  explicit ProductMeter(const CountedMatrix& X) : X_(X), start_(X.count()) {}
  std::uint64_t used() const { return X_.count() - start_; }

 private:
  const CountedMatrix& X_;
  std::uint64_t start_;
};

// Moves the state to (w, m); the old iterate becomes the momentum anchor.
void commit(const LcpObjective& obj, MarginState& s, Vector w, Vector m, Vector grad,
            Vector grad_image) {
  s.w_prev = std::exchange(s.w, std::move(w));
  s.m_prev = std::exchange(s.m, std::move(m));
  s.grad_prev = std::move(grad);
  s.grad_image_prev = std::move(grad_image);
  s.f = obj.f_value_cached(s.w, s.m);
  ++s.iteration;
}

void stay(const LcpObjective& obj, MarginState& s, Vector grad, Vector grad_image) {
  Vector w = s.w;
  Vector m = s.m;
  commit(obj, s, std::move(w), std::move(m), std::move(grad), std::move(grad_image));
}

struct Slot {
  std::size_t index;  // position in the method's full step-size vector
  SearchDirection dir;
};

struct SubspaceOutcome {
  Vector theta;  // full step-size vector, zero for absent slots
  std::size_t inner_iters = 0;
  Vector w;
  Vector m;
};

SubspaceOutcome subspace_step(const LcpObjective& obj, const MarginState& s,
                              std::vector<Slot> slots, std::size_t total,
                              const StepOptions& opts) {
  SubspaceOutcome out;
  out.theta.assign(total, 0.0);
  std::erase_if(slots, [](const Slot& sl) { return is_zero(sl.dir.params); });
  if (slots.empty()) {
    out.w = s.w;
    out.m = s.m;
    return out;
  }

  MarginSubspace sub{s.w, s.m, {}};
  Vector norms;
  Vector warm;
  for (auto& sl : slots) {
    norms.push_back(norm(sl.dir.margins));
    if (!opts.warm_start.empty())
      warm.push_back(sl.index < opts.warm_start.size() ? opts.warm_start[sl.index] : 0.0);
    sub.dirs.push_back(std::move(sl.dir));
  }
  const SubProblem sp = obj.restrict_to(sub);
  SubSolverOptions so = opts.sub;
  so.max_iters = so.budget_for(s.iteration + 1);
  const SubSolveResult r = opts.scale_subproblem
                               ? solve_balanced(sp, norms, so, warm, opts.polish_unscaled)
                               : solve(sp, so, warm);

  for (std::size_t j = 0; j < slots.size(); ++j) out.theta[slots[j].index] = r.theta[j];
  out.inner_iters = r.inner_iters;
  out.w = sub.params_at(r.theta);
  out.m = sub.margins_at(r.theta);
  return out;
}

struct LineOutcome {
  LineSearchResult search;
  bool ran = false;
  Vector w;
  Vector m;
};

// Strong Wolfe search along (p, Xp) from the current state.
LineOutcome wolfe_step(const LcpObjective& obj, const MarginState& s, SearchDirection dir,
                       double alpha_init, const WolfeOptions& wolfe) {
  LineOutcome out;
  MarginSubspace sub{s.w, s.m, {std::move(dir)}};
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
    out.search.status = SearchStatus::failed;
  }
  const std::array<double, 1> th{out.search.alpha};
  out.w = sub.params_at(th);
  out.m = sub.margins_at(th);
  return out;
}

void record_search(StepRecord& rec, MarginState& s, const LineOutcome& lo, bool nonzero_grad) {
  if (lo.ran) rec.line_search = lo.search;
  rec.search_failed = nonzero_grad && lo.search.status == SearchStatus::failed;
  rec.inner_iters = lo.search.evals;
  if (lo.search.alpha > 0.0) s.alpha_prev = lo.search.alpha;
}

void finish(StepRecord& rec, const MarginState& s, const ProductMeter& meter) {
  rec.f = s.f;
  rec.products = meter.used();
}

}  // namespace

StepRecord step_gd_fixedL(const LcpObjective& obj, MarginState& s, const StepOptions&) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  const double gn2 = squared_norm(g);
  rec.grad_norm = std::sqrt(gn2);
  if (gn2 == 0.0) {
    rec.steps.alpha1 = 0.0;
    stay(obj, s, std::move(g), {});
    finish(rec, s, meter);
    return rec;
  }
  Vector wt(s.w.size());
  Vector mt;
  auto trial = [&](double L) {
    for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = s.w[i] - g[i] / L;
    mt = mat_vec(obj.X(), wt);
    return obj.f_value_cached(wt, mt);
  };
  const auto bt = backtrack_half(trial, s.f, gn2, s.L);
  if (!bt.success) {
    // Required decrease below evaluation noise: stay put and flag.
    rec.search_failed = true;
    rec.steps.alpha1 = 0.0;
    rec.inner_iters = bt.trials;
    stay(obj, s, std::move(g), {});
    finish(rec, s, meter);
    return rec;
  }
  s.L.L = bt.L;
  rec.steps.alpha1 = 1.0 / bt.L;
  rec.inner_iters = bt.trials;
  commit(obj, s, std::move(wt), std::move(mt), std::move(g), {});
  finish(rec, s, meter);
  return rec;
}

StepRecord step_gd_lo(const LcpObjective& obj, MarginState& s, const StepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  Vector d = mat_vec(obj.X(), g);
  rec.grad_norm = norm(g);
  std::vector<Slot> slots;
  slots.push_back({0, {negated(g), negated(d)}});
  auto out = subspace_step(obj, s, std::move(slots), 1, opts);
  rec.steps.alpha1 = out.theta[0];
  rec.inner_iters = out.inner_iters;
  commit(obj, s, std::move(out.w), std::move(out.m), std::move(g), std::move(d));
  finish(rec, s, meter);
  return rec;
}

StepRecord step_gd_wolfe(const LcpObjective& obj, MarginState& s, const StepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  Vector d = mat_vec(obj.X(), g);
  rec.grad_norm = norm(g);
  auto lo = wolfe_step(obj, s, {negated(g), negated(d)}, s.alpha_prev, opts.wolfe);
  record_search(rec, s, lo, rec.grad_norm > 0.0);
  rec.steps.alpha1 = lo.search.alpha;
  commit(obj, s, std::move(lo.w), std::move(lo.m), std::move(g), std::move(d));
  finish(rec, s, meter);
  return rec;
}

StepRecord step_cg_prp(const LcpObjective& obj, MarginState& s, SearchMode mode,
                       const StepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  rec.grad_norm = norm(g);

  double eta = 0.0;
  Vector mom;
  Vector mom_image;
  if (!s.grad_prev.empty()) {
    double denom = 0.0;
    if (opts.pr == PrFormula::classical && !s.dir_prev.empty()) {
      denom = squared_norm(s.grad_prev);
      mom = s.dir_prev;
      mom_image = s.dir_image_prev;
    } else if (opts.pr == PrFormula::as_displayed && momentum_usable(s, opts)) {
      denom = squared_norm(g);
      mom = subtract(s.w, s.w_prev);
      mom_image = subtract(s.m, s.m_prev);
    }
    if (denom > 0.0) eta = std::max(0.0, dot(g, subtract(g, s.grad_prev)) / denom);
  }

  Vector d = mat_vec(obj.X(), g);
  Vector p = negated(g);
  Vector q = negated(d);
  if (eta > 0.0) {
    axpy(eta, mom, p);
    axpy(eta, mom_image, q);
    if (dot(g, p) >= 0.0) {
      eta = 0.0;
      p = negated(g);
      q = negated(d);
      rec.momentum_reset = true;
    }
  }
  rec.steps.beta1 = eta;

  Vector w_new;
  Vector m_new;
  double alpha = 0.0;
  if (mode == SearchMode::wolfe) {
    auto lo = wolfe_step(obj, s, {p, q}, s.alpha_prev, opts.wolfe);
    record_search(rec, s, lo, rec.grad_norm > 0.0);
    alpha = lo.search.alpha;
    w_new = std::move(lo.w);
    m_new = std::move(lo.m);
  } else {
    std::vector<Slot> slots;
    slots.push_back({0, {p, q}});
    auto out = subspace_step(obj, s, std::move(slots), 1, opts);
    alpha = out.theta[0];
    rec.inner_iters = out.inner_iters;
    w_new = std::move(out.w);
    m_new = std::move(out.m);
  }
  rec.steps.alpha1 = alpha;
  commit(obj, s, std::move(w_new), std::move(m_new), std::move(g), std::move(d));
  s.dir_prev = std::move(p);
  s.dir_image_prev = std::move(q);
  finish(rec, s, meter);
  return rec;
}

namespace {

// Gradient, momentum, gradient-momentum and scaling directions, in the slot
// order alpha, beta, gamma, delta-hat.
StepRecord momentum_family(const LcpObjective& obj, MarginState& s, const StepOptions& opts,
                           bool gradient_momentum, bool scaling) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  Vector d = mat_vec(obj.X(), g);
  rec.grad_norm = norm(g);

  std::vector<Slot> slots;
  slots.push_back({0, {negated(g), negated(d)}});
  if (momentum_usable(s, opts))
    slots.push_back({1, {subtract(s.w, s.w_prev), subtract(s.m, s.m_prev)}});
  std::size_t total = 2;
  if (gradient_momentum) {
    if (!s.grad_prev.empty() && resolvable(d, s.grad_image_prev, opts.history_tolerance))
      slots.push_back({2, {subtract(g, s.grad_prev), subtract(d, s.grad_image_prev)}});
    total = 3;
  }
  if (scaling) {
    slots.push_back({3, {s.w, s.m}});
    total = 4;
  }
  auto out = subspace_step(obj, s, std::move(slots), total, opts);
  rec.steps.alpha1 = out.theta[0];
  rec.steps.beta1 = out.theta[1];
  if (gradient_momentum) rec.steps.gamma = out.theta[2];
  if (scaling) rec.steps.delta = 1.0 + out.theta[3];
  rec.inner_iters = out.inner_iters;
  commit(obj, s, std::move(out.w), std::move(out.m), std::move(g), std::move(d));
  finish(rec, s, meter);
  return rec;
}

}  // namespace

StepRecord step_memory_gradient(const LcpObjective& obj, MarginState& s,
                                const StepOptions& opts) {
  return momentum_family(obj, s, opts, false, false);
}

StepRecord step_nag_so(const LcpObjective& obj, MarginState& s, const StepOptions& opts) {
  return momentum_family(obj, s, opts, true, false);
}

StepRecord step_snag_so(const LcpObjective& obj, MarginState& s, const StepOptions& opts) {
  return momentum_family(obj, s, opts, true, true);
}

StepRecord step_nag_fixedL(const LcpObjective& obj, MarginState& s, const StepOptions&) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  if (s.nag_y.empty()) {
    s.nag_y = s.w;
    s.nag_my = s.m;
    s.nag_t = 1.0;
  }
  const Vector g = obj.f_grad_cached(s.nag_y, s.nag_my);
  const double fy = obj.f_value_cached(s.nag_y, s.nag_my);
  const double gn2 = squared_norm(g);
  rec.grad_norm = std::sqrt(gn2);

  Vector xt = s.nag_y;
  Vector mt = s.nag_my;
  if (gn2 > 0.0) {
    auto trial = [&](double L) {
      for (std::size_t i = 0; i < xt.size(); ++i) xt[i] = s.nag_y[i] - g[i] / L;
      mt = mat_vec(obj.X(), xt);
      return obj.f_value_cached(xt, mt);
    };
    const auto bt = backtrack_half(trial, fy, gn2, s.L);
    rec.inner_iters = bt.trials;
    if (!bt.success) {
      // Restart from the current iterate with the momentum cleared.
      rec.search_failed = true;
      rec.steps.alpha1 = 0.0;
      rec.steps.beta1 = 0.0;
      stay(obj, s, {}, {});
      s.nag_y = s.w;
      s.nag_my = s.m;
      s.nag_t = 1.0;
      finish(rec, s, meter);
      return rec;
    }
    s.L.L = bt.L;
  }
  const double t_next = nag_next_t(s.nag_t);
  const double c = (s.nag_t - 1.0) / t_next;
  Vector y_next = xt;
  Vector my_next = mt;
  for (std::size_t i = 0; i < y_next.size(); ++i) y_next[i] += c * (xt[i] - s.w[i]);
  for (std::size_t i = 0; i < my_next.size(); ++i) my_next[i] += c * (mt[i] - s.m[i]);
  rec.steps.alpha1 = 1.0 / s.L.L;
  rec.steps.beta1 = c;
  commit(obj, s, std::move(xt), std::move(mt), {}, {});
  s.nag_y = std::move(y_next);
  s.nag_my = std::move(my_next);
  s.nag_t = t_next;
  finish(rec, s, meter);
  return rec;
}

StepRecord step_qn(const LcpObjective& obj, MarginState& s, QnMode mode,
                   const StepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  rec.grad_norm = norm(g);
  if (!s.grad_prev.empty() && has_momentum(s))
    s.lbfgs.push(subtract(s.w, s.w_prev), subtract(g, s.grad_prev));

  Vector p = lbfgs_direction(s.lbfgs, g);
  double sign = 1.0;
  if (rec.grad_norm > 0.0 && dot(g, p) <= 0.0) {
    p = negated(p);
    sign = -1.0;
    rec.direction_flipped = true;
  }
  Vector q = mat_vec(obj.X(), p);

  Vector w_new;
  Vector m_new;
  double alpha = 0.0;
  if (mode == QnMode::wolfe) {
    auto lo = wolfe_step(obj, s, {negated(p), negated(q)}, 1.0, opts.wolfe);
    record_search(rec, s, lo, rec.grad_norm > 0.0);
    alpha = lo.search.alpha;
    w_new = std::move(lo.w);
    m_new = std::move(lo.m);
  } else {
    std::vector<Slot> slots;
    slots.push_back({0, {negated(p), negated(q)}});
    if (mode == QnMode::momentum_so && momentum_usable(s, opts))
      slots.push_back({1, {subtract(s.w, s.w_prev), subtract(s.m, s.m_prev)}});
    auto out = subspace_step(obj, s, std::move(slots), 2, opts);
    alpha = out.theta[0];
    if (mode == QnMode::momentum_so) rec.steps.beta1 = out.theta[1];
    rec.inner_iters = out.inner_iters;
    w_new = std::move(out.w);
    m_new = std::move(out.m);
  }
  rec.steps.alpha1 = sign * alpha;
  commit(obj, s, std::move(w_new), std::move(m_new), std::move(g), {});
  finish(rec, s, meter);
  return rec;
}

StepRecord step_adam(const LcpObjective& obj, MarginState& s, AdamMode mode,
                     const StepOptions& opts) {
  ProductMeter meter(obj.X());
  StepRecord rec;
  Vector g = obj.f_grad_cached(s.w, s.m);
  rec.grad_norm = norm(g);
  Vector dir = adam_direction(s.adam, g, opts.adam);
  Vector q = is_zero(dir) ? Vector(obj.n(), 0.0) : mat_vec(obj.X(), dir);

  Vector w_new;
  Vector m_new;
  switch (mode) {
    case AdamMode::fixed: {
      const double a = opts.adam.step;
      w_new = s.w;
      m_new = s.m;
      axpy(-a, dir, w_new);
      axpy(-a, q, m_new);
      rec.steps.alpha1 = a;
      break;
    }
    case AdamMode::wolfe: {
      double sign = 1.0;
      if (rec.grad_norm > 0.0 && !(dot(g, dir) > 0.0)) {
        sign = -1.0;
        rec.direction_flipped = true;
      }
      auto lo = wolfe_step(obj, s, {scaled(-sign, dir), scaled(-sign, q)}, s.alpha_prev,
                           opts.wolfe);
      record_search(rec, s, lo, rec.grad_norm > 0.0);
      rec.steps.alpha1 = sign * lo.search.alpha;
      w_new = std::move(lo.w);
      m_new = std::move(lo.m);
      break;
    }
    case AdamMode::lo:
    case AdamMode::two_dir_so: {
      std::vector<Slot> slots;
      slots.push_back({0, {negated(dir), negated(q)}});
      if (mode == AdamMode::two_dir_so && !s.dir_prev.empty())
        slots.push_back({1, {negated(s.dir_prev), negated(s.dir_image_prev)}});
      auto out = subspace_step(obj, s, std::move(slots), 2, opts);
      rec.steps.alpha1 = out.theta[0];
      if (mode == AdamMode::two_dir_so) rec.steps.alpha2 = out.theta[1];
      rec.inner_iters = out.inner_iters;
      w_new = std::move(out.w);
      m_new = std::move(out.m);
      break;
    }
  }
  commit(obj, s, std::move(w_new), std::move(m_new), std::move(g), {});
  s.dir_prev = std::move(dir);
  s.dir_image_prev = std::move(q);
  finish(rec, s, meter);
  return rec;
}

namespace {

struct MethodInfo {
  LcpMethod method;
  std::string_view name;
  bool subspace;
};

constexpr std::array<MethodInfo, 16> kMethods{{
    {LcpMethod::gd_1L, "gd_1L", false},
    {LcpMethod::gd_ls, "gd_ls", false},
    {LcpMethod::gd_lo, "gd_lo", true},
    {LcpMethod::cg_ls, "gd+m_ls", false},
    {LcpMethod::cg_lo, "gd+m_lo", true},
    {LcpMethod::mg_so, "gd+m_so", true},
    {LcpMethod::nag_1L, "nag_1L", false},
    {LcpMethod::nag_so, "nag_so", true},
    {LcpMethod::snag_so, "snag_so", true},
    {LcpMethod::qn_ls, "qn_ls", false},
    {LcpMethod::qn_lo, "qn_lo", true},
    {LcpMethod::qn_mom_so, "qn+m_so", true},
    {LcpMethod::adam, "adam", false},
    {LcpMethod::adam_ls, "adam_ls", false},
    {LcpMethod::adam_lo, "adam_lo", true},
    {LcpMethod::adam2_so, "adam2_so", true},
}};

const MethodInfo& info(LcpMethod method) {
  for (const auto& m : kMethods)
    if (m.method == method) return m;
  throw std::invalid_argument("unknown LCP method");
}

}  // namespace

std::string_view method_name(LcpMethod method) { return info(method).name; }

std::optional<LcpMethod> parse_lcp_method(std::string_view name) {
  for (const auto& m : kMethods)
    if (m.name == name) return m.method;
  return std::nullopt;
}

const std::vector<LcpMethod>& all_lcp_methods() {
  static const std::vector<LcpMethod> all = [] {
    std::vector<LcpMethod> v;
    for (const auto& m : kMethods) v.push_back(m.method);
    return v;
  }();
  return all;
}

bool is_subspace_method(LcpMethod method) { return info(method).subspace; }

StepRecord step(const LcpObjective& obj, MarginState& s, LcpMethod method,
                const StepOptions& opts) {
  StepRecord rec;
  switch (method) {
    case LcpMethod::gd_1L: rec = step_gd_fixedL(obj, s, opts); break;
    case LcpMethod::gd_ls: rec = step_gd_wolfe(obj, s, opts); break;
    case LcpMethod::gd_lo: rec = step_gd_lo(obj, s, opts); break;
    case LcpMethod::cg_ls: rec = step_cg_prp(obj, s, SearchMode::wolfe, opts); break;
    case LcpMethod::cg_lo: rec = step_cg_prp(obj, s, SearchMode::lo, opts); break;
    case LcpMethod::mg_so: rec = step_memory_gradient(obj, s, opts); break;
    case LcpMethod::nag_1L: rec = step_nag_fixedL(obj, s, opts); break;
    case LcpMethod::nag_so: rec = step_nag_so(obj, s, opts); break;
    case LcpMethod::snag_so: rec = step_snag_so(obj, s, opts); break;
    case LcpMethod::qn_ls: rec = step_qn(obj, s, QnMode::wolfe, opts); break;
    case LcpMethod::qn_lo: rec = step_qn(obj, s, QnMode::lo, opts); break;
    case LcpMethod::qn_mom_so: rec = step_qn(obj, s, QnMode::momentum_so, opts); break;
    case LcpMethod::adam: rec = step_adam(obj, s, AdamMode::fixed, opts); break;
    case LcpMethod::adam_ls: rec = step_adam(obj, s, AdamMode::wolfe, opts); break;
    case LcpMethod::adam_lo: rec = step_adam(obj, s, AdamMode::lo, opts); break;
    case LcpMethod::adam2_so: rec = step_adam(obj, s, AdamMode::two_dir_so, opts); break;
  }
  rec.method = std::string(method_name(method));
  return rec;
}

double audit_margins(const LcpObjective& obj, const MarginState& s) {
  const Vector fresh = obj.X().audit_mat_vec(s.w);
  return norm(subtract(s.m, fresh)) / (1.0 + norm(s.m));
}

Trace run(const LcpObjective& obj, LcpMethod method, MarginState& s, std::size_t iters,
          const RunOptions& opts) {
  Trace trace;
  trace.method = std::string(method_name(method));
  trace.f0 = s.f;
  trace.steps.reserve(iters);
  for (std::size_t k = 1; k <= iters; ++k) {
    StepRecord rec;
    try {
      rec = step(obj, s, method, opts.step);
    } catch (const std::exception& e) {
      throw std::runtime_error(trace.method + " failed at iteration " + std::to_string(k) +
                               ": " + e.what());
    }
    if (opts.audit_every > 0 && k % opts.audit_every == 0)
      trace.max_audit_residual = std::max(trace.max_audit_residual, audit_margins(obj, s));
    if (opts.on_step) opts.on_step(k, rec, s);
    trace.steps.push_back(std::move(rec));
  }
  trace.max_audit_residual = std::max(trace.max_audit_residual, audit_margins(obj, s));
  Vector grad = obj.X().audit_mat_t_vec(obj.g_grad(s.m));
  if (obj.lambda() > 0.0) axpy(obj.lambda(), s.w, grad);
  trace.final_grad_norm = norm(grad);
  return trace;
}

}  // namespace subsearch
