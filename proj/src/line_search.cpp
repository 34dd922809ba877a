#include "subsearch/line_search.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsearch {

void WolfeOptions::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
    throw std::invalid_argument("WolfeOptions: need 0 < c1 < c2 < 1");
  if (max_evals == 0 || !(growth > 1.0))
    throw std::invalid_argument("WolfeOptions: need max_evals > 0 and growth > 1");
}

bool satisfies_armijo(double value, double alpha, double value0, double slope0, double c1) {
  return std::isfinite(value) && value <= value0 + c1 * alpha * slope0;
}

bool satisfies_strong_wolfe(double value, double slope, double alpha, double value0,
                            double slope0, const WolfeOptions& opts) {
  return satisfies_armijo(value, alpha, value0, slope0, opts.c1) && std::isfinite(slope) &&
         std::abs(slope) <= opts.c2 * std::abs(slope0);
}

LineSearchResult strong_wolfe(const LineFunction& phi, double alpha_init,
                              const WolfeOptions& opts) {
  opts.validate();
  LineSearchResult out;
  const auto [f0, g0] = phi(0.0);
  out.value0 = f0;
  out.slope0 = g0;
  out.evals = 1;
  if (!(g0 < 0.0)) throw std::invalid_argument("strong_wolfe: phi'(0) must be negative");
  if (!(alpha_init > 0.0) || !std::isfinite(alpha_init)) alpha_init = 1.0;

  // Best sufficient-decrease point, returned if the budget runs out.
  double armijo_alpha = 0.0;
  double armijo_value = f0;
  double armijo_slope = g0;

  auto evaluate = [&](double alpha) {
    auto r = phi(alpha);
    ++out.evals;
    if (satisfies_armijo(r.first, alpha, f0, g0, opts.c1) && r.first < armijo_value) {
      armijo_alpha = alpha;
      armijo_value = r.first;
      armijo_slope = r.second;
    }
    return r;
  };
  auto sufficient = [&](double alpha, double value) {
    return satisfies_armijo(value, alpha, f0, g0, opts.c1);
  };
  auto curvature = [&](double slope) {
    return std::isfinite(slope) && std::abs(slope) <= -opts.c2 * g0;
  };
  auto accept = [&](double alpha, double value, double slope) {
    out.alpha = alpha;
    out.value = value;
    out.slope = slope;
    out.status = SearchStatus::wolfe;
    return out;
  };

  auto zoom = [&](double lo, double f_lo, double hi) -> LineSearchResult {
    while (out.evals < opts.max_evals) {
      const double alpha = 0.5 * (lo + hi);
      const auto [fa, ga] = evaluate(alpha);
      if (!sufficient(alpha, fa) || fa >= f_lo) {
        hi = alpha;
      } else {
        if (curvature(ga)) return accept(alpha, fa, ga);
        if (ga * (hi - lo) >= 0.0) hi = lo;
        lo = alpha;
        f_lo = fa;
      }
    }
    return out;
  };

  double prev_alpha = 0.0;
  double prev_value = f0;
  double alpha = alpha_init;
  for (bool first = true; out.evals < opts.max_evals; first = false) {
    const auto [fa, ga] = evaluate(alpha);
    if (!sufficient(alpha, fa) || (!first && fa >= prev_value)) {
      zoom(prev_alpha, prev_value, alpha);
      break;
    }
    if (curvature(ga)) return accept(alpha, fa, ga);
    if (ga >= 0.0) {
      zoom(alpha, fa, prev_alpha);
      break;
    }
    prev_alpha = alpha;
    prev_value = fa;
    alpha *= opts.growth;
  }
  if (out.status == SearchStatus::wolfe) return out;

  if (armijo_alpha > 0.0) {
    out.alpha = armijo_alpha;
    out.value = armijo_value;
    out.slope = armijo_slope;
    out.status = SearchStatus::armijo_only;
  } else {
    out.alpha = 0.0;
    out.value = f0;
    out.slope = g0;
    out.status = SearchStatus::failed;
  }
  return out;
}

BacktrackResult backtrack_half(const std::function<double(double)>& trial, double f0,
                               double grad_norm2, LEstimate start) {
  if (!(grad_norm2 > 0.0)) throw std::invalid_argument("backtrack_half: gradient is zero");
  BacktrackResult out;
  double L = start.L > 0.0 ? start.L : 1.0;
  while (L <= 1e30) {
    const double value = trial(L);
    ++out.trials;
    // Slack of a few ulps of f0: near a minimizer the required decrease
    // drops below rounding and the test could otherwise never pass.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
    if (std::isfinite(value) && value <= f0 - grad_norm2 / (2.0 * L) + slack) {
      out.L = L;
      out.value = value;
      out.success = true;
      return out;
    }
    L *= 2.0;
  }
  out.L = L;
  out.value = f0;
  return out;
}

NagState nag_backtrack_step(const SmoothFunction& fn, NagState state) {
  const Vector grad = fn.gradient(state.y);
  const double fy = fn.value(state.y);
  const double gnorm2 = squared_norm(grad);
  Vector x_next = state.y;
  if (gnorm2 > 0.0) {
    Vector candidate(state.y.size());
    auto trial = [&](double L) {
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = state.y[i] - grad[i] / L;
      return fn.value(candidate);
    };
    const auto bt = backtrack_half(trial, fy, gnorm2, state.L);
    if (!bt.success) throw std::runtime_error("nag_backtrack_step: curvature estimate diverged");
    state.L.L = bt.L;
    for (std::size_t i = 0; i < x_next.size(); ++i) x_next[i] = state.y[i] - grad[i] / bt.L;
  }
  const double t_next = nag_next_t(state.t);
  const double momentum = (state.t - 1.0) / t_next;
  Vector y_next(x_next.size());
  for (std::size_t i = 0; i < y_next.size(); ++i)
    y_next[i] = x_next[i] + momentum * (x_next[i] - state.x[i]);
  state.x = std::move(x_next);
  state.y = std::move(y_next);
  state.t = t_next;
  return state;
}

}  // namespace subsearch
