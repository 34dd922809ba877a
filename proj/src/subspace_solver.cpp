#include "subsearch/subspace_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace subsearch {

std::size_t SubSolverOptions::budget_for(std::size_t outer_iteration) const {
  if (outer_iteration_multiple == 0) return max_iters;
  return std::min(max_iters, std::max<std::size_t>(1, outer_iteration_multiple * outer_iteration));
}

namespace {

bool within_cap(std::span<const double> theta, double cap) {
  return std::all_of(theta.begin(), theta.end(), [cap](double v) { return std::abs(v) <= cap; });
}

// Rounding level of a computed objective value. Below it, comparisons of
// values carry no information and the gradient decides.
double value_noise(double v) { return 32.0 * std::numeric_limits<double>::epsilon() * std::abs(v); }

}  // namespace

SubSolveResult solve(const SubProblem& sp, const SubSolverOptions& opts,
                     std::span<const double> warm_start) {
  const std::size_t p = sp.dim;
  if (p == 0) throw std::invalid_argument("subspace solve: dimension must be positive");
  if (opts.memory == 0) throw std::invalid_argument("subspace solve: memory must be >= 1");

  SubSolveResult result;
  Vector theta(p, 0.0);
  Vector grad(p, 0.0);
  double f = sp.value_and_gradient(theta, grad);
  result.evaluations = 1;
  if (!std::isfinite(f)) throw std::domain_error("subspace solve: phi(0) is not finite");
  result.value_at_zero = f;

  if (!warm_start.empty()) {
    if (warm_start.size() != p) throw std::invalid_argument("subspace solve: warm start size");
    if (within_cap(warm_start, opts.coordinate_cap)) {
      Vector g_warm(p);
      const double f_warm = sp.value_and_gradient(warm_start, g_warm);
      ++result.evaluations;
      if (std::isfinite(f_warm) && all_finite(g_warm) && f_warm <= f) {
        theta.assign(warm_start.begin(), warm_start.end());
        grad = std::move(g_warm);
        f = f_warm;
      }
    }
  }

  Vector best = theta;
  double best_f = f;
  double best_gnorm = norm(grad);
  double min_gnorm = best_gnorm;
  std::size_t stalled = 0;
  std::deque<double> history{f};

  double bb_step = 1.0 / std::max(1.0, norm(grad));
  Vector trial(p);
  Vector trial_grad(p);
  const std::size_t max_iters = opts.max_iters;

  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    const double gnorm2 = squared_norm(grad);
    if (std::sqrt(gnorm2) <= opts.grad_tol) break;

    const double reference = *std::max_element(history.begin(), history.end());
    double step = std::clamp(bb_step, opts.min_step, opts.max_step);
    bool accepted = false;
    for (std::size_t bt = 0; bt <= opts.max_backtracks; ++bt, step *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = theta[j] - step * grad[j];
      if (!within_cap(trial, opts.coordinate_cap)) continue;
      const double ft = sp.value(trial);
      ++result.evaluations;
      if (!std::isfinite(ft)) continue;
      const double required = opts.armijo * step * gnorm2;
      const double noise = value_noise(reference);
      if (ft <= reference - required || (required <= noise && ft <= reference + noise)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const double f_new = sp.value_and_gradient(trial, trial_grad);
    ++result.evaluations;
    if (!std::isfinite(f_new) || !all_finite(trial_grad)) break;

    double ss = 0.0;
    double sy = 0.0;
    double theta_sq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double s = trial[j] - theta[j];
      const double y = trial_grad[j] - grad[j];
      ss += s * s;
      sy += s * y;
      theta_sq += trial[j] * trial[j];
    }
    bb_step = sy > 0.0 ? ss / sy : 1.0;

    theta = trial;
    grad = trial_grad;
    f = f_new;
    history.push_back(f);
    if (history.size() > opts.memory) history.pop_front();
    const double gn = norm(grad);
    // Progress is a decrease beyond rounding or a clearly smaller gradient.
    const bool progress = f < best_f - value_noise(best_f) || gn < 0.9 * min_gnorm;
    min_gnorm = std::min(min_gnorm, gn);
    stalled = progress ? 0 : stalled + 1;
    // Within rounding of the best value, the smaller gradient is the better point.
    if (f < best_f ||
        (f <= best_f + value_noise(best_f) && f <= result.value_at_zero && gn < best_gnorm)) {
      best_f = f;
      best = theta;
      best_gnorm = gn;
    }
    const double eps = std::numeric_limits<double>::epsilon();
    if (ss <= eps * eps * theta_sq || (opts.stall_window > 0 && stalled >= opts.stall_window)) {
      ++iter;
      break;
    }
  }

  result.theta = std::move(best);
  result.value = best_f;
  result.inner_iters = iter;
  return result;
}

SubSolveResult solve_scaled(const SubProblem& sp, std::span<const double> scale,
                            const SubSolverOptions& opts, std::span<const double> warm_start) {
  const std::size_t p = sp.dim;
  if (scale.size() != p) throw std::invalid_argument("solve_scaled: scale size mismatch");
  const Vector s(scale.begin(), scale.end());
  const double cap = opts.coordinate_cap;

  auto to_theta = [s](std::span<const double> u) {
    Vector theta(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) theta[j] = u[j] * s[j];
    return theta;
  };

  SubProblem scaled_sp;
  scaled_sp.dim = p;
  scaled_sp.value = [&sp, to_theta, cap](std::span<const double> u) {
    const Vector theta = to_theta(u);
    if (!within_cap(theta, cap)) return std::numeric_limits<double>::infinity();
    return sp.value(theta);
  };
  scaled_sp.value_and_gradient = [&sp, to_theta, s, cap](std::span<const double> u,
                                                       std::span<double> g) {
    const Vector theta = to_theta(u);
    if (!within_cap(theta, cap)) return std::numeric_limits<double>::infinity();
    const double v = sp.value_and_gradient(theta, g);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] *= s[j];
    return v;
  };

  SubSolverOptions inner = opts;
  inner.coordinate_cap = std::numeric_limits<double>::infinity();

  Vector warm_u;
  if (!warm_start.empty()) {
    if (warm_start.size() != p) throw std::invalid_argument("solve_scaled: warm start size");
    warm_u.resize(p);
    for (std::size_t j = 0; j < p; ++j) warm_u[j] = warm_start[j] / s[j];
  }

  auto result = solve(scaled_sp, inner, warm_u);
  result.theta = to_theta(result.theta);
  return result;
}

SubSolveResult solve_balanced(const SubProblem& sp, std::span<const double> image_norms,
                              const SubSolverOptions& opts, std::span<const double> warm_start,
                              bool polish) {
  if (image_norms.size() != sp.dim) throw std::invalid_argument("solve_balanced: size mismatch");
  Vector scale(sp.dim);
  for (std::size_t j = 0; j < sp.dim; ++j) {
    const double nrm = image_norms[j];
    scale[j] = nrm > 0.0 && std::isfinite(nrm) ? static_cast<double>(j + 1) / nrm : 1.0;
  }
  SubSolveResult r = solve_scaled(sp, scale, opts, warm_start);
  if (!polish) return r;
  SubSolveResult p = solve(sp, opts, r.theta);
  p.inner_iters += r.inner_iters;
  p.evaluations += r.evaluations;
  p.value_at_zero = r.value_at_zero;
  if (p.value <= r.value) return p;
  r.inner_iters = p.inner_iters;
  r.evaluations = p.evaluations;
  return r;
}

}  // namespace subsearch
