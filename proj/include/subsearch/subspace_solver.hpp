#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "subsearch/matrix.hpp"

namespace subsearch {

/// A p-dimensional restriction phi(theta) of an objective. `value` may return
/// a non-finite number (for example outside a feasible region); the solver
/// treats that as a rejected trial. `value_and_gradient` writes the gradient
/// into its second argument and returns phi.
struct SubProblem {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::span<double>)> value_and_gradient;
};

struct SubSolverOptions {
  std::size_t max_iters = 100;
  std::size_t memory = 10;         // non-monotone reference window
  double armijo = 1e-4;
  double grad_tol = 1e-10;
  double min_step = 1e-10;         // BB step safeguard interval
  double max_step = 1e10;
  double coordinate_cap = 1e8;     // |theta_i| beyond this is rejected
  std::size_t max_backtracks = 60;
  /// Stop after this many iterations that neither lower the best value
  /// beyond rounding nor shrink the gradient norm by 10% (0: never).
  std::size_t stall_window = 10;
  /// When nonzero, the inner budget at outer iteration k is
  /// min(max_iters, max(1, outer_iteration_multiple * k)). Off by default.
  std::size_t outer_iteration_multiple = 0;

  std::size_t budget_for(std::size_t outer_iteration) const;
};

struct SubSolveResult {
  Vector theta;
  double value = 0.0;
  double value_at_zero = 0.0;
  std::size_t inner_iters = 0;
  std::size_t evaluations = 0;
};

/// Barzilai-Borwein (BB1) gradient iterations with a Grippo-Lampariello-Lucidi
/// non-monotone Armijo test, started at theta = 0 (or at `warm_start`).
///
/// Returns the best point seen. phi(0) is always evaluated and competes, so
/// the result satisfies value <= phi(0) unconditionally.
SubSolveResult solve(const SubProblem& sp, const SubSolverOptions& opts = {},
                     std::span<const double> warm_start = {});

/// Solves in the rescaled coordinates u = theta / scale and maps back. Used
/// by the optimizers with scale_j = 1/||direction image j|| so that all step
/// sizes live on comparable scales; theta = 0 maps to u = 0.
SubSolveResult solve_scaled(const SubProblem& sp, std::span<const double> scale,
                            const SubSolverOptions& opts = {},
                            std::span<const double> warm_start = {});

/// Scaled solve followed by an unscaled continuation from its result.
/// `image_norms[j]` is the size of direction j's effect (for example the norm
/// of its margin image); direction j gets curvature about (j+1)^2 in the
/// scaled coordinates. Distinct values keep BB from collapsing into exact
/// coordinate descent. Zero norms leave the coordinate unscaled.
SubSolveResult solve_balanced(const SubProblem& sp, std::span<const double> image_norms,
                              const SubSolverOptions& opts = {},
                              std::span<const double> warm_start = {}, bool polish = true);

}  // namespace subsearch
