#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "subsearch/matrix.hpp"

namespace subsearch {

struct WolfeOptions {
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  std::size_t max_evals = 50;
  double growth = 2.0;  // bracketing expansion factor

  void validate() const;
};

enum class SearchStatus {
  wolfe,        // both strong Wolfe conditions hold at alpha
  armijo_only,  // budget ran out; alpha is the best sufficient-decrease point seen
  failed,       // nothing acceptable found; alpha = 0
};

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  double value0 = 0.0;
  double slope0 = 0.0;
  std::size_t evals = 0;
  SearchStatus status = SearchStatus::failed;
};

/// phi(alpha) and phi'(alpha) along a line.
using LineFunction = std::function<std::pair<double, double>(double)>;

/// Strong Wolfe search: bracketing by repeated growth from alpha_init, then
/// zoom by bisection of the bracket. Throws std::invalid_argument unless
/// phi'(0) < 0.
LineSearchResult strong_wolfe(const LineFunction& phi, double alpha_init,
                              const WolfeOptions& opts = {});

bool satisfies_armijo(double value, double alpha, double value0, double slope0, double c1);
bool satisfies_strong_wolfe(double value, double slope, double alpha, double value0,
                            double slope0, const WolfeOptions& opts);

/// Curvature estimate for the 1/L rule. Starts at 1 and is carried across
/// iterations.
struct LEstimate {
  double L = 1.0;
};

struct BacktrackResult {
  double L = 1.0;
  double value = 0.0;
  std::size_t trials = 0;
  bool success = false;
};

/// Doubles L from `start` until f(w - g/L) <= f(w) - ||g||^2 / (2L).
/// `trial(L)` must return f(w - g/L). Fails once L exceeds 1e30.
BacktrackResult backtrack_half(const std::function<double(double)>& trial, double f0,
                               double grad_norm2, LEstimate start);

/// A smooth function on R^d for the generic accelerated step.
struct SmoothFunction {
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;
};

/// FISTA-style state: iterate x_k, extrapolation point y_k, t_k, and L.
struct NagState {
  Vector x;
  Vector y;
  double t = 1.0;
  LEstimate L;
};

inline double nag_next_t(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

/// One accelerated gradient step with backtracking on L (Beck-Teboulle).
/// Throws std::runtime_error when the backtracking fails.
NagState nag_backtrack_step(const SmoothFunction& fn, NagState state);

}  // namespace subsearch
