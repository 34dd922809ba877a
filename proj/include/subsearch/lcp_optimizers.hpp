#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "subsearch/line_search.hpp"
#include "subsearch/objective.hpp"
#include "subsearch/subspace_solver.hpp"
#include "subsearch/trace.hpp"

namespace subsearch {

/// L-BFGS pair history, most recent last.
struct LbfgsMemory {
  std::size_t capacity = 10;
  std::deque<Vector> s;
  std::deque<Vector> y;

  /// Stores (s, y) unless s^T y <= 0. Returns whether the pair was kept.
  bool push(Vector s_new, Vector y_new);
  std::size_t size() const noexcept { return s.size(); }
};

/// B * grad by the two-loop recursion with H0 = (s^T y / y^T y) I taken
/// from the newest pair. With no pairs the gradient itself is returned.
Vector lbfgs_direction(const LbfgsMemory& memory, std::span<const double> grad);

struct AdamOptions {
  double beta1 = 0.99;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double step = 1e-3;  // fixed learning rate of the plain variant
};

struct AdamAccumulators {
  Vector mu;
  Vector v;
};

/// Updates the accumulators with `grad` and returns mu / (sqrt(v) + eps).
/// No bias correction.
Vector adam_direction(AdamAccumulators& acc, std::span<const double> grad,
                      const AdamOptions& opts = {});

/// Optimizer state for an LCP. `m` tracks X*w; nothing here is ever
/// recomputed from scratch during a run.
struct MarginState {
  Vector w;
  Vector m;
  Vector w_prev;  // iterate before the last step (equal to w at the start)
  Vector m_prev;
  double f = 0.0;

  Vector grad_prev;        // gradient at w_prev, empty before the first step
  Vector grad_image_prev;  // X * grad_prev when the last step computed it
  Vector dir_prev;         // previous search direction (CG, Adam2)
  Vector dir_image_prev;   // X * dir_prev

  double alpha_prev = 1.0;  // magnitude of the last accepted line-search step
  LEstimate L;
  LbfgsMemory lbfgs;
  AdamAccumulators adam;

  // Accelerated 1/L variant: extrapolation point, its margins, and t.
  Vector nag_y;
  Vector nag_my;
  double nag_t = 1.0;

  std::size_t iteration = 0;
};

/// Builds the starting state at w0. The one product needed for X*w0 goes to
/// the audit counter so that budgets start from zero.
MarginState make_state(const LcpObjective& obj, Vector w0);

enum class PrFormula {
  classical,     // ||grad_{k-1}||^2 denominator, momentum along the previous direction
  as_displayed,  // ||grad_k||^2 denominator, momentum along w_k - w_{k-1}
};

enum class SearchMode { wolfe, lo };
enum class QnMode { wolfe, lo, momentum_so };
enum class AdamMode { fixed, wolfe, lo, two_dir_so };

struct StepOptions {
  SubSolverOptions sub;
  WolfeOptions wolfe;
  AdamOptions adam;
  PrFormula pr = PrFormula::classical;
  /// Solve first in coordinates where direction j has curvature about (j+1)^2,
  /// so step sizes of very different magnitude become comparable.
  bool scale_subproblem = true;
  /// After a scaled solve, continue in plain theta coordinates from its
  /// result. The scaled solve alone can stall short of the exact minimizer.
  bool polish_unscaled = true;
  /// A direction built as a difference of stored vectors (a - a_prev) is
  /// dropped when ||a - a_prev|| <= history_tolerance * max(||a||, ||a_prev||).
  /// Below that its image is mostly rounding error, and the subspace solve
  /// would exploit the error with an enormous coefficient.
  double history_tolerance = 1e-8;
  /// Optional starting point for the subspace solve, indexed by the method's
  /// full step-size vector (alpha, beta, gamma, delta-hat in that order).
  /// Entries for directions that are absent this step are dropped.
  Vector warm_start;
};

StepRecord step_gd_fixedL(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_gd_lo(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_gd_wolfe(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_cg_prp(const LcpObjective& obj, MarginState& s, SearchMode mode,
                       const StepOptions& opts = {});
StepRecord step_memory_gradient(const LcpObjective& obj, MarginState& s,
                                const StepOptions& opts = {});
StepRecord step_nag_fixedL(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_nag_so(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_snag_so(const LcpObjective& obj, MarginState& s, const StepOptions& opts = {});
StepRecord step_qn(const LcpObjective& obj, MarginState& s, QnMode mode,
                   const StepOptions& opts = {});
StepRecord step_adam(const LcpObjective& obj, MarginState& s, AdamMode mode,
                     const StepOptions& opts = {});

enum class LcpMethod {
  gd_1L,
  gd_ls,
  gd_lo,
  cg_ls,
  cg_lo,
  mg_so,
  nag_1L,
  nag_so,
  snag_so,
  qn_ls,
  qn_lo,
  qn_mom_so,
  adam,
  adam_ls,
  adam_lo,
  adam2_so,
};

std::string_view method_name(LcpMethod method);
std::optional<LcpMethod> parse_lcp_method(std::string_view name);
const std::vector<LcpMethod>& all_lcp_methods();
/// True for methods whose step size comes from a subspace solve.
bool is_subspace_method(LcpMethod method);

StepRecord step(const LcpObjective& obj, MarginState& s, LcpMethod method,
                const StepOptions& opts = {});

struct RunOptions {
  std::size_t audit_every = 100;
  StepOptions step;
  /// Called after every step with the 1-based iteration index.
  std::function<void(std::size_t, const StepRecord&, const MarginState&)> on_step;
};

/// Relative tracking error ||m - Xw|| / (1 + ||m||), one audit product.
double audit_margins(const LcpObjective& obj, const MarginState& s);

/// Applies `iters` steps. Audits the tracked margins every `audit_every`
/// iterations and after the last one; audit products never reach the
/// budget counter. A step that throws is rethrown as std::runtime_error
/// naming the iteration.
Trace run(const LcpObjective& obj, LcpMethod method, MarginState& s, std::size_t iters,
          const RunOptions& opts = {});

}  // namespace subsearch
