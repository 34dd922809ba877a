#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "subsearch/dataset.hpp"
#include "subsearch/line_search.hpp"
#include "subsearch/subspace_solver.hpp"
#include "subsearch/trace.hpp"

namespace subsearch {

/// Single-output network f(W, v) = ||tanh(XW) v - y||^2 (+ regularizer).
struct NetParams {
  DenseMatrix W;  // d x r
  Vector v;       // r
};

/// Every entry drawn from N(0,1) / (r(d+1)).
NetParams init_params(std::size_t d, std::size_t r, std::uint64_t seed);

/// A direction in (W, v) space with its first-layer image X * P. An empty P
/// (0 x 0) means the direction leaves W alone; an empty q leaves v alone.
struct NetDirection {
  DenseMatrix P;
  DenseMatrix image;
  Vector q;
};

/// (W, v)(theta) = (W, v) + sum_j theta_j dir_j, with M(theta) = M + sum_j theta_j image_j.
struct NetSubspace {
  NetParams base;
  DenseMatrix M;
  std::vector<NetDirection> dirs;

  std::size_t dim() const noexcept { return dirs.size(); }
  NetParams params_at(std::span<const double> theta) const;
  DenseMatrix memory_at(std::span<const double> theta) const;
};

struct NetGradient {
  DenseMatrix W;
  Vector v;
};

class NetObjective {
 public:
  /// `data.y` holds real targets. lambda >= 0 adds (lambda/2)(||W||_F^2 + ||v||^2).
  NetObjective(Dataset data, double lambda = 0.0);

  const Dataset& data() const noexcept { return data_; }
  const CountedMatrix& X() const noexcept { return data_.X; }
  std::size_t n() const noexcept { return data_.n(); }
  std::size_t d() const noexcept { return data_.d(); }
  double lambda() const noexcept { return lambda_; }

  /// ||tanh(M) v - y||^2 plus the regularizer. No products.
  double value_cached(const NetParams& p, const DenseMatrix& M) const;
  /// One counted product (XW).
  double value(const NetParams& p) const;

  /// R with R_ij = grad_g_i (1 - tanh^2 M_ij) v_j, and the v-gradient
  /// tanh(M)^T grad_g, both without the regularizer.
  std::pair<DenseMatrix, Vector> backward(const NetParams& p, const DenseMatrix& M) const;
  /// Full gradient given M: one counted product (X^T R).
  NetGradient gradient_cached(const NetParams& p, const DenseMatrix& M) const;

  /// phi(theta) over the subspace with no counted products. The subspace
  /// must outlive the result.
  SubProblem restrict_to(const NetSubspace& sub) const;

  /// Norm of d(predictions)/d(theta_j) at theta = 0, for each direction.
  Vector prediction_sensitivity(const NetSubspace& sub) const;

 private:
  Dataset data_;
  double lambda_;
};

struct NetState {
  NetParams p;
  NetParams p_prev;
  DenseMatrix M;  // X * W, tracked
  DenseMatrix M_prev;
  double f = 0.0;

  std::optional<NetGradient> grad_prev;
  std::optional<NetDirection> dir_prev;  // conjugate-gradient direction
  // Per-layer conjugate-gradient directions.
  std::optional<NetDirection> dir1_prev;
  std::optional<NetDirection> dir2_prev;

  double alpha_prev = 1.0;
  LEstimate L;
  std::size_t iteration = 0;
};

/// M = XW is formed with an audit product.
NetState make_net_state(const NetObjective& obj, NetParams p);

enum class NetMethod {
  gd_1L,
  gd_wolfe,
  gd_lo,
  cg_wolfe,
  cg_lo,
  mg_so,
  gd_sb,
  cgm_sb,
  mg_so_sb,
};

struct NetStepOptions {
  SubSolverOptions sub;
  WolfeOptions wolfe;
  bool scale_subproblem = true;
  bool polish_unscaled = true;
  double history_tolerance = 1e-8;
  /// Starting point for the subspace solve in the method's full slot order:
  /// tied (alpha, beta), per-layer (alpha1, beta1, alpha2, beta2), the
  /// per-layer CG variant (alpha1, alpha2).
  Vector warm_start;
};

StepRecord step_net(const NetObjective& obj, NetState& s, NetMethod method,
                    const NetStepOptions& opts = {});

std::string_view net_method_name(NetMethod method);
std::optional<NetMethod> parse_net_method(std::string_view name);
const std::vector<NetMethod>& all_net_methods();
bool is_subspace_method(NetMethod method);

/// ||M - XW||_F / (1 + ||M||_F), one audit product.
double audit_memory(const NetObjective& obj, const NetState& s);

struct NetRunOptions {
  std::size_t audit_every = 100;
  NetStepOptions step;
  std::function<void(std::size_t, const StepRecord&, const NetState&)> on_step;
};

Trace run_net(const NetObjective& obj, NetMethod method, NetState& s, std::size_t iters,
              const NetRunOptions& opts = {});

}  // namespace subsearch
