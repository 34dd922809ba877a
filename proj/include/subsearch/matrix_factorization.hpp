#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "subsearch/subspace_solver.hpp"
#include "subsearch/trace.hpp"

namespace subsearch {

/// Products of size O(ndr) taken by the factorization steps. Separate from
/// the data-matrix counter because the bottleneck here is forming U W^T and
/// multiplying the gradient by a factor.
class MfProductCounter {
 public:
  std::uint64_t count() const noexcept { return count_; }
  void reset() noexcept { count_ = 0; }

  DenseMatrix mul(const DenseMatrix& a, const DenseMatrix& b);     // A B
  DenseMatrix mul_nt(const DenseMatrix& a, const DenseMatrix& b);  // A B^T
  DenseMatrix mul_tn(const DenseMatrix& a, const DenseMatrix& b);  // A^T B

 private:
  std::uint64_t count_ = 0;
};

/// 0.5 ||M - X||_F^2 and its gradient M - X.
double pca_value(const DenseMatrix& M, const DenseMatrix& X);
DenseMatrix pca_grad(const DenseMatrix& M, const DenseMatrix& X);

/// Gradients of f(U, W) = 0.5 ||U W^T - X||_F^2, computed from scratch.
std::pair<DenseMatrix, DenseMatrix> mf_gradient(const DenseMatrix& U, const DenseMatrix& W,
                                                const DenseMatrix& X);

enum class MfFactor { none, U, W };

struct MfState {
  DenseMatrix U;  // n x r
  DenseMatrix W;  // d x r
  DenseMatrix M;  // U W^T, tracked
  DenseMatrix U_prev;
  DenseMatrix W_prev;
  DenseMatrix M_prev;
  double f = 0.0;
  MfFactor last = MfFactor::none;  // factor moved by the last alternating step
  std::array<double, 4> steps_prev{};  // (alpha1, alpha2, beta1, beta2) last accepted
  /// Estimated gap between the tracking errors in M and M_prev, relative to
  /// ||M||. Exact steps keep their predicted drift below 1e-12.
  double drift = 0.0;
  std::size_t iteration = 0;
};

/// Entries N(0,1)/sqrt(r).
std::pair<DenseMatrix, DenseMatrix> init_factors(std::size_t n, std::size_t d, std::size_t r,
                                                 std::uint64_t seed);

/// Builds the state; M = U W^T is formed outside the counter.
MfState make_mf_state(const DenseMatrix& X, DenseMatrix U, DenseMatrix W);

/// M(theta) for theta = (alpha1, alpha2, beta1, beta2) when
///   U' = U + beta1 dU - alpha1 G W
///   W' = W + beta2 dW - alpha2 G^T U,   G = M - X, dU = U - U_prev, dW = W - W_prev,
/// written as sum_t c_t(theta) T_t over the cached terms
///   M, GWW^T, UU^TG, GWU^TG, M - M_prev, dU W^T, U dW^T, dU U^T G, GW dW^T.
/// Only M and M_prev are tracked; the product dU dW^T is recovered as
/// dU W^T + U dW^T - (M - M_prev).
struct MfExpansion {
  std::array<DenseMatrix, 9> terms;
  std::array<bool, 9> present{};
  DenseMatrix grad_U;  // G W
  DenseMatrix grad_W;  // G^T U

  static std::array<double, 9> coefficients(const std::array<double, 4>& theta);
  /// d c_t / d theta_j, indexed [j][t].
  static std::array<std::array<double, 9>, 4> coefficient_partials(
      const std::array<double, 4>& theta);

  DenseMatrix memory_at(const std::array<double, 4>& theta) const;
};

enum class MfScheme {
  altmin,            // one factor per step, (alpha, beta): 2 products
  simultaneous,      // (alpha1, alpha2): 5 products
  momentum_one,      // (alpha1, alpha2, beta on U): 7 products
  momentum_both,     // (alpha1, alpha2, beta1, beta2): 9 products
  momentum_inexact,  // best of a candidate list: 2 + |candidates| products
};

/// Builds the expansion for `scheme` (simultaneous, momentum_one or
/// momentum_both), counting each product it forms.
MfExpansion build_expansion(const MfState& s, const DenseMatrix& X, MfScheme scheme,
                            MfProductCounter& counter);

struct MfOptions {
  SubSolverOptions sub;
  /// Alternating schedule: this many consecutive steps on U, then on W.
  std::size_t altmin_block = 10;
  /// Momentum images M - M_prev below this relative size are dropped.
  double history_tolerance = 1e-8;
  /// Candidate lists for the inexact scheme; defaults to propose_candidates.
  std::function<std::vector<std::array<double, 4>>(const MfState&)> candidates;
};

/// Zero, the last accepted step sizes (or a curvature guess on the first
/// step) and coordinate-wise perturbations of them.
std::vector<std::array<double, 4>> propose_candidates(const MfState& s);

/// LO/SO over (alpha, beta) for one factor with the other fixed. Momentum is
/// used only when the previous step moved the same factor; after a switch
/// the anchor is the factor's current value.
StepRecord step_altmin_so(MfState& s, const DenseMatrix& X, MfFactor which,
                          MfProductCounter& counter, const MfOptions& opts = {});
StepRecord step_simul_so2(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                          const MfOptions& opts = {});
StepRecord step_momentum_one(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                             const MfOptions& opts = {});
StepRecord step_momentum_both_exact(MfState& s, const DenseMatrix& X, MfProductCounter& counter,
                                    const MfOptions& opts = {});
/// Throws std::invalid_argument unless the list contains (0, 0, 0, 0).
StepRecord step_momentum_both_inexact(MfState& s, const DenseMatrix& X,
                                      const std::vector<std::array<double, 4>>& candidates,
                                      MfProductCounter& counter);

std::string_view mf_scheme_name(MfScheme scheme);
std::optional<MfScheme> parse_mf_scheme(std::string_view name);
const std::vector<MfScheme>& all_mf_schemes();

/// One step of `scheme`. Alternating steps pick the factor from the block
/// schedule by iteration count.
StepRecord step_mf(MfState& s, const DenseMatrix& X, MfScheme scheme, MfProductCounter& counter,
                   const MfOptions& opts = {});

/// ||M - U W^T||_F / (1 + ||M||_F), computed outside the counter.
double audit_factorization(const MfState& s);

struct MfRunOptions {
  std::size_t audit_every = 100;
  MfOptions step;
  std::function<void(std::size_t, const StepRecord&, const MfState&)> on_step;
};

Trace run_mf(const DenseMatrix& X, MfScheme scheme, MfState& s, std::size_t iters,
             const MfRunOptions& opts = {});

}  // namespace subsearch
