#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "subsearch/random.hpp"
#include "subsearch/subspace_solver.hpp"
#include "subsearch/trace.hpp"

namespace subsearch {

/// Lower-triangular Cholesky factor L with L L^T = A.
class Cholesky {
 public:
  /// Throws std::domain_error unless `a` is square, symmetric within 1e-12
  /// (relative to its largest entry) and positive definite.
  explicit Cholesky(const DenseMatrix& a);
  /// Empty optional instead of throwing.
  static std::optional<Cholesky> try_factor(const DenseMatrix& a);

  std::size_t dim() const noexcept { return L_.rows(); }
  const DenseMatrix& factor() const noexcept { return L_; }
  double logdet() const;
  /// A^{-1} b by two triangular solves.
  Vector solve(std::span<const double> b) const;
  /// L L^T + sigma x x^T in O(d^2). Returns false (leaving the factor
  /// unusable) when a downdate loses positive definiteness.
  bool rank_one_update(double sigma, std::span<const double> x);

 private:
  Cholesky() = default;
  DenseMatrix L_;
};

/// Gaussian negative log-likelihood in the precision matrix,
/// f(V) = Tr(SV) - log|V|.
struct SpdState {
  DenseMatrix S;
  DenseMatrix V;
  Cholesky chol;
  double logdet_V = 0.0;  // tracked
  Rng rng{1};             // start vectors of direction proposals
  std::uint64_t solves = 0;           // linear solves with V taken by steps
  std::uint64_t proposal_solves = 0;  // solves taken by direction proposals
  std::size_t iteration = 0;
  std::size_t since_refactor = 0;
};

/// Throws std::domain_error if V is not SPD or the shapes disagree.
SpdState make_spd_state(DenseMatrix S, DenseMatrix V, std::uint64_t seed = 1);

/// Tr(SV) - logdet_V with the tracked log-determinant.
double f_gauss(const SpdState& s);
/// From scratch; throws std::domain_error if V is not SPD.
double f_gauss(const DenseMatrix& S, const DenseMatrix& V);
/// S - V^{-1}; throws std::domain_error if V is not SPD.
DenseMatrix gauss_gradient(const DenseMatrix& S, const DenseMatrix& V);

struct RankOneFactor {
  double factor = 1.0;  // |V + alpha u u^T| / |V|
  Vector u_tilde;       // V^{-1} u
};

/// One linear solve. Throws std::domain_error if the solve is not finite.
RankOneFactor rank1_det_factor(SpdState& s, std::span<const double> u, double alpha);
/// |V + a1 u u^T + a2 v v^T| / |V| from two linear solves.
double rank2_det_factor(SpdState& s, std::span<const double> u, std::span<const double> v,
                        double a1, double a2);

struct LogDetOptions {
  SubSolverOptions sub;
  /// Recompute the factor and log-determinant from V this often (0: never).
  std::size_t refactor_every = 50;
};

/// Subspace step V <- V + sum_j theta_j d_j d_j^T over one or two directions.
/// Trials whose sequential determinant factors are not all positive are
/// rejected. Costs one linear solve per direction.
StepRecord step_rank_so(SpdState& s, const std::vector<Vector>& directions,
                        const LogDetOptions& opts = {});

/// One power-iteration step on S - V^{-1} from a random unit vector x (one
/// solve, metered as a proposal solve). Rank 2 adds x as second direction.
std::vector<Vector> propose_directions(SpdState& s, std::size_t rank);

enum class LogDetMethod { rank1_so, rank2_so };
std::string_view logdet_method_name(LogDetMethod m);
std::optional<LogDetMethod> parse_logdet_method(std::string_view name);
const std::vector<LogDetMethod>& all_logdet_methods();

/// |logdet_V - logdet(chol(V))| / (1 + |logdet(chol(V))|).
double audit_logdet(const SpdState& s);

struct LogDetRunOptions {
  std::size_t audit_every = 100;
  LogDetOptions step;
  std::function<void(std::size_t, const StepRecord&, const SpdState&)> on_step;
};

Trace run_logdet(SpdState& s, LogDetMethod method, std::size_t iters,
                 const LogDetRunOptions& opts = {});

}  // namespace subsearch
