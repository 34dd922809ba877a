#pragma once

#include <span>
#include <vector>

#include "subsearch/dataset.hpp"
#include "subsearch/subspace_solver.hpp"

namespace subsearch {

enum class LossKind { logistic, least_squares };

/// A parameter-space direction paired with its image X * direction.
struct SearchDirection {
  Vector params;
  Vector margins;
};

/// The affine family w(theta) = w + sum_j theta_j p_j. Because the margins are
/// affine too, m(theta) = m + sum_j theta_j X p_j is available without
/// touching X once the images are cached.
struct MarginSubspace {
  Vector w;
  Vector m;
  std::vector<SearchDirection> dirs;

  std::size_t dim() const noexcept { return dirs.size(); }
  Vector params_at(std::span<const double> theta) const;
  Vector margins_at(std::span<const double> theta) const;
};

/// f(w) = g(Xw) + (lambda/2)||w||^2 with g the logistic or least-squares loss.
class LcpObjective {
 public:
  LcpObjective(Dataset data, LossKind loss, double l2_lambda = 0.0);

  const Dataset& data() const noexcept { return data_; }
  const CountedMatrix& X() const noexcept { return data_.X; }
  LossKind loss() const noexcept { return loss_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t n() const noexcept { return data_.n(); }
  std::size_t d() const noexcept { return data_.d(); }

  /// Logistic: sum log(1 + exp(-y_i m_i)), evaluated without overflow.
  /// Least squares: 0.5 ||m - y||^2.
  double g_value(std::span<const double> m) const;
  Vector g_grad(std::span<const double> m) const;

  /// One counted product (Xw).
  double f_value(std::span<const double> w) const;
  /// Two counted products.
  Vector f_grad(std::span<const double> w) const;
  /// Zero counted products given m = Xw.
  double f_value_cached(std::span<const double> w, std::span<const double> m) const;
  /// One counted product (X^T grad g(m)).
  Vector f_grad_cached(std::span<const double> w, std::span<const double> m) const;

  /// phi(theta) = f(w(theta)) over the subspace, evaluated from cached
  /// margins in O(n p) with no products. The subspace must outlive the
  /// returned SubProblem.
  SubProblem restrict_to(const MarginSubspace& subspace) const;

 private:
  Dataset data_;
  LossKind loss_;
  double lambda_;
};

/// The "regularized" preset, lambda = 1/n.
inline double regularized_lambda(std::size_t n) { return 1.0 / static_cast<double>(n); }

}  // namespace subsearch
