#include "subsearch/objective.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace subsearch {

Vector MarginSubspace::params_at(std::span<const double> theta) const {
  Vector out = w;
  for (std::size_t j = 0; j < dirs.size(); ++j) axpy(theta[j], dirs[j].params, out);
  return out;
}

Vector MarginSubspace::margins_at(std::span<const double> theta) const {
  Vector out = m;
  for (std::size_t j = 0; j < dirs.size(); ++j) axpy(theta[j], dirs[j].margins, out);
  return out;
}

LcpObjective::LcpObjective(Dataset data, LossKind loss, double l2_lambda)
    : data_(std::move(data)), loss_(loss), lambda_(l2_lambda) {
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("LcpObjective: lambda must be >= 0");
  if (loss == LossKind::logistic && data_.label_kind != LabelKind::binary)
    throw std::invalid_argument("LcpObjective: logistic loss needs binary labels");
}

namespace {

// log(1 + exp(z))
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// 1 / (1 + exp(-z))
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double LcpObjective::g_value(std::span<const double> m) const {
  const auto& y = data_.y;
  double acc = 0.0;
  if (loss_ == LossKind::logistic) {
    for (std::size_t i = 0; i < m.size(); ++i) acc += softplus(-y[i] * m[i]);
    return acc;
  }
  for (std::size_t i = 0; i < m.size(); ++i) acc += (m[i] - y[i]) * (m[i] - y[i]);
  return 0.5 * acc;
}

Vector LcpObjective::g_grad(std::span<const double> m) const {
  const auto& y = data_.y;
  Vector out(m.size());
  if (loss_ == LossKind::logistic) {
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = -y[i] * sigmoid(-y[i] * m[i]);
  } else {
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] - y[i];
  }
  return out;
}

double LcpObjective::f_value(std::span<const double> w) const {
  const Vector m = mat_vec(data_.X, w);
  return f_value_cached(w, m);
}

Vector LcpObjective::f_grad(std::span<const double> w) const {
  const Vector m = mat_vec(data_.X, w);
  return f_grad_cached(w, m);
}

double LcpObjective::f_value_cached(std::span<const double> w, std::span<const double> m) const {
  double f = g_value(m);
  if (lambda_ > 0.0) f += 0.5 * lambda_ * squared_norm(w);
  return f;
}

Vector LcpObjective::f_grad_cached(std::span<const double> w, std::span<const double> m) const {
  Vector grad = mat_t_vec(data_.X, g_grad(m));
  if (lambda_ > 0.0) axpy(lambda_, w, grad);
  return grad;
}

SubProblem LcpObjective::restrict_to(const MarginSubspace& subspace) const {
  const std::size_t p = subspace.dim();
  for (const auto& dir : subspace.dirs) {
    if (dir.params.size() != d() || dir.margins.size() != n())
      throw std::invalid_argument("restrict_to: direction has wrong dimensions");
  }

  // Regularizer along the subspace is a quadratic in theta: keep its Gram
  // pieces so that each evaluation is O(p^2) on top of the O(np) loss.
  struct Gram {
    double ww = 0.0;
    Vector wp;
    Vector pp;  // p x p row-major
  };
  auto gram = std::make_shared<Gram>();
  if (lambda_ > 0.0) {
    gram->ww = squared_norm(subspace.w);
    gram->wp.resize(p);
    gram->pp.resize(p * p);
    for (std::size_t i = 0; i < p; ++i) {
      gram->wp[i] = dot(subspace.w, subspace.dirs[i].params);
      for (std::size_t j = 0; j < p; ++j)
        gram->pp[i * p + j] = dot(subspace.dirs[i].params, subspace.dirs[j].params);
    }
  }

  const LcpObjective* self = this;
  const MarginSubspace* sub = &subspace;
  const double lambda = lambda_;

  auto reg_value = [gram, lambda, p](std::span<const double> theta) {
    if (lambda == 0.0) return 0.0;
    double q = gram->ww;
    for (std::size_t i = 0; i < p; ++i) {
      q += 2.0 * theta[i] * gram->wp[i];
      for (std::size_t j = 0; j < p; ++j) q += theta[i] * theta[j] * gram->pp[i * p + j];
    }
    return 0.5 * lambda * q;
  };

  SubProblem sp;
  sp.dim = p;
  sp.value = [self, sub, reg_value](std::span<const double> theta) {
    const Vector m = sub->margins_at(theta);
    return self->g_value(m) + reg_value(theta);
  };
  sp.value_and_gradient = [self, sub, reg_value, gram, lambda, p](std::span<const double> theta,
                                                                   std::span<double> grad) {
    const Vector m = sub->margins_at(theta);
    const Vector gg = self->g_grad(m);
    for (std::size_t j = 0; j < p; ++j) {
      grad[j] = dot(gg, sub->dirs[j].margins);
      if (lambda > 0.0) {
        double r = gram->wp[j];
        for (std::size_t i = 0; i < p; ++i) r += theta[i] * gram->pp[i * p + j];
        grad[j] += lambda * r;
      }
    }
    return self->g_value(m) + reg_value(theta);
  };
  return sp;
}

}  // namespace subsearch
