#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "subsearch/dataset.hpp"
#include "subsearch/matrix.hpp"
#include "subsearch/random.hpp"

namespace support {

using subsearch::CountedMatrix;
using subsearch::Dataset;
using subsearch::DenseMatrix;
using subsearch::LabelKind;
using subsearch::Rng;
using subsearch::Vector;

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

inline Vector from_eigen_vec(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

inline DenseMatrix random_dense(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  DenseMatrix m(r, c);
  for (double& x : m.values()) x = scale * rng.normal();
  return m;
}

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

/// Symmetric positive definite with eigenvalues spread over [1, cond].
inline Eigen::MatrixXd random_spd(std::size_t d, Rng& rng, double cond = 10.0) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(d);
  for (std::size_t i = 0; i < d; ++i)
    ev[i] = d == 1 ? 1.0 : std::pow(cond, static_cast<double>(i) / static_cast<double>(d - 1));
  return q * ev.asDiagonal() * q.transpose();
}

inline Vector fd_gradient(const std::function<double(std::span<const double>)>& f, Vector x,
                          double h = 1e-6) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/// ||a - b|| / max(||b||, floor).
inline double rel_err(std::span<const double> a, std::span<const double> b, double floor = 1e-12) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

/// Least-squares instance whose Gram matrix X^T X has condition number `cond`.
inline Dataset conditioned_lsq(std::size_t n, std::size_t d, double cond, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd G = to_eigen(random_dense(n, d, rng));
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd U = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  const Eigen::MatrixXd V = random_spd(d, rng, 2.0).householderQr().householderQ();
  Eigen::VectorXd sv(d);
  for (std::size_t i = 0; i < d; ++i)
    sv[i] = std::pow(std::sqrt(cond), static_cast<double>(i) / static_cast<double>(d - 1));
  const Eigen::MatrixXd X = U * sv.asDiagonal() * V.transpose();
  return subsearch::make_dataset(CountedMatrix(from_eigen(X)), random_vector(n, rng),
                      LabelKind::real);
}

/// Textbook linear CG on X^T X w = X^T y from w = 0.
inline std::vector<Eigen::VectorXd> linear_cg(const Dataset& ds, std::size_t iters) {
  const Eigen::MatrixXd X = to_eigen(ds.X.to_dense());
  const Eigen::MatrixXd A = X.transpose() * X;
  const Eigen::VectorXd b = X.transpose() * to_eigen(ds.y);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd r = b - A * w, p = r;
  std::vector<Eigen::VectorXd> out;
  for (std::size_t k = 0; k < iters; ++k) {
    const double rr = r.dot(r);
    const double a = rr / p.dot(A * p);
    w += a * p;
    r -= a * (A * p);
    p = r + (r.dot(r) / rr) * p;
    out.push_back(w);
  }
  return out;
}

}  // namespace support
