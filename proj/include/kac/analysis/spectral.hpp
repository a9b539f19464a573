#pragma once

// Small dense d x d matrices, cyclic Jacobi eigenvalues and the spectral
// quantity kappa_S = (1 - lambda_max(S))^{-1}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kac/configuration.hpp"
#include "kac/errors.hpp"

namespace kac {

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t d) : d_(d), a_(d * d, 0.0) {}

  static Matrix identity(std::size_t d, double scale = 1.0) {
    Matrix m(d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = scale;
    return m;
  }

  static Matrix diagonal(const std::vector<double>& diag) {
    Matrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  /// x x^T
  static Matrix outer(std::span<const double> x) {
    Matrix m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) m(i, j) = x[i] * x[j];
    return m;
  }

  std::size_t dim() const noexcept { return d_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * d_ + j]; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < d_; ++i) t += (*this)(i, i);
    return t;
  }

  Matrix transpose() const {
    Matrix t(d_);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  bool is_symmetric(double tol = 1e-12) const {
    const double scale = std::max(1.0, max_abs());
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = i + 1; j < d_; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    const std::size_t d = a.d_;
    Matrix c(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const double aik = a(i, k);
        for (std::size_t j = 0; j < d; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

 private:
  std::size_t d_ = 0;
  std::vector<double> a_;
};

using SymmetricMatrix = Matrix;

/// Tr(A B) without forming the product.
inline double trace_of_product(const Matrix& a, const Matrix& b) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t k = 0; k < a.dim(); ++k) t += a(i, k) * b(k, i);
  return t;
}

/// All eigenvalues of a symmetric matrix (ascending), cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(const Matrix& s) {
  if (!s.is_symmetric(1e-10)) throw BadParams("symmetric_eigenvalues: matrix is not symmetric");
  const std::size_t d = s.dim();
  Matrix a = s;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-34 * std::max(diag, std::numeric_limits<double>::min())) break;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), sn = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  std::vector<double> ev(d);
  for (std::size_t i = 0; i < d; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double max_eigenvalue(const Matrix& s) { return symmetric_eigenvalues(s).back(); }

/// Threshold on lambda_max / Tr above which S counts as rank-1.
inline constexpr double kRankOneThreshold = 1e-12;

/// kappa_S = (1 - lambda_max(S)/Tr S)^{-1} in [d/(d-1), +inf]; +inf for rank-1 S.
inline double kappa(const Matrix& s) {
  const double tr = s.trace();
  if (!(tr > 0.0)) throw BadParams("kappa: matrix must have positive trace");
  const double r = max_eigenvalue(s) / tr;
  if (r >= 1.0 - kRankOneThreshold) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - r);
}

/// <v (x) v>_N
inline Matrix second_moment(const Configuration& c) {
  const std::size_t d = c.dim();
  Matrix m(d);
  for (std::size_t n = 0; n < c.size(); ++n) {
    auto v = c[n];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) m(i, j) += v[i] * v[j];
  }
  const double inv = 1.0 / static_cast<double>(c.size());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) m(j, i) = (m(i, j) *= inv);
  return m;
}

/// <u (x) v>_N for aligned configurations.
inline Matrix cross_moment(const Configuration& u, const Configuration& v) {
  const std::size_t d = u.dim();
  Matrix m(d);
  for (std::size_t n = 0; n < u.size(); ++n)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) += u[n][i] * v[n][j];
  m *= 1.0 / static_cast<double>(u.size());
  return m;
}

}  // namespace kac
