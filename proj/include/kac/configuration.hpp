#pragma once

// N velocities of R^d stored row-major, with the centering / unit-energy
// constraint <v>_N = 0, <|v|^2>_N = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kac/errors.hpp"
#include "kac/geometry.hpp"
#include "kac/rng.hpp"

namespace kac {

using Permutation = std::vector<std::size_t>;

class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0) {}
  Configuration(std::size_t n, std::size_t d, std::vector<double> data)
      : n_(n), d_(d), data_(std::move(data)) {
    if (data_.size() != n_ * d_) throw BadParams("Configuration: data size must equal N*d");
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }

  std::span<double> operator[](std::size_t i) noexcept { return {data_.data() + i * d_, d_}; }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {data_.data() + i * d_, d_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Configuration&) const = default;

  /// <v>_N
  VecD mean() const {
    VecD m(d_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) axpy(1.0, (*this)[i], m);
    for (double& x : m) x /= static_cast<double>(n_);
    return m;
  }

  /// <|v|^k>_N for even or odd k.
  double radial_moment(double k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double r2 = norm_sq((*this)[i]);
      s += (k == 2.0) ? r2 : (k == 4.0) ? r2 * r2 : std::pow(r2, 0.5 * k);
    }
    return s / static_cast<double>(n_);
  }

  double m2() const { return radial_moment(2.0); }
  double m4() const { return radial_moment(4.0); }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

/// Max deviation from the constraints: max(|<v>_N|_inf, |<|v|^2>_N - 1|).
inline double constraint_error(const Configuration& c) {
  double err = std::abs(c.m2() - 1.0);
  for (double x : c.mean()) err = std::max(err, std::abs(x));
  return err;
}

/// Subtract the particle mean and divide by the root mean square norm.
inline Configuration project_to_constraint_sphere(Configuration raw) {
  const std::size_t n = raw.size();
  if (n < 2 || raw.dim() == 0) throw BadParams("project_to_constraint_sphere: need N >= 2, d >= 1");
  const double raw_scale = raw.m2();
  const VecD m = raw.mean();
  for (std::size_t i = 0; i < n; ++i) axpy(-1.0, m, raw[i]);
  const double e = raw.m2();
  if (!(e > 1e-24 * raw_scale) || !(e > 0.0))
    throw DegenerateInput("all velocities coincide: zero variance after centering");
  const double s = 1.0 / std::sqrt(e);
  for (double& x : raw.data()) x *= s;
  return raw;
}

/// Uniform draw on the constraint sphere S^{Nd-d-1}: centred and rescaled
/// Gaussian sample.
inline Configuration sample_equilibrium(std::size_t n, std::size_t d, Rng& rng) {
  if (n < 2) throw BadParams("sample_equilibrium: N >= 2 required");
  for (;;) {
    Configuration c(n, d);
    fill_standard_normal(c.data(), rng);
    try {
      return project_to_constraint_sphere(std::move(c));
    } catch (const DegenerateInput&) {
    }
  }
}

/// (v o sigma)_i = v_{sigma(i)}
inline Configuration permuted(const Configuration& v, const Permutation& sigma) {
  Configuration out(v.size(), v.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto src = v[sigma[i]];
    std::copy(src.begin(), src.end(), out[i].begin());
  }
  return out;
}

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

/// <|u - v o sigma|^2>_N
inline double mean_sq_distance(const Configuration& u, const Configuration& v,
                               const Permutation& sigma) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += distance_sq(u[i], v[sigma[i]]);
  return s / static_cast<double>(u.size());
}

inline double mean_sq_distance(const Configuration& u, const Configuration& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += distance_sq(u[i], v[i]);
  return s / static_cast<double>(u.size());
}

/// <u . v o sigma>_N
inline double mean_correlation(const Configuration& u, const Configuration& v,
                               const Permutation& sigma) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += dot(u[i], v[sigma[i]]);
  return s / static_cast<double>(u.size());
}

}  // namespace kac
