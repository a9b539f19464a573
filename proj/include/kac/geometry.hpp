#pragma once

// Vector primitives, the elastic collision mapping, azimuthal sampling of
// post-collisional directions and the parallel spherical coupling of two
// collisions sharing a scattering angle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kac/errors.hpp"
#include "kac/rng.hpp"

namespace kac {

using VecD = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline double distance_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

/// Unit vector of R^d. Re-normalized on every construction.
class UnitVecD {
 public:
  explicit UnitVecD(VecD v) : v_(std::move(v)) {
    const double n = norm(v_);
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateInput("cannot normalize a zero vector");
    for (double& x : v_) x /= n;
  }

  /// e_k in dimension d.
  static UnitVecD basis(std::size_t d, std::size_t k) {
    VecD v(d, 0.0);
    v[k] = 1.0;
    return UnitVecD(std::move(v));
  }

  std::size_t dim() const noexcept { return v_.size(); }
  double operator[](std::size_t k) const noexcept { return v_[k]; }
  const VecD& vec() const noexcept { return v_; }
  std::span<const double> span() const noexcept { return v_; }
  operator std::span<const double>() const noexcept { return v_; }

  UnitVecD operator-() const {
    VecD w = v_;
    for (double& x : w) x = -x;
    return UnitVecD(std::move(w));
  }

 private:
  VecD v_;
};

/// (a - b)/|a - b|, or nullopt when a == b.
inline std::optional<UnitVecD> direction_between(std::span<const double> a,
                                                 std::span<const double> b) {
  VecD w(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) w[k] = a[k] - b[k];
  if (norm_sq(w) == 0.0) return std::nullopt;
  return UnitVecD(std::move(w));
}

/// Spherical coordinates n' = cos(theta) n + sin(theta) cos(phi) m + sin(theta) sin(phi) l
/// around the orthonormal triplet (n, m, l).
struct CollisionFrame {
  UnitVecD n;
  UnitVecD m;
  UnitVecD l;
  double theta = 0.0;
  double phi = 0.0;
};

/// Elastic collision: v' = s + h n', v'_* = s - h n' with s the pair mean and
/// h half the relative speed.
inline std::pair<VecD, VecD> post_collision_velocities(std::span<const double> v,
                                                       std::span<const double> v_star,
                                                       const UnitVecD& n_prime) {
  const std::size_t d = v.size();
  const double h = 0.5 * std::sqrt(distance_sq(v, v_star));
  VecD vp(d), vsp(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = 0.5 * (v[k] + v_star[k]);
    vp[k] = s + h * n_prime[k];
    vsp[k] = s - h * n_prime[k];
  }
  return {std::move(vp), std::move(vsp)};
}

/// In-place variant of post_collision_velocities used by the event loops.
inline void collide_in_place(std::span<double> v, std::span<double> v_star,
                             std::span<const double> n_prime) {
  const double h = 0.5 * std::sqrt(distance_sq(v, v_star));
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double s = 0.5 * (v[k] + v_star[k]);
    v[k] = s + h * n_prime[k];
    v_star[k] = s - h * n_prime[k];
  }
}

inline UnitVecD build_direction(const CollisionFrame& f) {
  const double ct = std::cos(f.theta), st = std::sin(f.theta);
  const double cp = std::cos(f.phi), sp = std::sin(f.phi);
  VecD out(f.n.dim());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = ct * f.n[k] + st * cp * f.m[k] + st * sp * f.l[k];
  return UnitVecD(std::move(out));
}

/// Deterministic unit vector orthogonal to n: Gram-Schmidt on the basis vector
/// least aligned with n.
inline UnitVecD any_orthogonal(const UnitVecD& n) {
  const std::size_t d = n.dim();
  std::size_t best = 0;
  for (std::size_t k = 1; k < d; ++k)
    if (std::abs(n[k]) < std::abs(n[best])) best = k;
  VecD m(d, 0.0);
  m[best] = 1.0;
  axpy(-n[best], n.span(), m);
  return UnitVecD(std::move(m));
}

/// Uniform unit vector of the orthogonal complement of the orthonormal family
/// `basis`. Requires basis.size() < d.
inline UnitVecD sample_orthogonal_unit(std::size_t d, std::span<const UnitVecD* const> basis,
                                       Rng& rng) {
  VecD g(d);
  for (;;) {
    fill_standard_normal(g, rng);
    for (int pass = 0; pass < 2; ++pass)
      for (const UnitVecD* e : basis) axpy(-dot(g, e->span()), e->span(), g);
    if (norm_sq(g) > 1e-24) return UnitVecD(std::move(g));
  }
}

/// Uniform unit vector of R^d.
inline UnitVecD sample_unit(std::size_t d, Rng& rng) {
  return sample_orthogonal_unit(d, {}, rng);
}

/// Azimuth phi in [0, pi] with density proportional to sin^{d-3}(phi):
/// cos(phi) = 1 - 2B, B ~ Beta((d-2)/2, (d-2)/2).
struct Azimuth {
  double cos_phi;
  double sin_phi;
  double phi() const { return std::atan2(sin_phi, cos_phi); }
};

inline Azimuth sample_azimuth(std::size_t d, Rng& rng) {
  const double a = 0.5 * (static_cast<double>(d) - 2.0);
  const double b = sample_beta(a, a, rng);
  const double c = std::clamp(1.0 - 2.0 * b, -1.0, 1.0);
  // sin(phi) = 2 sqrt(B(1-B)) avoids cancellation near the poles.
  const double s = 2.0 * std::sqrt(std::max(0.0, b * (1.0 - b)));
  return {c, s};
}

struct DirectionSample {
  UnitVecD n_prime;
  UnitVecD m;
  UnitVecD l;
  double phi;
};

/// Draw n' from the uniform law on {n' : n'.n = cos(theta)}.
inline DirectionSample sample_post_direction(const UnitVecD& n, double theta, Rng& rng) {
  const std::size_t d = n.dim();
  if (d < 3) throw BadParams("sample_post_direction requires d >= 3");
  UnitVecD m = any_orthogonal(n);
  const UnitVecD* basis[] = {&n, &m};
  UnitVecD l = sample_orthogonal_unit(d, basis, rng);
  const Azimuth az = sample_azimuth(d, rng);
  const double ct = std::cos(theta), st = std::sin(theta);
  VecD out(d);
  for (std::size_t k = 0; k < d; ++k)
    out[k] = ct * n[k] + st * az.cos_phi * m[k] + st * az.sin_phi * l[k];
  return {UnitVecD(std::move(out)), std::move(m), std::move(l), az.phi()};
}

/// Rank-2 rotation: acts by `angle` in the plane spanned by the orthonormal
/// pair (e1, e2) and as the identity on its complement.
struct RotationDescriptor {
  VecD e1;
  VecD e2;
  double angle = 0.0;

  bool is_identity() const noexcept { return angle == 0.0 || e1.empty(); }

  VecD apply(std::span<const double> x) const {
    VecD out(x.begin(), x.end());
    if (is_identity()) return out;
    const double x1 = dot(x, e1), x2 = dot(x, e2);
    const double c = std::cos(angle), s = std::sin(angle);
    const double y1 = c * x1 - s * x2;
    const double y2 = s * x1 + c * x2;
    axpy(y1 - x1, e1, out);
    axpy(y2 - x2, e2, out);
    return out;
  }

  RotationDescriptor inverse() const { return {e1, e2, -angle}; }
};

/// Orthogonal residual below which two unit directions are treated as
/// parallel or antipodal (the rotation plane is then undefined).
inline constexpr double kAntipodalResidual = 1e-14;

namespace detail {

/// Plane basis (e1 = n_u, e2) and angle of the elementary rotation taking n_u
/// to n_v. `sigma` selects the plane when n_v = -n_u.
struct TransportPlane {
  VecD e1;
  VecD e2;
  double cos_a = 1.0;
  double sin_a = 0.0;
  bool identity = false;
  bool antipodal = false;
};

inline VecD orthonormalize_against(std::span<const double> x, std::span<const double> e1) {
  VecD w(x.begin(), x.end());
  axpy(-dot(w, e1), e1, w);
  axpy(-dot(w, e1), e1, w);
  const double n = norm(w);
  for (double& t : w) t /= n;
  return w;
}

inline TransportPlane transport_plane(const UnitVecD& n_u, const UnitVecD& n_v,
                                      const UnitVecD& sigma) {
  TransportPlane tp;
  tp.e1 = n_u.vec();
  const double c = dot(n_u, n_v);
  VecD w = n_v.vec();
  axpy(-c, n_u, w);
  const double s = norm(w);
  if (s <= kAntipodalResidual) {
    if (c > 0.0) {
      tp.identity = true;
      return tp;
    }
    tp.antipodal = true;
    VecD sig = sigma.vec();
    axpy(-dot(sig, n_u), n_u, sig);
    if (norm(sig) <= 1e-12) sig = any_orthogonal(n_u).vec();
    tp.e2 = orthonormalize_against(sig, tp.e1);
    tp.cos_a = -1.0;
    tp.sin_a = 0.0;
    return tp;
  }
  tp.e2 = orthonormalize_against(w, tp.e1);
  const double a = std::atan2(s, c);
  tp.cos_a = std::cos(a);
  tp.sin_a = std::sin(a);
  return tp;
}

}  // namespace detail

/// The spherical parallel coupling map coupl_{n_u, n_v}: the elementary
/// rotation of span(n_u, n_v) bringing n_u to n_v. At antipodal inputs the
/// plane span(n_u, sigma) is used instead.
inline RotationDescriptor parallel_transport_map(const UnitVecD& n_u, const UnitVecD& n_v,
                                                 const UnitVecD& sigma) {
  const detail::TransportPlane tp = detail::transport_plane(n_u, n_v, sigma);
  if (tp.identity) return {};
  return {tp.e1, tp.e2, std::atan2(tp.sin_a, tp.cos_a)};
}

struct CoupledDirections {
  UnitVecD n_u_prime;
  UnitVecD n_v_prime;
  UnitVecD m_u;
  UnitVecD m_v;
  UnitVecD l;
  double phi;
  bool antipodal;
};

/// Parallel-coupled post-collisional directions sharing (theta, phi, l):
///   n'_u = cos(theta) n_u + sin(theta)(cos(phi) m_u + sin(phi) l)
///   n'_v = cos(theta) n_v + sin(theta)(cos(phi) m_v + sin(phi) l)
/// with (m_u, m_v) the rotation of (n_u, n_v) by pi/2 inside their common
/// plane and l uniform on the complement of that plane.
inline CoupledDirections coupled_post_directions(const UnitVecD& n_u, const UnitVecD& n_v,
                                                 double theta, Rng& rng) {
  const std::size_t d = n_u.dim();
  if (d < 3) throw BadParams("coupled_post_directions requires d >= 3");
  const double c = dot(n_u, n_v);
  VecD w = n_v.vec();
  axpy(-c, n_u, w);
  const bool near_axis = norm(w) <= kAntipodalResidual;

  detail::TransportPlane tp;
  if (near_axis && c < 0.0) {
    tp = detail::transport_plane(n_u, n_v, sample_unit(d, rng));
  } else if (near_axis) {
    tp.identity = true;
    tp.e1 = n_u.vec();
    tp.e2 = any_orthogonal(n_u).vec();
  } else {
    tp = detail::transport_plane(n_u, n_v, n_u);
  }

  UnitVecD m_u(tp.e2);
  VecD mv(d);
  for (std::size_t k = 0; k < d; ++k) mv[k] = -tp.sin_a * tp.e1[k] + tp.cos_a * tp.e2[k];
  UnitVecD m_v(std::move(mv));

  const UnitVecD* basis[] = {&n_u, &m_u};
  UnitVecD l = sample_orthogonal_unit(d, basis, rng);
  const Azimuth az = sample_azimuth(d, rng);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double a = st * az.cos_phi, b = st * az.sin_phi;

  VecD nu_p(d);
  for (std::size_t k = 0; k < d; ++k) nu_p[k] = ct * n_u[k] + a * m_u[k] + b * l[k];
  UnitVecD n_u_prime(std::move(nu_p));

  if (tp.identity) {
    UnitVecD copy = n_u_prime;
    return {std::move(n_u_prime), std::move(copy), m_u, std::move(m_u), std::move(l),
            az.phi(), false};
  }
  VecD nv_p(d);
  for (std::size_t k = 0; k < d; ++k) nv_p[k] = ct * n_v[k] + a * m_v[k] + b * l[k];
  return {std::move(n_u_prime), UnitVecD(std::move(nv_p)), std::move(m_u), std::move(m_v),
          std::move(l), az.phi(), tp.antipodal};
}

}  // namespace kac
