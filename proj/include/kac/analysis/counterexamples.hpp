#pragma once

// The two counterexamples: a heavy-tailed V independent of a Gaussian U, and
// a co-linear coupling perturbed radially on a thin band.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "kac/errors.hpp"
#include "kac/geometry.hpp"
#include "kac/quadrature.hpp"
#include "kac/rng.hpp"
#include "kac/stats.hpp"

namespace kac {

/// Two-radius law of |V|: eps = 1/M with probability 1-p, M with probability p,
/// p = (1 - 1/M^2)/(M^2 - 1/M^2) so that E|V|^2 = 1.
struct TwoRadiusLaw {
  double inner = 0.0;
  double outer = 0.0;
  double p_outer = 0.0;

  static TwoRadiusLaw for_scale(double m) {
    if (!(m > 1.0)) throw BadParams("TwoRadiusLaw: M > 1 required");
    const double e = 1.0 / m;
    return {e, m, (1.0 - e * e) / (m * m - e * e)};
  }

  /// m_q = (E|V|^q)^{1/q}
  double moment_q(double q) const {
    return std::pow((1.0 - p_outer) * std::pow(inner, q) + p_outer * std::pow(outer, q), 1.0 / q);
  }
};

struct HeavyTailRow {
  double M = 0.0;
  double m_q = 0.0;
  double mean_sq_distance = 0.0;
  double mean_sq_distance_stderr = 0.0;
  double creation = 0.0;
  double creation_stderr = 0.0;
};

namespace detail {

/// Gaussian vector with E|U|^2 = 1.
inline void fill_isotropic_gaussian(std::span<double> out, Rng& rng) {
  fill_standard_normal(out, rng);
  const double s = 1.0 / std::sqrt(static_cast<double>(out.size()));
  for (double& x : out) x *= s;
}

inline void fill_on_sphere(std::span<double> out, double radius, Rng& rng) {
  const UnitVecD w = sample_unit(out.size(), rng);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = radius * w[k];
}

/// |U-U_*||V-V_*| - (U-U_*).(V-V_*)
inline double creation_integrand(std::span<const double> u, std::span<const double> v,
                                 std::span<const double> us, std::span<const double> vs) {
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double x = u[k] - us[k], y = v[k] - vs[k];
    uu += x * x;
    vv += y * y;
    uv += x * y;
  }
  return std::sqrt(uu * vv) - uv;
}

}  // namespace detail

/// Heavy-tail table: U ~ N(0, Id/d) independent of V = R w, R two-radius, w
/// uniform. The creation integrand is stratified over the radius classes of
/// (V, V_*) with exact class weights; `samples` draws per class.
inline std::vector<HeavyTailRow> counterexample_heavy_tail(std::span<const double> m_values,
                                                           double q, std::size_t d,
                                                           std::size_t samples, Rng& rng) {
  if (!(q > 1.0 && q < 2.0)) throw BadParams("counterexample_heavy_tail: 1 < q < 2 required");
  if (d < 3) throw BadParams("counterexample_heavy_tail: d >= 3 required");
  if (samples < 2) throw BadParams("counterexample_heavy_tail: at least 2 samples required");
  std::vector<HeavyTailRow> rows;
  VecD u(d), us(d), v(d), vs(d);
  for (double m : m_values) {
    const TwoRadiusLaw law = TwoRadiusLaw::for_scale(m);
    HeavyTailRow row;
    row.M = m;
    row.m_q = law.moment_q(q);

    const double radii[2] = {law.inner, law.outer};
    const double probs[2] = {1.0 - law.p_outer, law.p_outer};
    double creation = 0.0, creation_var = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = a; b < 2; ++b) {
        const double w = (a == b ? 1.0 : 2.0) * probs[a] * probs[b];
        RunningStats st;
        for (std::size_t s = 0; s < samples; ++s) {
          detail::fill_isotropic_gaussian(u, rng);
          detail::fill_isotropic_gaussian(us, rng);
          detail::fill_on_sphere(v, radii[a], rng);
          detail::fill_on_sphere(vs, radii[b], rng);
          st.add(detail::creation_integrand(u, v, us, vs));
        }
        creation += w * st.mean();
        creation_var += w * w * st.std_error() * st.std_error();
      }
    }
    row.creation = creation;
    row.creation_stderr = std::sqrt(creation_var);

    double dist = 0.0, dist_var = 0.0;
    for (int a = 0; a < 2; ++a) {
      RunningStats st;
      for (std::size_t s = 0; s < samples; ++s) {
        detail::fill_isotropic_gaussian(u, rng);
        detail::fill_on_sphere(v, radii[a], rng);
        st.add(distance_sq(u, v));
      }
      dist += probs[a] * st.mean();
      dist_var += probs[a] * probs[a] * st.std_error() * st.std_error();
    }
    row.mean_sq_distance = dist;
    row.mean_sq_distance_stderr = std::sqrt(dist_var);
    rows.push_back(row);
  }
  return rows;
}

struct RadialBandRow {
  double r_minus = 0.0;
  double r_plus = 0.0;
  double band_probability = 0.0;
  double band_radius = 0.0;  // conditional rms radius inside the band
  double mean_sq_distance = 0.0;
  double ratio = 0.0;
  double ratio_stderr = 0.0;
};

namespace detail {

/// P(r1 <= |U| <= r2) for U ~ N(0, Id/d), with k degrees of freedom in the
/// chi-square law of d|U|^2 (k = d gives the band mass).
inline double chi_band(double k, double d, double r1, double r2) {
  const double a = 0.5 * k, x1 = 0.5 * d * r1 * r1, x2 = 0.5 * d * r2 * r2;
  if (x1 >= a) return boost::math::gamma_q(a, x1) - boost::math::gamma_q(a, x2);
  return boost::math::gamma_p(a, x2) - boost::math::gamma_p(a, x1);
}

/// Radial density r^{d-1} e^{-d r^2/2} relative to its value at r0.
inline double radial_weight(double r, double r0, double d) {
  return std::pow(r / r0, d - 1.0) * std::exp(-0.5 * d * (r * r - r0 * r0));
}

}  // namespace detail

/// Radial-band table: U ~ N(0, Id/d), V = U outside the band [r_-, r_- + eps]
/// and V = r_bar U/|U| inside, r_bar the conditional rms radius. Reports
/// R = E(|U-U_*||V-V_*| - (U-U_*).(V-V_*)) / E|U-V|^2, with the band mass and
/// E((|U| - r_bar)^2 | band) computed by quadrature and the creation term by
/// conditional Monte Carlo.
inline std::vector<RadialBandRow> counterexample_radial_band(std::span<const double> r_minus_values,
                                                             double band_eps, std::size_t d,
                                                             std::size_t samples, Rng& rng) {
  if (!(band_eps > 0.0)) throw DegenerateBand("counterexample_radial_band: band_eps must be > 0");
  if (d < 3) throw BadParams("counterexample_radial_band: d >= 3 required");
  if (samples < 2) throw BadParams("counterexample_radial_band: at least 2 samples required");
  const double dd = static_cast<double>(d);
  std::vector<RadialBandRow> rows;
  VecD u(d), us(d), v(d);
  for (double r1 : r_minus_values) {
    if (!(r1 > 0.0)) throw BadParams("counterexample_radial_band: r_minus > 0 required");
    const double r2 = r1 + band_eps;
    RadialBandRow row;
    row.r_minus = r1;
    row.r_plus = r2;
    row.band_probability = detail::chi_band(dd, dd, r1, r2);
    if (!(row.band_probability > 0.0)) throw DegenerateBand("radial band carries no probability mass");

    auto g = [&](double r) { return detail::radial_weight(r, r1, dd); };
    const double z = adaptive_simpson(g, r1, r2, 1e-14);
    const double r2mean = adaptive_simpson([&](double r) { return r * r * g(r); }, r1, r2, 1e-14) / z;
    const double rbar = std::sqrt(r2mean);
    row.band_radius = rbar;
    const double spread =
        adaptive_simpson([&](double r) { return (r - rbar) * (r - rbar) * g(r); }, r1, r2, 1e-18) / z;
    row.mean_sq_distance = row.band_probability * spread;

    const double mode = std::sqrt((dd - 1.0) / dd);
    const double gmax = g(std::clamp(mode, r1, r2));
    auto band_radius = [&]() {
      for (;;) {
        const double r = r1 + band_eps * uniform01(rng);
        if (uniform01(rng) * gmax <= g(r)) return r;
      }
    };
    auto outside = [&](std::span<double> out) {
      for (;;) {
        detail::fill_isotropic_gaussian(out, rng);
        const double r = norm(out);
        if (r < r1 || r > r2) return;
      }
    };

    RunningStats both, one;
    for (std::size_t s = 0; s < samples; ++s) {
      const double ra = band_radius(), rb = band_radius();
      const UnitVecD wa = sample_unit(d, rng), wb = sample_unit(d, rng);
      for (std::size_t k = 0; k < d; ++k) {
        u[k] = ra * wa[k];
        v[k] = rbar * wa[k];
        us[k] = rb * wb[k];
      }
      VecD vs(d);
      for (std::size_t k = 0; k < d; ++k) vs[k] = rbar * wb[k];
      both.add(detail::creation_integrand(u, v, us, vs));

      const double rc = band_radius();
      const UnitVecD wc = sample_unit(d, rng);
      for (std::size_t k = 0; k < d; ++k) {
        u[k] = rc * wc[k];
        v[k] = rbar * wc[k];
      }
      outside(us);
      one.add(detail::creation_integrand(u, v, us, us));
    }
    const double pb = row.band_probability;
    const double num = pb * both.mean() + 2.0 * (1.0 - pb) * one.mean();
    const double num_se = std::hypot(pb * both.std_error(), 2.0 * (1.0 - pb) * one.std_error());
    row.ratio = num / spread;
    row.ratio_stderr = num_se / spread;
    rows.push_back(row);
  }
  return rows;
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::log(x[i]) - mx, b = std::log(y[i]) - my;
    sxy += a * b;
    sxx += a * a;
  }
  return sxy / sxx;
}

}  // namespace kac
