#pragma once

// Hoelder-chain constants, the order-4 moment balance and Gronwall bound,
// Wishart condition-number moments and the equilibrium constant k_main.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "kac/analysis/spectral.hpp"
#include "kac/configuration.hpp"
#include "kac/errors.hpp"
#include "kac/geometry.hpp"
#include "kac/rng.hpp"

namespace kac {

struct HolderConstants {
  double delta = 0.0;
  double p = 0.0;
  double q = 0.0;
  std::size_t d = 0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k_main = std::numeric_limits<double>::quiet_NaN();
  double k_main_stderr = std::numeric_limits<double>::quiet_NaN();
  double c_delta_n = std::numeric_limits<double>::quiet_NaN();
  double c_delta_n_stderr = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples = 0;
};

/// (d-2)/(d-1) (1+delta)^{1+1/delta} / (1+2 delta)^{1+1/(2 delta)}
inline double holder_common_factor(double delta, std::size_t d) {
  const double dd = static_cast<double>(d);
  return (dd - 2.0) / (dd - 1.0) * std::pow(1.0 + delta, 1.0 + 1.0 / delta) /
         std::pow(1.0 + 2.0 * delta, 1.0 + 0.5 / delta);
}

/// k1 = 2^{-3-1/(2 delta)} x common factor, k2 = 2^{-9/2-2/delta} x common factor.
inline HolderConstants holder_constants(double delta, double p, std::size_t d) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw BadParams("holder_constants: delta > 0 required");
  if (!(p > 1.0) || !std::isfinite(p)) throw BadParams("holder_constants: p > 1 required");
  if (d < 3) throw BadParams("holder_constants: d >= 3 required");
  HolderConstants h;
  h.delta = delta;
  h.p = p;
  h.q = p / (p - 1.0);
  h.d = d;
  const double common = holder_common_factor(delta, d);
  h.k1 = std::pow(2.0, -3.0 - 0.5 / delta) * common;
  h.k2 = std::pow(2.0, -4.5 - 2.0 / delta) * common;
  return h;
}

/// (1 + theta)(1 - theta)^{1/b}
inline double elementary_lhs(double theta, double b) {
  return (1.0 + theta) * std::pow(1.0 - theta, 1.0 / b);
}

/// b (2/(b+1))^{1+1/b}, the maximum of elementary_lhs over [-1, 1].
inline double elementary_bound(double b) { return b * std::pow(2.0 / (b + 1.0), 1.0 + 1.0 / b); }

/// Half the b-weighted mean change of |v|^4 + |v_*|^4 over one collision:
/// -(|v|^4+|v_*|^4)/4 + (d+1)/(2(d-1)) |v|^2|v_*|^2 - (v.v_*)^2/(d-1).
inline double delta4(std::span<const double> v, std::span<const double> v_star, std::size_t d) {
  const double dd = static_cast<double>(d);
  const double a = norm_sq(v), b = norm_sq(v_star), c = dot(v, v_star);
  return -0.25 * (a * a + b * b) + (dd + 1.0) / (2.0 * (dd - 1.0)) * a * b - c * c / (dd - 1.0);
}

struct Order4Bound {
  double bound = 0.0;
  double t_star = 0.0;
};

/// e^{-t/2}(m4_0 - (d+2)/d) + (d+2)/d and t_* = 2 (ln(d m4_0/(d+2) - 1))^+.
inline Order4Bound order4_bound(double m4_0, std::size_t d, double t) {
  if (!(m4_0 >= 1.0)) throw BadParams("order4_bound: m4_0 >= 1 required");
  if (!(t >= 0.0)) throw BadParams("order4_bound: t >= 0 required");
  const double dd = static_cast<double>(d);
  const double eq = (dd + 2.0) / dd;
  Order4Bound b;
  b.bound = std::exp(-0.5 * t) * (m4_0 - eq) + eq;
  const double a = dd / (dd + 2.0) * m4_0 - 1.0;
  b.t_star = a > 0.0 ? 2.0 * std::max(0.0, std::log(a)) : 0.0;
  return b;
}

/// Exact E<|V|^4>_N under the uniform law on the constraint sphere:
/// (N-1)(d+2) / ((N-1)d + 2).
inline double equilibrium_m4(std::size_t n, std::size_t d) {
  const double k = static_cast<double>(n - 1), dd = static_cast<double>(d);
  return k * (dd + 2.0) / (k * dd + 2.0);
}

/// Time-integral estimate int_0^t m4(s)^{-gamma} ds >= ((2d+4)/d)^{-gamma}(t - t_*)^+
/// evaluated with the trapezoid rule on a sampled trajectory. Returns, for
/// every sample time, the pair (integral, lower bound).
inline std::vector<std::pair<double, double>> cons4_check(std::span<const double> times,
                                                          std::span<const double> m4, double gamma,
                                                          std::size_t d, double t_star) {
  const double dd = static_cast<double>(d);
  const double floor = std::pow((2.0 * dd + 4.0) / dd, -gamma);
  std::vector<std::pair<double, double>> out(times.size());
  double integral = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0)
      integral += 0.5 * (times[k] - times[k - 1]) *
                  (std::pow(m4[k], -gamma) + std::pow(m4[k - 1], -gamma));
    out[k] = {integral, floor * std::max(0.0, times[k] - t_star)};
  }
  return out;
}

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// E[(1 - L_d^N)^{-p}]^{-1/p}, L_d^N the largest eigenvalue of <U (x) U>_N
/// with U uniform on the constraint sphere. Standard error by the delta method.
inline MonteCarloEstimate wishart_kappa_moment(std::size_t n, std::size_t d, double p,
                                               std::size_t samples, Rng& rng) {
  if (!(p >= 1.0)) throw BadParams("wishart_kappa_moment: p >= 1 required");
  if (d < 2) throw BadParams("wishart_kappa_moment: d >= 2 required");
  const double dd = static_cast<double>(d);
  if (!(static_cast<double>(n) - 2.0 * p / (dd - 1.0) > dd))
    throw BadParams("wishart_kappa_moment: N - 2p/(d-1) > d required");
  if (samples < 2) throw BadParams("wishart_kappa_moment: at least 2 samples required");
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Configuration u = sample_equilibrium(n, d, rng);
    const double x = std::pow(kappa(second_moment(u)), p);
    const double delta = x - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  const double se_mean = std::sqrt(var / static_cast<double>(samples));
  MonteCarloEstimate e;
  e.value = std::pow(mean, -1.0 / p);
  e.std_error = e.value / p * se_mean / mean;
  e.samples = samples;
  return e;
}

/// log E|G_d|^{2m} for G_d centred Gaussian with E|G_d|^2 = 1: m log(2/d) + log Gamma(d/2+m) - log Gamma(d/2).
inline double log_gaussian_radial_moment(std::size_t d, double m) {
  const double h = 0.5 * static_cast<double>(d);
  return m * std::log(1.0 / h) + std::lgamma(h + m) - std::lgamma(h);
}

inline double gaussian_radial_moment(std::size_t d, double m) { return std::exp(log_gaussian_radial_moment(d, m)); }

/// N -> infinity limit of E[kappa^{p(1+2 delta)} <|(U-U_*)/sqrt 2|^{2p(1+delta)}>_N]^{-1/(2 p delta)}:
/// ((d-1)/d)^{1+1/(2 delta)} E(|G_d|^{2p(1+delta)})^{-1/(2 p delta)}.
inline double k_main_limit_factor(double delta, double p, std::size_t d) {
  const double dd = static_cast<double>(d);
  return std::exp((1.0 + 0.5 / delta) * std::log((dd - 1.0) / dd) -
                  0.5 / (p * delta) * log_gaussian_radial_moment(d, p * (1.0 + delta)));
}

/// Order-4 specialization 2q(1+delta) = 4: q = 2/(1+delta), p = 2/(1-delta).
inline double order4_p(double delta) { return 2.0 / (1.0 - delta); }
inline double order4_q(double delta) { return 2.0 / (1.0 + delta); }

namespace detail {

/// log <(|u-u_*|^2/2)^m>_N over all N^2 ordered pairs, computed against the
/// scale S = 2 max|u|^2 >= |u-u_*|^2/2 so large exponents cannot overflow.
inline double log_pair_moment(const Configuration& u, double m) {
  const std::size_t n = u.size(), d = u.dim();
  std::vector<double> r(n);
  double rmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = norm_sq(u[i]);
    rmax = std::max(rmax, r[i]);
  }
  const double scale = 2.0 * rmax;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ui = u[i].data();
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* uj = u[j].data();
      double g = 0.0;
      for (std::size_t k = 0; k < d; ++k) g += ui[k] * uj[k];
      const double x = std::max(0.0, 0.5 * (r[i] + r[j]) - g);
      s += std::pow(x / scale, m);
    }
  }
  s *= 2.0 / (static_cast<double>(n) * static_cast<double>(n));
  return m * std::log(scale) + std::log(s);
}

}  // namespace detail

/// Monte Carlo estimate of k_main = k2 E[kappa^{p(1+2 delta)} <|(U-U_*)/sqrt 2|^{2p(1+delta)}>_N]^{-1/(2 p delta)}
/// under the uniform law on the constraint sphere, and c_{delta,N} = k_main ((2d+4)/d)^{-1/2-1/(2 delta)}.
inline HolderConstants k_main_estimate(double delta, double p, double q, std::size_t n,
                                       std::size_t d, std::size_t samples, Rng& rng) {
  if (std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
    throw BadParams("k_main_estimate: 1/p + 1/q = 1 required");
  HolderConstants h = holder_constants(delta, p, d);
  if (samples < 2) throw BadParams("k_main_estimate: at least 2 samples required");
  const double dd = static_cast<double>(d);
  if (static_cast<double>(n) - 2.0 * p * (1.0 + 2.0 * delta) / (dd - 1.0) <= dd)
    throw MomentBlowup("k_main_estimate: N - 2p(1+2 delta)/(d-1) <= d, kappa moment not integrable");

  const double kexp = p * (1.0 + 2.0 * delta);
  const double m = p * (1.0 + delta);
  std::vector<double> logs(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const Configuration u = sample_equilibrium(n, d, rng);
    const double k = kappa(second_moment(u));
    if (!std::isfinite(k)) throw MomentBlowup("k_main_estimate: rank-1 sample");
    logs[s] = kexp * std::log(k) + detail::log_pair_moment(u, m);
  }
  const double lmax = *std::max_element(logs.begin(), logs.end());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = std::exp(logs[s] - lmax);
    const double dlt = x - mean;
    mean += dlt / static_cast<double>(s + 1);
    m2 += dlt * (x - mean);
  }
  const double rel_se = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) / mean;
  const double gamma = 0.5 / (p * delta);
  const double factor = std::exp(-gamma * (lmax + std::log(mean)));
  h.k_main = h.k2 * factor;
  h.k_main_stderr = h.k_main * gamma * rel_se;
  const double c_scale = std::pow((2.0 * dd + 4.0) / dd, -0.5 - 0.5 / delta);
  h.c_delta_n = h.k_main * c_scale;
  h.c_delta_n_stderr = h.k_main_stderr * c_scale;
  h.samples = samples;
  return h;
}

}  // namespace kac
