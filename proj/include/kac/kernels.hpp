#pragma once

// Angular collision kernels beta(d theta) on [0, pi] with Levy normalization
// int sin^2(theta) beta(d theta) = 1 and finite total mass b0 (angular cut-off).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kac/errors.hpp"
#include "kac/quadrature.hpp"
#include "kac/rng.hpp"

namespace kac {

enum class KernelFamily { dirac, uniform, power_law };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::dirac: return "dirac";
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::power_law: return "power_law";
  }
  return "?";
}

/// Family name plus numeric parameters, as read from an experiment config.
struct KernelSpec {
  KernelFamily family = KernelFamily::uniform;
  double theta0 = std::numbers::pi / 2;  // dirac
  double theta_min = 0.0;                // uniform, power_law
  double nu = -1.0;                      // power_law: density ~ theta^{-nu-1}
};

struct InverseCdfNode {
  double probability;
  double theta;
};

class AngularKernel {
 public:
  static constexpr std::size_t kTableNodes = 4096;

  static AngularKernel dirac(double theta0) {
    if (!(theta0 > 0.0 && theta0 < std::numbers::pi))
      throw BadAngle("dirac kernel needs theta0 in (0, pi): sin^2(theta0) must be positive");
    const double s = std::sin(theta0);
    if (s * s < 1e-300) throw BadAngle("dirac kernel: sin^2(theta0) underflows");
    AngularKernel k;
    k.spec_ = {KernelFamily::dirac, theta0, 0.0, 0.0};
    k.c_ = 1.0 / (s * s);
    k.b0_ = k.c_;
    k.lo_ = k.hi_ = theta0;
    k.table_ = {{0.0, theta0}, {1.0, theta0}};
    return k;
  }

  /// Point mass at theta0 with an explicit rate, without Levy normalization.
  /// Allows theta0 in {0, pi}; only meant for identity-collision checks.
  static AngularKernel unnormalized_dirac(double theta0, double rate) {
    if (!(theta0 >= 0.0 && theta0 <= std::numbers::pi) || !(rate > 0.0))
      throw BadParams("unnormalized_dirac: theta0 in [0, pi] and rate > 0 required");
    AngularKernel k;
    k.spec_ = {KernelFamily::dirac, theta0, 0.0, 0.0};
    k.c_ = rate;
    k.b0_ = rate;
    k.lo_ = k.hi_ = theta0;
    k.table_ = {{0.0, theta0}, {1.0, theta0}};
    k.levy_normalized_ = false;
    return k;
  }

  static AngularKernel uniform(double theta_min) {
    if (!(theta_min >= 0.0 && theta_min < std::numbers::pi))
      throw BadParams("uniform kernel needs theta_min in [0, pi)");
    AngularKernel k;
    k.spec_ = {KernelFamily::uniform, 0.0, theta_min, -1.0};
    k.lo_ = theta_min;
    k.hi_ = std::numbers::pi;
    k.finish_continuous();
    return k;
  }

  static AngularKernel power_law(double nu, double theta_min) {
    if (!(nu < 2.0)) throw BadParams("power_law kernel needs nu < 2");
    if (!(theta_min >= 0.0 && theta_min < std::numbers::pi))
      throw BadParams("power_law kernel needs theta_min in [0, pi)");
    if (nu >= 0.0 && theta_min == 0.0)
      throw NonIntegrable("power_law kernel with nu >= 0 has infinite mass without cut-off");
    AngularKernel k;
    k.spec_ = {KernelFamily::power_law, 0.0, theta_min, nu};
    k.lo_ = theta_min;
    k.hi_ = std::numbers::pi;
    k.finish_continuous();
    return k;
  }

  static AngularKernel make(const KernelSpec& s) {
    switch (s.family) {
      case KernelFamily::dirac: return dirac(s.theta0);
      case KernelFamily::uniform: return uniform(s.theta_min);
      case KernelFamily::power_law: return power_law(s.nu, s.theta_min);
    }
    throw BadParams("unknown kernel family");
  }

  const KernelSpec& spec() const noexcept { return spec_; }
  KernelFamily family() const noexcept { return spec_.family; }
  /// Normalization constant c in beta(d theta) = c * shape(theta) d theta.
  double normalization() const noexcept { return c_; }
  /// b0 = int beta(d theta).
  double total_rate() const noexcept { return b0_; }
  double theta_min() const noexcept { return lo_; }
  double theta_max() const noexcept { return hi_; }
  bool levy_normalized() const noexcept { return levy_normalized_; }
  std::span<const InverseCdfNode> inverse_cdf_table() const noexcept { return table_; }

  /// Density of beta w.r.t. d theta (zero outside the support; undefined for dirac).
  double density(double theta) const {
    if (spec_.family == KernelFamily::dirac) return 0.0;
    if (theta < lo_ || theta > hi_) return 0.0;
    return c_ * shape(theta);
  }

  /// Distribution function of the scattering angle law beta / b0.
  double cdf(double theta) const {
    if (spec_.family == KernelFamily::dirac) return theta < lo_ ? 0.0 : 1.0;
    if (theta <= lo_) return 0.0;
    if (theta >= hi_) return 1.0;
    if (spec_.family == KernelFamily::uniform) return (theta - lo_) / (hi_ - lo_);
    const double nu = spec_.nu;
    if (nu == 0.0) return std::log(theta / lo_) / std::log(hi_ / lo_);
    const double a = std::pow(lo_, -nu), b = std::pow(hi_, -nu), t = std::pow(theta, -nu);
    return (a - t) / (a - b);
  }

  /// theta ~ beta / b0: table lookup with linear interpolation, polished by
  /// Newton steps on the exact distribution function.
  double sample_theta(Rng& rng) const {
    if (spec_.family == KernelFamily::dirac) return lo_;
    return quantile(uniform01(rng));
  }

  double quantile(double u) const {
    if (spec_.family == KernelFamily::dirac) return lo_;
    u = std::clamp(u, 0.0, 1.0);
    auto it = std::upper_bound(table_.begin(), table_.end(), u,
                               [](double x, const InverseCdfNode& n) { return x < n.probability; });
    if (it == table_.begin()) return table_.front().theta;
    if (it == table_.end()) return table_.back().theta;
    const InverseCdfNode& a = *(it - 1);
    const InverseCdfNode& b = *it;
    const double w = (b.probability > a.probability)
                         ? (u - a.probability) / (b.probability - a.probability)
                         : 0.0;
    double theta = a.theta + w * (b.theta - a.theta);
    if (spec_.family == KernelFamily::uniform) return theta;
    // Safeguarded Newton on the exact distribution function inside the cell.
    double lo = a.theta, hi = b.theta;
    for (int iter = 0; iter < 50; ++iter) {
      const double g = cdf(theta) - u;
      if (g == 0.0) break;
      (g > 0.0 ? hi : lo) = theta;
      const double f = c_ * shape(theta) / b0_;
      double next = (f > 0.0 && std::isfinite(f)) ? theta - g / f : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - theta) <= 1e-15 * std::max(1.0, theta)) {
        theta = next;
        break;
      }
      theta = next;
    }
    return theta;
  }

 private:
  AngularKernel() = default;

  double shape(double theta) const {
    if (spec_.family == KernelFamily::uniform) return 1.0;
    return std::pow(theta, -spec_.nu - 1.0);
  }

  /// int_lo^hi shape(theta) d theta, closed form.
  double shape_mass() const {
    if (spec_.family == KernelFamily::uniform) return hi_ - lo_;
    const double nu = spec_.nu;
    if (nu == 0.0) return std::log(hi_ / lo_);
    return (std::pow(lo_, -nu) - std::pow(hi_, -nu)) / nu;
  }

  /// int_lo^hi sin^2(theta) shape(theta) d theta by adaptive Simpson. Power
  /// laws with a positive cut-off are integrated in log(theta).
  double levy_integral() const {
    if (spec_.family == KernelFamily::power_law && lo_ > 0.0) {
      const double nu = spec_.nu;
      auto g = [nu](double x) {
        const double s = std::sin(std::exp(x));
        return s * s * std::exp(-nu * x);
      };
      return adaptive_simpson(g, std::log(lo_), std::log(hi_), 1e-13);
    }
    auto g = [this](double t) {
      const double s = std::sin(t);
      return t == 0.0 ? 0.0 : s * s * shape(t);
    };
    return adaptive_simpson(g, lo_, hi_, 1e-13);
  }

  void finish_continuous() {
    c_ = 1.0 / levy_integral();
    b0_ = c_ * shape_mass();
    if (!std::isfinite(b0_) || !(b0_ > 0.0)) throw NonIntegrable("kernel mass is not finite");
    table_.resize(kTableNodes);
    const bool log_nodes = spec_.family == KernelFamily::power_law && lo_ > 0.0;
    for (std::size_t i = 0; i < kTableNodes; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(kTableNodes - 1);
      double theta = log_nodes ? lo_ * std::pow(hi_ / lo_, x) : lo_ + x * (hi_ - lo_);
      if (i + 1 == kTableNodes) theta = hi_;
      table_[i] = {cdf(theta), theta};
    }
    table_.front().probability = 0.0;
    table_.back().probability = 1.0;
  }

  KernelSpec spec_;
  double c_ = 1.0;
  double b0_ = 1.0;
  double lo_ = 0.0;
  double hi_ = std::numbers::pi;
  bool levy_normalized_ = true;
  std::vector<InverseCdfNode> table_;
};

inline AngularKernel make_kernel(const KernelSpec& spec) { return AngularKernel::make(spec); }
inline double sample_theta(const AngularKernel& k, Rng& rng) { return k.sample_theta(rng); }
inline double total_rate(const AngularKernel& k) { return k.total_rate(); }

}  // namespace kac
