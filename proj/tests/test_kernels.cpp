#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "kac/kernels.hpp"
#include "kac/quadrature.hpp"
#include "kac/stats.hpp"

using namespace kac;

namespace {

constexpr double kPi = std::numbers::pi;

/// Gauss-Kronrod integral, split at log-spaced breakpoints for power-law
/// integrands; tanh-sinh when the integrand may be singular at a = 0.
template <class F>
double gk(F f, double a, double b) {
  if (a == 0.0) return boost::math::quadrature::tanh_sinh<double>().integrate(f, a, b, 1e-14);
  double s = 0.0;
  const int pieces = 40;
  for (int i = 0; i < pieces; ++i) {
    const double x0 = a * std::pow(b / a, double(i) / pieces);
    const double x1 = a * std::pow(b / a, double(i + 1) / pieces);
    s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x0, x1, 5, 1e-14);
  }
  return s;
}

double levy_by_quadrature(const AngularKernel& k) {
  return gk([&](double t) { return std::sin(t) * std::sin(t) * k.density(t); }, k.theta_min(), k.theta_max());
}

double mass_by_quadrature(const AngularKernel& k) {
  return gk([&](double t) { return k.density(t); }, k.theta_min(), k.theta_max());
}

}  // namespace

TEST(MakeKernel, DiracAtRightAngle) {
  const AngularKernel k = AngularKernel::dirac(kPi / 2);
  EXPECT_NEAR(k.normalization(), 1.0, 1e-15);
  EXPECT_NEAR(k.total_rate(), 1.0, 1e-15);
  EXPECT_NEAR(total_rate(k), 1.0, 1e-15);
}

TEST(MakeKernel, DiracAtDegenerateAnglesThrows) {
  EXPECT_THROW(AngularKernel::dirac(0.0), BadAngle);
  EXPECT_THROW(AngularKernel::dirac(kPi), BadAngle);
  EXPECT_THROW(make_kernel({KernelFamily::dirac, 0.0}), BadAngle);
}

TEST(MakeKernel, DiracGeneralAngleIsLevyNormalized) {
  const AngularKernel k = AngularKernel::dirac(0.3);
  EXPECT_NEAR(k.total_rate() * std::sin(0.3) * std::sin(0.3), 1.0, 1e-14);
}

TEST(MakeKernel, UniformWithoutCutoff) {
  const AngularKernel k = AngularKernel::uniform(0.0);
  EXPECT_NEAR(k.normalization(), 2.0 / kPi, 1e-12);
  EXPECT_NEAR(k.total_rate(), 2.0, 1e-12);
}

TEST(MakeKernel, PowerLawMinusOneEqualsUniform) {
  const AngularKernel p = AngularKernel::power_law(-1.0, 0.0), u = AngularKernel::uniform(0.0);
  EXPECT_NEAR(p.normalization(), 2.0 / kPi, 1e-10);
  EXPECT_NEAR(p.total_rate(), u.total_rate(), 1e-10);
  for (double t : {0.1, 1.0, 2.0, 3.0}) {
    EXPECT_NEAR(p.density(t), u.density(t), 1e-10);
    EXPECT_NEAR(p.cdf(t), u.cdf(t), 1e-12);
  }
}

TEST(MakeKernel, RangeErrors) {
  EXPECT_THROW(AngularKernel::power_law(0.0, 0.0), NonIntegrable);
  EXPECT_THROW(AngularKernel::power_law(1.0, 0.0), NonIntegrable);
  EXPECT_THROW(AngularKernel::power_law(2.0, 0.1), BadParams);
  EXPECT_THROW(AngularKernel::uniform(-0.1), BadParams);
  EXPECT_THROW(AngularKernel::uniform(kPi), BadParams);
}

TEST(MakeKernel, LevyNormalizationByIndependentQuadrature) {
  const std::vector<AngularKernel> ks = {
      AngularKernel::uniform(0.0),          AngularKernel::uniform(0.5),
      AngularKernel::power_law(-1.0, 0.0),  AngularKernel::power_law(-0.5, 0.0),
      AngularKernel::power_law(0.0, 0.1),   AngularKernel::power_law(1.0, 0.1),
      AngularKernel::power_law(1.5, 0.01),  AngularKernel::power_law(1.9, 1e-3)};
  for (const auto& k : ks) {
    EXPECT_NEAR(levy_by_quadrature(k), 1.0, 1e-8) << to_string(k.family()) << " nu=" << k.spec().nu;
    EXPECT_NEAR(mass_by_quadrature(k), k.total_rate(), 1e-8 * k.total_rate());
  }
}

TEST(TotalRate, PowerLawZeroMatchesQuadrature) {
  const AngularKernel k = AngularKernel::power_law(0.0, 0.1);
  // b0 = c ln(pi/0.1), c = 1 / int sin^2(t)/t dt
  const double levy = gk([](double t) { return std::sin(t) * std::sin(t) / t; }, 0.1, kPi);
  EXPECT_NEAR(k.total_rate(), std::log(kPi / 0.1) / levy, 1e-8);
}

TEST(SampleTheta, DiracIsConstant) {
  Rng rng(1);
  const AngularKernel k = AngularKernel::dirac(1.1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_theta(k, rng), 1.1);
}

TEST(SampleTheta, UniformPassesKolmogorovSmirnov) {
  Rng rng(2);
  const AngularKernel k = AngularKernel::uniform(0.0);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(k.sample_theta(rng));
  EXPECT_GT(ks_test(xs, [](double t) { return std::clamp(t / kPi, 0.0, 1.0); }).p_value, 0.01);
}

TEST(SampleTheta, PowerLawPassesKolmogorovSmirnov) {
  Rng rng(3);
  const AngularKernel k = AngularKernel::power_law(1.0, 0.1);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(k.sample_theta(rng));
  // cdf of theta^{-2} on [0.1, pi]
  auto cdf = [](double t) {
    t = std::clamp(t, 0.1, kPi);
    return (1.0 / 0.1 - 1.0 / t) / (1.0 / 0.1 - 1.0 / kPi);
  };
  EXPECT_GT(ks_test(xs, cdf).p_value, 0.01);
}

TEST(SampleTheta, LevyNormalizationAsSamplingOracle) {
  // E[sin^2(theta)] b0 = 1 for every family.
  Rng rng(4);
  const std::vector<AngularKernel> ks = {AngularKernel::dirac(0.7), AngularKernel::uniform(0.0),
                                         AngularKernel::uniform(0.3), AngularKernel::power_law(1.0, 0.1),
                                         AngularKernel::power_law(0.0, 0.05), AngularKernel::power_law(-0.5, 0.0)};
  for (const auto& k : ks) {
    RunningStats s;
    for (int i = 0; i < 200000; ++i) {
      const double st = std::sin(k.sample_theta(rng));
      s.add(st * st * k.total_rate());
    }
    EXPECT_NEAR(s.mean(), 1.0, 3.0 * s.std_error() + 1e-12) << to_string(k.family());
  }
}

TEST(SampleTheta, InverseCdfAccuracy) {
  // Exact inverse of the theta^{-nu-1} law on [a, pi].
  for (auto [nu, a] : {std::pair{1.0, 0.1}, std::pair{1.5, 0.01}, std::pair{-0.5, 0.0}, std::pair{0.5, 0.2}}) {
    const AngularKernel k = AngularKernel::power_law(nu, a);
    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double u = i / 10000.0;
      double exact;
      if (a == 0.0) {
        exact = kPi * std::pow(u, 1.0 / (-nu));
      } else {
        const double lo = std::pow(a, -nu), hi = std::pow(kPi, -nu);
        exact = std::pow(lo - u * (lo - hi), -1.0 / nu);
      }
      worst = std::max(worst, std::abs(k.quantile(u) - exact));
    }
    EXPECT_LT(worst, 1e-6) << "nu=" << nu;
  }
}

TEST(InverseCdfTable, MonotoneWithEndpoints) {
  const AngularKernel k = AngularKernel::power_law(1.2, 0.05);
  const auto t = k.inverse_cdf_table();
  ASSERT_EQ(t.size(), AngularKernel::kTableNodes);
  EXPECT_EQ(t.front().probability, 0.0);
  EXPECT_EQ(t.back().probability, 1.0);
  EXPECT_NEAR(t.front().theta, 0.05, 1e-15);
  EXPECT_NEAR(t.back().theta, kPi, 1e-15);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_GE(t[i].probability, t[i - 1].probability);
    EXPECT_GT(t[i].theta, t[i - 1].theta);
  }
}

TEST(Quadrature, AdaptiveSimpsonOnSmoothIntegrands) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::sin(x) * std::sin(x); }, 0.0, kPi), kPi / 2, 1e-11);
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(-x * x); }, -6.0, 6.0), std::sqrt(kPi), 1e-11);
}

TEST(UnnormalizedDirac, ZeroAngleIsAllowed) {
  const AngularKernel k = AngularKernel::unnormalized_dirac(0.0, 2.0);
  EXPECT_FALSE(k.levy_normalized());
  EXPECT_EQ(k.total_rate(), 2.0);
  Rng rng(5);
  EXPECT_EQ(k.sample_theta(rng), 0.0);
}
