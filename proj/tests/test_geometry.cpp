#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kac/geometry.hpp"
#include "kac/rng.hpp"
#include "kac/stats.hpp"

using namespace kac;

namespace {

constexpr double kPi = std::numbers::pi;

VecD random_vec(std::size_t d, Rng& rng) {
  VecD v(d);
  fill_standard_normal(v, rng);
  return v;
}

}  // namespace

TEST(PostCollision, EqualVelocitiesAreFixed) {
  const VecD v{0.3, -1.2, 0.7};
  const auto [a, b] = post_collision_velocities(v, v, UnitVecD({0.0, 0.0, 1.0}));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(a[k], v[k]);
    EXPECT_DOUBLE_EQ(b[k], v[k]);
  }
}

TEST(PostCollision, ZeroScatteringKeepsVelocities) {
  const VecD v{1.0, 2.0, -0.5}, w{-0.3, 0.4, 1.1};
  const auto n = direction_between(v, w);
  ASSERT_TRUE(n.has_value());
  const auto [a, b] = post_collision_velocities(v, w, *n);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(a[k], v[k], 1e-14);
    EXPECT_NEAR(b[k], w[k], 1e-14);
  }
}

TEST(PostCollision, HandExample) {
  const auto [a, b] = post_collision_velocities(VecD{1, 0, 0}, VecD{-1, 0, 0}, UnitVecD({0, 1, 0}));
  EXPECT_NEAR(a[0], 0.0, 1e-15);
  EXPECT_NEAR(a[1], 1.0, 1e-15);
  EXPECT_NEAR(b[1], -1.0, 1e-15);
  EXPECT_NEAR(a[2], 0.0, 1e-15);
}

TEST(PostCollision, ConservesMomentumAndEnergy) {
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t d = 3 + t % 5;
    const VecD v = random_vec(d, rng), w = random_vec(d, rng);
    const UnitVecD n = sample_unit(d, rng);
    const auto [a, b] = post_collision_velocities(v, w, n);
    const double e = norm_sq(v) + norm_sq(w);
    EXPECT_NEAR(norm_sq(a) + norm_sq(b), e, 1e-12 * e);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(a[k] + b[k], v[k] + w[k], 1e-12 * std::sqrt(e));
    EXPECT_NEAR(distance_sq(a, b), distance_sq(v, w), 1e-12 * e);
  }
}

TEST(BuildDirection, SpecialAngles) {
  const UnitVecD n({1, 0, 0, 0}), m({0, 1, 0, 0}), l({0, 0, 0, 1});
  auto dir = [&](double theta, double phi) { return build_direction({n, m, l, theta, phi}); };
  const UnitVecD a = dir(0.0, 1.3);
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  const UnitVecD b = dir(kPi, 0.4);
  EXPECT_NEAR(b[0], -1.0, 1e-15);
  EXPECT_NEAR(norm(b.vec()), 1.0, 1e-15);
  const UnitVecD c = dir(kPi / 2, 0.0);
  EXPECT_NEAR(c[1], 1.0, 1e-15);
  EXPECT_NEAR(c[0], 0.0, 1e-15);
  for (double theta : {0.1, 1.0, 2.5}) EXPECT_NEAR(dot(dir(theta, 0.7), n), std::cos(theta), 1e-12);
}

TEST(SamplePostDirection, MeanCosineMatches) {
  Rng rng(2);
  const UnitVecD n = sample_unit(4, rng);
  const double theta = 1.1;
  RunningStats s;
  for (int k = 0; k < 100000; ++k) s.add(dot(sample_post_direction(n, theta, rng).n_prime, n));
  EXPECT_NEAR(s.mean(), std::cos(theta), 3.0 * s.std_error() + 1e-12);
}

TEST(SamplePostDirection, AzimuthUniformInThreeDimensions) {
  Rng rng(3);
  const UnitVecD n = sample_unit(3, rng);
  std::vector<double> phis;
  for (int k = 0; k < 100000; ++k) phis.push_back(sample_post_direction(n, 0.8, rng).phi);
  const TestResult ks = ks_test(phis, [](double x) { return std::clamp(x / kPi, 0.0, 1.0); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(SamplePostDirection, AzimuthDensityInFiveDimensions) {
  // density (2/pi) sin^2(phi), cdf (phi - sin(phi) cos(phi)) / pi
  Rng rng(4);
  std::vector<double> phis;
  for (int k = 0; k < 100000; ++k) phis.push_back(sample_azimuth(5, rng).phi());
  const TestResult ks =
      ks_test(phis, [](double x) { return std::clamp((x - std::sin(x) * std::cos(x)) / kPi, 0.0, 1.0); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(SamplePostDirection, OrthogonalPartIsIsotropic) {
  // E[w w^T] = sin^2(theta)/(d-1) (I - n n^T) for w the part of n' orthogonal to n.
  Rng rng(5);
  const std::size_t d = 5;
  const UnitVecD n = sample_unit(d, rng);
  const double theta = 0.9, st2 = std::sin(theta) * std::sin(theta);
  std::vector<RunningStats> acc(d * d);
  for (int k = 0; k < 100000; ++k) {
    VecD w = sample_post_direction(n, theta, rng).n_prime.vec();
    axpy(-dot(w, n), n, w);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) acc[i * d + j].add(w[i] * w[j]);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double expect = st2 / (d - 1.0) * ((i == j ? 1.0 : 0.0) - n[i] * n[j]);
      EXPECT_NEAR(acc[i * d + j].mean(), expect, 4.0 * acc[i * d + j].std_error() + 1e-12) << i << "," << j;
    }
}

TEST(ParallelTransport, IdenticalDirectionsGiveIdentity) {
  Rng rng(6);
  const UnitVecD n = sample_unit(3, rng);
  const RotationDescriptor r = parallel_transport_map(n, n, n);
  EXPECT_TRUE(r.is_identity());
  const VecD x = random_vec(3, rng);
  const VecD y = r.apply(x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(x[k], y[k]);
}

TEST(ParallelTransport, QuarterTurnInPlane) {
  const UnitVecD e1({1, 0, 0}), e2({0, 1, 0});
  const RotationDescriptor r = parallel_transport_map(e1, e2, e1);
  const VecD z = r.apply(VecD{0, 0, 1});
  EXPECT_NEAR(z[0], 0.0, 1e-15);
  EXPECT_NEAR(z[1], 0.0, 1e-15);
  EXPECT_NEAR(z[2], 1.0, 1e-15);
  const VecD y = r.apply(VecD{0, 1, 0});
  EXPECT_NEAR(y[0], -1.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
  const VecD x = r.apply(e1.vec());
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(ParallelTransport, MapsIsometricallyAndInvertsSymmetrically) {
  Rng rng(7);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t d = 3 + t % 4;
    const UnitVecD nu = sample_unit(d, rng), nv = sample_unit(d, rng), sig = sample_unit(d, rng);
    const RotationDescriptor r = parallel_transport_map(nu, nv, sig);
    const RotationDescriptor back = parallel_transport_map(nv, nu, sig);
    const VecD img = r.apply(nu);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(img[k], nv[k], 1e-10);
    const VecD x = random_vec(d, rng);
    const VecD rx = r.apply(x);
    EXPECT_NEAR(norm(rx), norm(x), 1e-12 * norm(x));
    const VecD rt = back.apply(rx);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(rt[k], x[k], 1e-10);
    const VecD ri = r.inverse().apply(rx);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(ri[k], x[k], 1e-10);
  }
}

TEST(ParallelTransport, AntipodalUsesSigmaPlane) {
  const UnitVecD nu({1, 0, 0}), sig({0.3, 0.0, 1.0});
  const RotationDescriptor r = parallel_transport_map(nu, -nu, sig);
  const VecD img = r.apply(nu);
  EXPECT_NEAR(img[0], -1.0, 1e-12);
  // The axis orthogonal to span(n_u, sigma) is fixed.
  const VecD y = r.apply(VecD{0, 1, 0});
  EXPECT_NEAR(y[1], 1.0, 1e-12);
}

TEST(CoupledDirections, IdenticalInputsGiveIdenticalOutputs) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const UnitVecD n = sample_unit(3 + t % 3, rng);
    const CoupledDirections c = coupled_post_directions(n, n, 1.3, rng);
    EXPECT_EQ(c.n_u_prime.vec(), c.n_v_prime.vec());
  }
}

TEST(CoupledDirections, InnerProductIdentityPerDraw) {
  // n'_u.n'_v - n_u.n_v = -sin^2(theta) sin^2(phi) (n_u.n_v - 1)
  Rng rng(9);
  double worst = 0.0;
  for (int t = 0; t < 1000000; ++t) {
    const std::size_t d = 3 + t % 3;
    const UnitVecD nu = sample_unit(d, rng), nv = sample_unit(d, rng);
    const double theta = kPi * uniform01(rng);
    const CoupledDirections c = coupled_post_directions(nu, nv, theta, rng);
    const double st = std::sin(theta), sp = std::sin(c.phi), cc = dot(nu, nv);
    const double res = dot(c.n_u_prime, c.n_v_prime) - cc + st * st * sp * sp * (cc - 1.0);
    worst = std::max(worst, std::abs(res));
    if (t % 1000 == 0) {
      EXPECT_NEAR(dot(c.n_u_prime, nu), std::cos(theta), 1e-12);
      EXPECT_NEAR(dot(c.n_v_prime, nv), std::cos(theta), 1e-12);
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(CoupledDirections, AntipodalPairStillSatisfiesIdentity) {
  Rng rng(10);
  const UnitVecD nu = sample_unit(4, rng);
  for (int t = 0; t < 1000; ++t) {
    const double theta = kPi * uniform01(rng);
    const CoupledDirections c = coupled_post_directions(nu, -nu, theta, rng);
    EXPECT_TRUE(c.antipodal);
    const double st = std::sin(theta), sp = std::sin(c.phi);
    EXPECT_NEAR(dot(c.n_u_prime, c.n_v_prime) + 1.0 + st * st * sp * sp * (-2.0), 0.0, 1e-10);
  }
}

TEST(CoupledDirections, MarginalMatchesSingleCopySampler) {
  Rng rng(11);
  const UnitVecD nu({0.0, 0.0, 1.0}), nv = UnitVecD({0.6, 0.0, 0.8});
  const UnitVecD probe({0.48, -0.6, 0.64});
  const double theta = 1.2;
  std::vector<double> a, b;
  for (int k = 0; k < 100000; ++k) {
    a.push_back(dot(coupled_post_directions(nu, nv, theta, rng).n_u_prime, probe));
    b.push_back(dot(sample_post_direction(nu, theta, rng).n_prime, probe));
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}
