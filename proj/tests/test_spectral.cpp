#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kac/analysis/spectral.hpp"
#include "kac/system.hpp"

using namespace kac;

namespace {

/// Largest eigenvalue by power iteration on A + shift I.
double power_iteration_max(const Matrix& a, double shift) {
  const std::size_t d = a.dim();
  std::vector<double> x(d, 1.0);
  for (std::size_t i = 0; i < d; ++i) x[i] += 0.01 * i;
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) y[i] += a(i, j) * x[j];
      y[i] += shift * x[i];
    }
    double n = 0.0;
    for (double v : y) n += v * v;
    n = std::sqrt(n);
    double r = 0.0;
    for (std::size_t i = 0; i < d; ++i) r += x[i] * y[i];
    double xx = 0.0;
    for (double v : x) xx += v * v;
    lambda = r / xx - shift;
    for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / n;
  }
  return lambda;
}

}  // namespace

TEST(MaxEigenvalue, DiagonalAndRotated) {
  EXPECT_NEAR(max_eigenvalue(Matrix::diagonal({0.5, 0.3, 0.2})), 0.5, 1e-15);
  Matrix m(2);
  m(0, 0) = 2.0;
  m(0, 1) = m(1, 0) = 1.0;
  m(1, 1) = 2.0;
  EXPECT_NEAR(max_eigenvalue(m), 3.0, 1e-14);
  const auto ev = symmetric_eigenvalues(m);
  EXPECT_NEAR(ev[0], 1.0, 1e-14);
}

TEST(MaxEigenvalue, MatchesPowerIteration) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Configuration c = sample_equilibrium(8, 3 + t % 4, rng);
    const Matrix s = second_moment(c);
    EXPECT_NEAR(max_eigenvalue(s), power_iteration_max(s, 1.0), 1e-9);
  }
}

TEST(MaxEigenvalue, RejectsAsymmetricInput) {
  Matrix m(2);
  m(0, 1) = 1.0;
  EXPECT_THROW(max_eigenvalue(m), BadParams);
}

TEST(Kappa, IsotropicValue) {
  for (std::size_t d : {2u, 3u, 5u, 32u})
    EXPECT_NEAR(kappa(Matrix::identity(d, 1.0 / d)), d / (d - 1.0), 1e-12);
}

TEST(Kappa, DiagonalExample) { EXPECT_NEAR(kappa(Matrix::diagonal({0.5, 0.3, 0.2})), 2.0, 1e-12); }

TEST(Kappa, RankOneIsInfinite) {
  EXPECT_EQ(kappa(Matrix::outer(std::vector<double>{0.6, 0.8, 0.0})), std::numeric_limits<double>::infinity());
  EXPECT_THROW(kappa(Matrix(3)), BadParams);
}

TEST(Kappa, LowerBoundOnRandomCovariances) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 2 + t % 6;
    const Configuration c = sample_equilibrium(d + 3, d, rng);
    EXPECT_GE(kappa(second_moment(c)), d / (d - 1.0) - 1e-12);
  }
}

TEST(Kappa, ScaleInvariant) {
  const Matrix m = Matrix::diagonal({3.0, 2.0, 1.0});
  EXPECT_NEAR(kappa(m), kappa(m * 7.5), 1e-13);
}

TEST(SecondMoment, TraceIsEnergy) {
  Rng rng(3);
  const Configuration c = sample_equilibrium(40, 3, rng);
  EXPECT_NEAR(second_moment(c).trace(), 1.0, 1e-13);
  EXPECT_TRUE(second_moment(c).is_symmetric());
  EXPECT_NEAR(cross_moment(c, c).trace(), 1.0, 1e-13);
}

TEST(TraceOfProduct, MatchesExplicitProduct) {
  Matrix a(2), b(2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  b(0, 0) = 5; b(0, 1) = 6; b(1, 0) = 7; b(1, 1) = 8;
  EXPECT_DOUBLE_EQ(trace_of_product(a, b), (a * b).trace());
  EXPECT_DOUBLE_EQ(trace_of_product(a, b), 69.0);
}
