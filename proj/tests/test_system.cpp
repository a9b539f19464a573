#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kac/analysis/inequalities.hpp"
#include "kac/configuration.hpp"
#include "kac/stats.hpp"
#include "kac/system.hpp"

using namespace kac;

namespace {

/// E<|V|^4>_N on the constraint sphere from |v_1|^2 = (N-1) B,
/// B ~ Beta(d/2, (N-2)d/2): (N-1)^2 a(a+1)/((a+b)(a+b+1)).
double dirichlet_m4(std::size_t n, std::size_t d) {
  const double a = 0.5 * d, b = 0.5 * (n - 2.0) * d, k = n - 1.0;
  return k * k * a * (a + 1.0) / ((a + b) * (a + b + 1.0));
}

double max_abs_mean(const Configuration& c) {
  double m = 0.0;
  for (double x : c.mean()) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(ProjectToConstraintSphere, IdempotentOnNormalizedInput) {
  Rng rng(1);
  const Configuration c = sample_equilibrium(20, 3, rng);
  const Configuration p = project_to_constraint_sphere(c);
  for (std::size_t k = 0; k < c.data().size(); ++k) EXPECT_NEAR(p.data()[k], c.data()[k], 1e-14);
}

TEST(ProjectToConstraintSphere, TwoParticleHandExample) {
  const Configuration p = project_to_constraint_sphere(Configuration(2, 3, {2, 0, 0, 0, 0, 0}));
  EXPECT_NEAR(p[0][0], 1.0, 1e-15);
  EXPECT_NEAR(p[1][0], -1.0, 1e-15);
  EXPECT_NEAR(p[0][1], 0.0, 1e-15);
}

TEST(ProjectToConstraintSphere, AllEqualIsDegenerate) {
  EXPECT_THROW(project_to_constraint_sphere(Configuration(3, 3, {1, 2, 3, 1, 2, 3, 1, 2, 3})), DegenerateInput);
}

TEST(SampleEquilibrium, SatisfiesConstraints) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Configuration c = sample_equilibrium(2 + t, 3 + t % 4, rng);
    EXPECT_LE(constraint_error(c), 1e-12);
  }
}

TEST(SampleEquilibrium, FourthMomentMatchesDirichletOracle) {
  const std::size_t n = 12, d = 3;
  EXPECT_NEAR(equilibrium_m4(n, d), dirichlet_m4(n, d), 1e-14);
  EXPECT_NEAR(equilibrium_m4(64, 3), 315.0 / 191.0, 1e-14);
  Rng rng(3);
  RunningStats s;
  for (int k = 0; k < 10000; ++k) s.add(sample_equilibrium(n, d, rng).m4());
  EXPECT_NEAR(s.mean(), dirichlet_m4(n, d), 3.0 * s.std_error());
}

TEST(SampleEquilibrium, LargeNFourthMomentNearGaussianLimit) {
  Rng rng(4);
  RunningStats s;
  for (int k = 0; k < 50; ++k) s.add(sample_equilibrium(4096, 3, rng).m4());
  EXPECT_NEAR(s.mean(), 5.0 / 3.0, 0.01 * 5.0 / 3.0);
}

TEST(StepKac, ZeroAngleEventsLeaveConfigurationUnchanged) {
  Rng rng(5);
  const AngularKernel k = AngularKernel::unnormalized_dirac(0.0, 1.0);
  KacState s{sample_equilibrium(16, 3, rng)};
  const Configuration c0 = s.config;
  for (int e = 0; e < 1000; ++e) step_kac(s, k, rng);
  for (std::size_t i = 0; i < c0.data().size(); ++i) EXPECT_NEAR(s.config.data()[i], c0.data()[i], 1e-13);
  EXPECT_EQ(s.events, 1000u);
}

TEST(StepKac, MomentumDriftStaysTinyOverManyEvents) {
  Rng rng(6);
  const AngularKernel k = AngularKernel::uniform(0.0);
  KacState s{sample_equilibrium(64, 3, rng)};
  double worst_mom = 0.0, worst_energy = 0.0;
  for (int e = 0; e < 1000000; ++e) {
    step_kac(s, k, rng);
    if (e % 997 == 0) {
      worst_mom = std::max(worst_mom, max_abs_mean(s.config));
      worst_energy = std::max(worst_energy, std::abs(s.config.m2() - 1.0));
    }
  }
  EXPECT_LE(worst_mom, 1e-13);
  EXPECT_LE(worst_energy, 1e-12);
}

TEST(StepKac, PerParticleCollisionRate) {
  // Every event involves two particles: participations per particle per unit
  // time = 2 (N-1) b0/2 / N = (N-1) b0 / N.
  Rng rng(7);
  const AngularKernel k = AngularKernel::uniform(0.0);
  const std::size_t n = 10;
  KacState s{sample_equilibrium(n, 3, rng)};
  const double horizon = 2000.0;
  std::vector<double> count(n, 0.0);
  StepOptions opt;
  opt.on_event = [&](const CollisionEvent& e) {
    count[e.first] += 1.0;
    count[e.second] += 1.0;
  };
  simulate(s, k, SampleGrid{horizon, horizon}, rng, [](double, const KacState&) {}, opt);
  const double rate = (n - 1.0) * k.total_rate() / n;
  double total = 0.0;
  for (double c : count) total += c;
  const double per_particle = total / n / horizon;
  // Total participations = 2 x Poisson((N-1) b0/2 T).
  const double sigma = 2.0 * std::sqrt(0.5 * (n - 1.0) * k.total_rate() * horizon) / n / horizon;
  EXPECT_NEAR(per_particle, rate, 3.0 * sigma);
  for (double c : count) EXPECT_NEAR(c / horizon, rate, 6.0 * std::sqrt(rate / horizon));
}

TEST(StepCoupled, IdenticalCopiesStayIdentical) {
  Rng rng(8);
  const AngularKernel k = AngularKernel::uniform(0.0);
  const Configuration u = sample_equilibrium(32, 3, rng);
  CoupledState s = make_coupled_state(u, u);
  for (std::size_t i = 0; i < 32; ++i) ASSERT_EQ(s.pairing[i], i);
  for (int e = 0; e < 20000; ++e) step_coupled(s, k, rng);
  EXPECT_EQ(s.u, s.v);
}

TEST(StepCoupled, ZeroAngleEventsLeaveBothCopiesUnchanged) {
  Rng rng(9);
  const AngularKernel k = AngularKernel::unnormalized_dirac(0.0, 1.0);
  CoupledState s = make_coupled_state(sample_equilibrium(16, 3, rng), sample_equilibrium(16, 3, rng));
  const Configuration u0 = s.u, v0 = s.v;
  for (int e = 0; e < 1000; ++e) step_coupled(s, k, rng);
  for (std::size_t i = 0; i < u0.data().size(); ++i) {
    EXPECT_NEAR(s.u.data()[i], u0.data()[i], 1e-13);
    EXPECT_NEAR(s.v.data()[i], v0.data()[i], 1e-13);
  }
}

TEST(StepCoupled, ContractionIdentityAndMonotoneDistance) {
  Rng rng(10);
  for (const AngularKernel& k : {AngularKernel::uniform(0.0), AngularKernel::power_law(1.0, 0.05),
                                 AngularKernel::dirac(std::numbers::pi / 2)}) {
    CoupledState s = make_coupled_state(sample_equilibrium(24, 4, rng), sample_equilibrium(24, 4, rng));
    double worst = 0.0, prev = mean_sq_distance(s.u, s.v, s.pairing);
    for (int e = 0; e < 100000; ++e) {
      const CoupledStepResult r = step_coupled(s, k, rng);
      worst = std::max(worst, std::abs(r.residual));
      EXPECT_LE(r.distance_change, 1e-12);
      EXPECT_LE(r.conservation_error, 1e-12);
      if (e % 1000 == 0) {
        const double now = mean_sq_distance(s.u, s.v, s.pairing);
        EXPECT_LE(now, prev + 1e-12);
        prev = now;
      }
    }
    EXPECT_LE(worst, 1e-9);
  }
}

TEST(StepCoupled, GeneratorMatchesCouplingCreation) {
  // rate x E[single-event decrement of <|u - v o sigma|^2>_N] = C_2(u, v o sigma)
  Rng rng(11);
  const AngularKernel k = AngularKernel::uniform(0.0);
  const std::size_t n = 12;
  const CoupledState frozen = make_coupled_state(sample_equilibrium(n, 3, rng), sample_equilibrium(n, 3, rng));
  const double d0 = mean_sq_distance(frozen.u, frozen.v, frozen.pairing);
  const double rate = total_event_rate(n, k);
  RunningStats dec;
  for (int t = 0; t < 100000; ++t) {
    CoupledState s = frozen;
    step_coupled(s, k, rng);
    dec.add(rate * (d0 - mean_sq_distance(s.u, s.v, s.pairing)));
  }
  const double c2 = coupling_creation(frozen.u, frozen.v, frozen.pairing);
  EXPECT_NEAR(dec.mean(), c2, 3.0 * dec.std_error());
}

TEST(InitialPairing, RecoversKnownPermutation) {
  Rng rng(12);
  const Configuration u = sample_equilibrium(30, 3, rng);
  Permutation sigma = identity_permutation(30);
  std::shuffle(sigma.begin(), sigma.end(), rng);
  // v o sigma = u  <=>  v[sigma[i]] = u[i]
  Configuration v(30, 3);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t k = 0; k < 3; ++k) v[sigma[i]][k] = u[i][k];
  const Permutation p = initial_pairing(u, v);
  EXPECT_NEAR(mean_sq_distance(u, v, p), 0.0, 1e-15);
  EXPECT_EQ(p, sigma);
}

TEST(InitialPairing, CorrelationIsNonNegative) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const Configuration u = sample_equilibrium(16, 3, rng), v = sample_equilibrium(16, 3, rng);
    EXPECT_GE(mean_correlation(u, v, initial_pairing(u, v)), -1e-12);
  }
}

TEST(Simulate, ZeroHorizonGivesInitialSnapshotOnly) {
  Rng rng(14);
  KacState s{sample_equilibrium(8, 3, rng)};
  std::vector<double> seen;
  const SimulationSummary sum =
      simulate(s, AngularKernel::uniform(0.0), SampleGrid{0.0, 1.0}, rng, [&](double t, const KacState&) { seen.push_back(t); });
  EXPECT_EQ(seen, std::vector<double>{0.0});
  EXPECT_EQ(sum.events, 0u);
}

TEST(Simulate, IdenticalSeedsGiveIdenticalEventStreams) {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    CoupledState s = make_coupled_state(sample_equilibrium(16, 3, rng), sample_equilibrium(16, 3, rng));
    std::vector<CollisionEvent> events;
    StepOptions opt;
    opt.on_event = [&](const CollisionEvent& e) { events.push_back(e); };
    simulate(s, AngularKernel::uniform(0.0), SampleGrid{5.0, 1.0}, rng, [](double, const CoupledState&) {}, opt);
    return std::pair{events, s.v};
  };
  const auto a = run(99), b = run(99), c = run(100);
  EXPECT_FALSE(a.first.empty());
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, c.first);
}

TEST(Simulate, CoupledDistanceSeriesIsNonIncreasing) {
  Rng rng(15);
  CoupledState s = make_coupled_state(sample_equilibrium(64, 3, rng), sample_equilibrium(64, 3, rng));
  std::vector<double> dist;
  std::vector<double> corr;
  simulate(s, AngularKernel::uniform(0.0), SampleGrid{10.0, 0.25}, rng, [&](double, const CoupledState& st) {
    dist.push_back(mean_sq_distance(st.u, st.v, st.pairing));
    corr.push_back(mean_correlation(st.u, st.v, st.pairing));
  });
  ASSERT_EQ(dist.size(), 41u);
  for (std::size_t k = 1; k < dist.size(); ++k) EXPECT_LE(dist[k], dist[k - 1] + 1e-12);
  for (double c : corr) EXPECT_GE(c, -1e-12);
  EXPECT_LT(dist.back(), dist.front());
}

TEST(Simulate, SamplesSeeEventsUpToTheirTime) {
  Rng rng(16);
  KacState s{sample_equilibrium(8, 3, rng)};
  std::vector<double> event_times;
  StepOptions opt;
  opt.on_event = [&](const CollisionEvent& e) { event_times.push_back(e.time); };
  std::vector<std::pair<double, std::uint64_t>> snaps;
  simulate(s, AngularKernel::uniform(0.0), SampleGrid{3.0, 0.5}, rng,
           [&](double t, const KacState& st) { snaps.emplace_back(t, st.events); }, opt);
  for (const auto& [t, n] : snaps) {
    const auto expected = std::count_if(event_times.begin(), event_times.end(), [t = t](double x) { return x <= t; });
    EXPECT_EQ(n, static_cast<std::uint64_t>(expected)) << t;
  }
}

TEST(Stationarity, FourthMomentHasNoDriftAtEquilibrium) {
  Rng rng(17);
  const AngularKernel k = AngularKernel::uniform(0.0);
  RunningStats drift;
  for (int r = 0; r < 400; ++r) {
    KacState s{sample_equilibrium(32, 3, rng)};
    std::vector<double> m4;
    simulate(s, k, SampleGrid{2.0, 2.0}, rng, [&](double, const KacState& st) { m4.push_back(st.config.m4()); });
    drift.add(m4.back() - m4.front());
  }
  EXPECT_NEAR(drift.mean(), 0.0, 3.0 * drift.std_error());
}

TEST(CollisionEvent, SerializesToJson) {
  CollisionEvent e{1.5, 2, 7, 0.3, 1.2, {0.0, 0.0, 1.0}};
  const nlohmann::json j = e;
  EXPECT_EQ(j["pair"][1], 7);
  EXPECT_DOUBLE_EQ(j["theta"].get<double>(), 0.3);
}
