#pragma once

// Experiment drivers behind `kac run`: the coupled decay study, the
// inequality sweep and the support studies (Wishart moments, the two
// counterexamples, the equilibrium m4 check). Each writes CSV tables and a
// report.json into the configured output directory.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "kac/analysis/constants.hpp"
#include "kac/analysis/counterexamples.hpp"
#include "kac/analysis/inequalities.hpp"
#include "kac/assignment.hpp"
#include "kac/cli/config.hpp"
#include "kac/cli/trajectory.hpp"
#include "kac/configuration.hpp"
#include "kac/rng.hpp"
#include "kac/stats.hpp"
#include "kac/system.hpp"

namespace kac {

/// Substream index reserved for the k_main estimate of a decay run.
inline constexpr std::uint64_t kConstantsSubstream = 1ULL << 40;

/// Run f(0), ..., f(count-1) on up to `threads` workers (0 = hardware
/// concurrency). Results must be stored by index. The exception of the
/// lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < count;) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
          failed = true;
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Half the particles from a hot Gaussian with energy 1 + x, half from a
/// cold one with energy 1 - x, x = sqrt(m4 d/(d+2) - 1), then projected.
/// Before projection E|V|^4 = m4.
inline Configuration sample_two_temperature(std::size_t n, std::size_t d, double m4, Rng& rng) {
  const double dd = static_cast<double>(d);
  const double x2 = m4 * dd / (dd + 2.0) - 1.0;
  if (!(x2 >= 0.0 && x2 < 1.0)) throw BadParams("sample_two_temperature: m4 must lie in [(d+2)/d, 2(d+2)/d)");
  const double x = std::sqrt(x2);
  for (;;) {
    Configuration c(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const double sd = std::sqrt((i < n / 2 ? 1.0 + x : 1.0 - x) / dd);
      auto row = c[i];
      fill_standard_normal(row, rng);
      for (double& y : row) y *= sd;
    }
    try {
      return project_to_constraint_sphere(std::move(c));
    } catch (const DegenerateInput&) {
    }
  }
}

inline Configuration sample_initial_law(const ExperimentConfig& cfg, const Configuration& u0, Rng& rng) {
  switch (cfg.initial_law) {
    case InitialLaw::two_temperature: return sample_two_temperature(cfg.n, cfg.d, cfg.initial_m4, rng);
    case InitialLaw::equilibrium: return sample_equilibrium(cfg.n, cfg.d, rng);
    case InitialLaw::copy: return u0;
  }
  return u0;
}

struct Assertion {
  std::string name;
  bool passed = true;
  std::string detail;
};

inline void to_json(nlohmann::json& j, const Assertion& a) {
  j = nlohmann::json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}};
}

struct ExperimentOutcome {
  nlohmann::json report;
  std::vector<Assertion> assertions;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
  }
};

namespace detail {

inline std::filesystem::path prepare_output(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.output);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_report(const std::filesystem::path& dir, ExperimentOutcome& out) {
  out.report["assertions"] = out.assertions;
  out.report["passed"] = out.passed();
  std::ofstream f(dir / "report.json");
  f << out.report.dump(2) << '\n';
}

inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace detail

/// One coupled replica: U_0 ~ pi_infinity, V_0 from the configured law,
/// optimal initial pairing, observables at every grid time.
inline TrajectoryRecord run_coupled_replica(const ExperimentConfig& cfg, const AngularKernel& kernel,
                                            std::size_t replica, const StepOptions& opt = {}) {
  Rng rng = make_substream(cfg.seed, replica);
  Configuration u0 = sample_equilibrium(cfg.n, cfg.d, rng);
  Configuration v0 = sample_initial_law(cfg, u0, rng);
  CoupledState s = make_coupled_state(std::move(u0), std::move(v0));
  TrajectoryRecord rec;
  rec.replica = static_cast<long>(replica);
  rec.substream = static_cast<long>(replica);
  rec.summary = simulate(
      s, kernel, SampleGrid{cfg.horizon, cfg.sample_dt}, rng,
      [&](double t, const CoupledState& st) { rec.samples.push_back(observe_coupled(t, st, cfg.delta, cfg.p)); },
      opt);
  return rec;
}

/// m4 trajectory of an uncoupled Kac run from the configured initial law.
inline std::vector<double> run_kac_m4_replica(const ExperimentConfig& cfg, const AngularKernel& kernel,
                                              std::uint64_t substream) {
  Rng rng = make_substream(cfg.seed, substream);
  const Configuration u0 = sample_equilibrium(cfg.n, cfg.d, rng);
  KacState s{sample_initial_law(cfg, u0, rng)};
  std::vector<double> m4;
  simulate(s, kernel, SampleGrid{cfg.horizon, cfg.sample_dt}, rng,
           [&](double, const KacState& st) { m4.push_back(st.config.m4()); });
  return m4;
}

/// (D_0^{-1/delta} + c (t - t_*)^+)^{-delta}
inline double power_law_envelope(double d0, double c, double delta, double t_star, double t) {
  if (!(d0 > 0.0)) return 0.0;
  return std::pow(std::pow(d0, -1.0 / delta) + c * std::max(0.0, t - t_star), -delta);
}

inline ExperimentOutcome run_decay_experiment(const ExperimentConfig& cfg) {
  const AngularKernel kernel = make_kernel(cfg.kernel);
  Rng crng = make_substream(cfg.seed, kConstantsSubstream);
  const HolderConstants hc = k_main_estimate(cfg.delta, cfg.p, cfg.q, cfg.n, cfg.d, cfg.kmain_samples, crng);

  std::vector<TrajectoryRecord> records(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads,
               [&](std::size_t r) { records[r] = run_coupled_replica(cfg, kernel, r); });
  std::vector<TrajectorySample> agg = aggregate(records);

  double d0 = 0.0, m4_0 = 0.0;
  if (!agg.empty()) {
    d0 = agg.front().mean_sq_distance;
    m4_0 = agg.front().m4;
  } else {
    Rng rng = make_substream(cfg.seed, 0);
    const Configuration u0 = sample_equilibrium(cfg.n, cfg.d, rng);
    const Configuration v0 = sample_initial_law(cfg, u0, rng);
    d0 = mean_sq_distance(u0, v0, initial_pairing(u0, v0));
    m4_0 = v0.m4();
  }
  const double t_star = order4_bound(m4_0, cfg.d, 0.0).t_star;
  const std::vector<double> times = SampleGrid{cfg.horizon, cfg.sample_dt}.times();
  if (agg.empty()) {
    agg.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      agg[k] = TrajectorySample{times[k], nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan};
      agg[k].mean_sq_distance_stderr = agg[k].m4_stderr = nan;
    }
  }
  for (auto& a : agg) a.envelope = power_law_envelope(d0, hc.c_delta_n, cfg.delta, t_star, a.time);

  const auto dir = detail::prepare_output(cfg);
  for (const auto& rec : records) {
    std::ofstream f(dir / ("trajectory_" + std::to_string(rec.replica) + ".csv"));
    f << kTrajectoryHeader << '\n';
    for (auto x : rec.samples) {
      x.envelope = power_law_envelope(d0, hc.c_delta_n, cfg.delta, t_star, x.time);
      write_trajectory_row(f, rec.replica, rec.substream, x);
    }
  }
  {
    std::ofstream f(dir / "aggregate.csv");
    f << kTrajectoryHeader << '\n';
    for (const auto& a : agg) write_trajectory_row(f, -1, -1, a);
  }

  ExperimentOutcome out;
  out.report = {{"experiment", "decay"},
                {"config", cfg},
                {"constants",
                 {{"delta", hc.delta},
                  {"p", hc.p},
                  {"q", hc.q},
                  {"k1", hc.k1},
                  {"k2", hc.k2},
                  {"k_main", hc.k_main},
                  {"k_main_stderr", hc.k_main_stderr},
                  {"c_delta_N", hc.c_delta_n},
                  {"c_delta_N_stderr", hc.c_delta_n_stderr},
                  {"samples", hc.samples},
                  {"substream", kConstantsSubstream}}},
                {"D0", d0},
                {"m4_0", m4_0},
                {"t_star", t_star}};

  if (!records.empty()) {
    std::uint64_t events = 0;
    double max_res = 0.0, max_dchange = -std::numeric_limits<double>::infinity(), max_cons = 0.0;
    for (const auto& r : records) {
      events += r.summary.events;
      max_res = std::max(max_res, r.summary.max_abs_residual);
      max_dchange = std::max(max_dchange, r.summary.max_distance_change);
      max_cons = std::max(max_cons, r.summary.max_conservation_error);
    }
    out.report["events"] = events;
    out.report["max_abs_residual"] = max_res;
    out.report["max_distance_change"] = detail::finite_or_null(max_dchange);
    out.report["max_conservation_error"] = max_cons;
    const double d_end = agg.back().mean_sq_distance;
    out.report["final_mean_sq_distance"] = d_end;
    out.report["decay_factor"] = detail::finite_or_null(d_end > 0.0 ? d0 / d_end : std::numeric_limits<double>::infinity());

    Assertion mono{"monotone_mean_sq_distance", true, "aggregate mean distance non-increasing at every sample"};
    for (std::size_t k = 1; k < agg.size(); ++k) {
      const double prev = agg[k - 1].mean_sq_distance;
      if (agg[k].mean_sq_distance > prev + 1e-12 * std::max(1.0, prev)) {
        mono.passed = false;
        mono.detail = "increase at t = " + csv_number(agg[k].time);
        break;
      }
    }
    Assertion weak{"pathwise_weak_inequality", true, "slack >= -tolerance at every sample of every replica"};
    double min_slack = std::numeric_limits<double>::infinity();
    std::size_t zero_over_zero = 0;
    for (const auto& r : records)
      for (const auto& x : r.samples) {
        if (x.zero_over_zero) ++zero_over_zero;
        if (std::isnan(x.weak_slack) || x.weak_slack < -cfg.tolerance) {
          if (weak.passed)
            weak.detail = "violated at replica " + std::to_string(r.replica) + ", t = " + csv_number(x.time);
          weak.passed = false;
        }
        if (!std::isnan(x.weak_slack)) min_slack = std::min(min_slack, x.weak_slack);
      }
    out.report["min_weak_slack"] = detail::finite_or_null(min_slack);
    out.report["zero_over_zero_samples"] = zero_over_zero;

    Assertion corr{"positive_correlation", true, "<u.v>_N >= -1e-12 throughout"};
    double min_corr = std::numeric_limits<double>::infinity();
    for (const auto& a : agg) min_corr = std::min(min_corr, a.min_corr);
    if (min_corr < -1e-12) {
      corr.passed = false;
      corr.detail = "min correlation " + csv_number(min_corr);
    }
    out.report["min_correlation"] = min_corr;

    Assertion m4b{"order4_bound", true, "ensemble m4 <= e^{-t/2}(m4_0 - (d+2)/d) + (d+2)/d + 3 stderr"};
    for (const auto& a : agg) {
      const double b = order4_bound(m4_0, cfg.d, a.time).bound;
      if (a.m4 > b + 3.0 * a.m4_stderr + 1e-12) {
        m4b.passed = false;
        m4b.detail = "exceeded at t = " + csv_number(a.time);
        break;
      }
    }

    std::vector<double> ts, m4s;
    for (const auto& a : agg) {
      ts.push_back(a.time);
      m4s.push_back(a.m4);
    }
    const double gamma = 0.25 + 0.25 / cfg.delta;
    Assertion cons{"cons4_time_integral", true, "int_0^t m4^{-gamma} >= ((2d+4)/d)^{-gamma}(t - t_*)^+"};
    for (const auto& [integral, bound] : cons4_check(ts, m4s, gamma, cfg.d, t_star))
      if (integral < bound * (1.0 - 1e-12)) {
        cons.passed = false;
        break;
      }

    std::size_t below = 0;
    for (const auto& a : agg)
      if (a.mean_sq_distance <= a.envelope + 3.0 * a.mean_sq_distance_stderr) ++below;
    out.report["samples_at_or_below_envelope"] = below;
    out.report["samples"] = agg.size();

    out.assertions = {mono, weak, corr, m4b, cons};
  }
  detail::write_report(dir, out);
  return out;
}

namespace detail {

/// Random discrete law with 3..16 atoms; V independent of, linearly
/// correlated with, or radially co-linear to U.
inline DiscreteCoupledDistribution random_coupled_distribution(std::size_t d, Rng& rng) {
  std::uniform_int_distribution<int> katoms(3, 16), kmode(0, 2);
  std::exponential_distribution<double> wdist(1.0);
  const int k = katoms(rng), mode = kmode(rng);
  const double rho = 2.0 * uniform01(rng) - 1.0;
  DiscreteCoupledDistribution dist(d);
  for (int a = 0; a < k; ++a) {
    CoupledAtom atom{VecD(d), VecD(d), wdist(rng)};
    fill_standard_normal(atom.u, rng);
    if (mode == 0) {
      fill_standard_normal(atom.v, rng);
    } else if (mode == 1) {
      fill_standard_normal(atom.v, rng);
      for (std::size_t i = 0; i < d; ++i) atom.v[i] = rho * atom.u[i] + std::sqrt(1.0 - rho * rho) * atom.v[i];
    } else {
      const double f = 0.2 + 2.0 * uniform01(rng);
      for (std::size_t i = 0; i < d; ++i) atom.v[i] = f * atom.u[i];
    }
    dist.add(std::move(atom));
  }
  dist.normalize();
  return dist;
}

/// Constrained pair (u, v o sigma) with sigma the optimal pairing, so that
/// <u.v>_N >= 0.
inline std::pair<Configuration, Configuration> random_particle_pair(std::size_t n, std::size_t d, Rng& rng) {
  std::uniform_int_distribution<int> kmode(0, 2);
  const int mode = kmode(rng);
  Configuration u = sample_equilibrium(n, d, rng);
  Configuration v(n, d);
  if (mode == 0) {
    v = sample_equilibrium(n, d, rng);
  } else if (mode == 1) {
    v = sample_two_temperature(n, d, 1.0 + 2.0 / static_cast<double>(d) + 1.5 * uniform01(rng), rng);
  } else {
    Configuration raw(n, d);
    fill_standard_normal(raw.data(), rng);
    const double eps = std::pow(10.0, -3.0 * uniform01(rng));
    for (std::size_t k = 0; k < raw.data().size(); ++k) raw.data()[k] = u.data()[k] + eps * raw.data()[k];
    v = project_to_constraint_sphere(std::move(raw));
  }
  Configuration aligned = permuted(v, optimal_pairing(u, v));
  return {std::move(u), std::move(aligned)};
}

struct SlackTally {
  std::string name;
  std::string kind;
  std::size_t count = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double max_abs_slack = 0.0;

  void add(const InequalityReport& r) {
    ++count;
    min_slack = std::min(min_slack, r.slack);
    max_abs_slack = std::max(max_abs_slack, std::abs(r.slack));
  }
};

}  // namespace detail

/// Equality instances: U = V uniform on {+-e_i}; U = V strongly isotropic
/// two-radius law; C_UU = C_VV = C_UV = Id/d; C_UV = 0 with Id/d covariances;
/// the area identity on a co-linear law; u = v for the weak inequality.
inline std::vector<InequalityReport> equality_cases(std::size_t d, std::size_t n, double delta, double p,
                                                    Rng& rng) {
  std::vector<InequalityReport> out;
  const double dd = static_cast<double>(d);

  DiscreteCoupledDistribution cube(d);
  for (std::size_t i = 0; i < d; ++i)
    for (double s : {1.0, -1.0}) {
      VecD e(d, 0.0);
      e[i] = s;
      cube.add({e, e, 1.0 / (2.0 * dd)});
    }
  InequalityReport r = fund_inequality_report(cube);
  r.name = "fund_inequality[U=V on +-e_i]";
  out.push_back(r);

  const double r1 = 0.5, w1 = 0.4, w2 = 0.6, r2 = std::sqrt((1.0 - w1 * r1 * r1) / w2);
  DiscreteCoupledDistribution two(d);
  for (auto [rad, w] : {std::pair{r1, w1}, std::pair{r2, w2}})
    for (std::size_t i = 0; i < d; ++i)
      for (double s : {1.0, -1.0}) {
        VecD e(d, 0.0);
        e[i] = s * rad;
        two.add({e, e, w / (2.0 * dd)});
      }
  r = fund_inequality_report(two);
  r.name = "fund_inequality[co-linear two-radius, |U|=|V|]";
  out.push_back(r);

  const Matrix id = Matrix::identity(d, 1.0 / dd);
  r = trace_inequality_report(id, id, id);
  r.name = "trace_inequality[C_UU=C_VV=C_UV=Id/d]";
  out.push_back(r);
  r = trace_inequality_report(id, id, Matrix(d));
  r.name = "trace_inequality[C_UV=0]";
  out.push_back(r);

  r = area_decomposition_report(two);
  r.name = "area_decomposition[co-linear two-radius]";
  out.push_back(r);

  const Configuration u = sample_equilibrium(n, d, rng);
  r = pathwise_weak_inequality(u, u, delta, p);
  r.name = "pathwise_weak_inequality[u=v]";
  out.push_back(r);
  return out;
}

inline ExperimentOutcome run_inequality_sweep(const ExperimentConfig& cfg) {
  using detail::SlackTally;
  SlackTally fund{"fund_inequality", "random"}, trace{"trace_inequality", "random"},
      area{"area_decomposition", "random"}, sharp{"fund_inequality_half_rhs", "random"};
  SlackTally pfund{"fund_inequality", "particle"}, ptrace{"trace_inequality", "particle"},
      parea{"area_decomposition", "particle"}, pweak{"pathwise_weak_inequality", "particle"};

  Rng rng = make_substream(cfg.seed, 0);
  for (std::size_t i = 0; i < cfg.instances; ++i) {
    const DiscreteCoupledDistribution dist = detail::random_coupled_distribution(cfg.d, rng);
    const InequalityReport f = fund_inequality_report(dist);
    fund.add(f);
    sharp.add(InequalityReport::make("", f.lhs, f.aux.at("sharp_rhs")));
    trace.add(trace_inequality_report(dist));
    area.add(area_decomposition_report(dist));
  }
  Rng prng = make_substream(cfg.seed, 1);
  for (std::size_t i = 0; i < cfg.particle_instances; ++i) {
    const auto [u, v] = detail::random_particle_pair(cfg.n, cfg.d, prng);
    const DiscreteCoupledDistribution dist = DiscreteCoupledDistribution::empirical(u, v);
    pfund.add(fund_inequality_report(dist));
    ptrace.add(trace_inequality_report(dist));
    parea.add(area_decomposition_report(dist));
    pweak.add(pathwise_weak_inequality(u, v, cfg.delta, cfg.p));
  }

  std::vector<InequalityReport> equalities;
  if (cfg.instances + cfg.particle_instances > 0) {
    Rng erng = make_substream(cfg.seed, 2);
    equalities = equality_cases(cfg.d, cfg.n, cfg.delta, cfg.p, erng);
  }

  const auto dir = detail::prepare_output(cfg);
  ExperimentOutcome out;
  out.report = {{"experiment", "inequalities"}, {"config", cfg}};
  std::vector<SlackTally> proven = {fund, trace, area, pfund, ptrace, parea, pweak};
  {
    std::ofstream f(dir / "table.csv");
    f << "name,kind,count,min_slack,max_abs_slack\n";
    auto row = [&](const SlackTally& t) {
      f << t.name << ',' << t.kind << ',' << t.count << ',' << csv_number(t.count ? t.min_slack : 0.0) << ','
        << csv_number(t.max_abs_slack) << '\n';
    };
    for (const auto& t : proven) row(t);
    row(sharp);
    for (const auto& e : equalities) {
      SlackTally t{e.name, "equality"};
      t.add(e);
      row(t);
    }
  }
  nlohmann::json tallies = nlohmann::json::array();
  for (const auto& t : proven) {
    if (t.count == 0) continue;
    tallies.push_back({{"name", t.name}, {"kind", t.kind}, {"count", t.count}, {"min_slack", t.min_slack}});
    out.assertions.push_back({t.name + "[" + t.kind + "]", t.min_slack >= -cfg.tolerance,
                              "min slack " + csv_number(t.min_slack)});
  }
  out.report["tallies"] = tallies;
  if (sharp.count > 0)
    out.report["half_rhs_min_slack"] = sharp.min_slack;
  out.report["equality_cases"] = equalities;
  for (const auto& e : equalities)
    out.assertions.push_back({e.name, std::abs(e.slack) <= cfg.tolerance, "slack " + csv_number(e.slack)});
  detail::write_report(dir, out);
  return out;
}

inline ExperimentOutcome run_wishart_study(const ExperimentConfig& cfg) {
  const double bound = (static_cast<double>(cfg.d) - 1.0) / static_cast<double>(cfg.d);
  std::vector<MonteCarloEstimate> est(cfg.n_values.size());
  parallel_for(est.size(), cfg.threads, [&](std::size_t i) {
    Rng rng = make_substream(cfg.seed, i);
    est[i] = wishart_kappa_moment(cfg.n_values[i], cfg.d, cfg.wishart_p, cfg.samples, rng);
  });
  const auto dir = detail::prepare_output(cfg);
  ExperimentOutcome out;
  out.report = {{"experiment", "wishart"}, {"config", cfg}, {"limit", bound}};
  Assertion below{"estimate_below_limit", true, "estimate <= (d-1)/d + 3 stderr for every N"};
  nlohmann::json rows = nlohmann::json::array();
  std::ofstream f(dir / "table.csv");
  f << "substream,N,d,p,estimate,stderr,limit\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    f << i << ',' << cfg.n_values[i] << ',' << cfg.d << ',' << csv_number(cfg.wishart_p) << ','
      << csv_number(est[i].value) << ',' << csv_number(est[i].std_error) << ',' << csv_number(bound) << '\n';
    rows.push_back({{"N", cfg.n_values[i]}, {"estimate", est[i].value}, {"stderr", est[i].std_error}});
    if (est[i].value > bound + 3.0 * est[i].std_error) {
      below.passed = false;
      below.detail = "exceeded at N = " + std::to_string(cfg.n_values[i]);
    }
  }
  out.report["rows"] = rows;
  out.report["relative_gap_at_largest_N"] = (bound - est.back().value) / bound;
  out.assertions = {below};
  detail::write_report(dir, out);
  return out;
}

inline ExperimentOutcome run_counterexample1(const ExperimentConfig& cfg) {
  Rng rng = make_substream(cfg.seed, 0);
  const auto rows = counterexample_heavy_tail(cfg.m_values, cfg.q_moment, cfg.d, cfg.samples, rng);
  const auto dir = detail::prepare_output(cfg);
  ExperimentOutcome out;
  out.report = {{"experiment", "counterexample1"}, {"config", cfg}};
  std::ofstream f(dir / "table.csv");
  f << "substream,M,m_q,mean_sq_distance,mean_sq_distance_stderr,creation,creation_stderr\n";
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows) {
    f << 0 << ',' << csv_number(r.M) << ',' << csv_number(r.m_q) << ',' << csv_number(r.mean_sq_distance) << ','
      << csv_number(r.mean_sq_distance_stderr) << ',' << csv_number(r.creation) << ','
      << csv_number(r.creation_stderr) << '\n';
    jrows.push_back({{"M", r.M},
                     {"m_q", r.m_q},
                     {"mean_sq_distance", r.mean_sq_distance},
                     {"mean_sq_distance_stderr", r.mean_sq_distance_stderr},
                     {"creation", r.creation},
                     {"creation_stderr", r.creation_stderr}});
  }
  out.report["rows"] = jrows;
  Assertion dec{"creation_decreasing", true, "creation drops by more than 3 combined stderr between rows"};
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double se = std::hypot(rows[k].creation_stderr, rows[k - 1].creation_stderr);
    if (!(rows[k - 1].creation - rows[k].creation > 3.0 * se)) {
      dec.passed = false;
      dec.detail = "not decreasing at M = " + csv_number(rows[k].M);
    }
  }
  out.assertions = {dec};
  detail::write_report(dir, out);
  return out;
}

inline ExperimentOutcome run_counterexample2(const ExperimentConfig& cfg) {
  Rng rng = make_substream(cfg.seed, 0);
  const auto rows = counterexample_radial_band(cfg.r_minus_values, cfg.band_eps, cfg.d, cfg.samples, rng);
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.r_minus);
    ys.push_back(r.ratio);
  }
  const bool positive = std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; });
  const double slope = positive ? log_log_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
  const auto dir = detail::prepare_output(cfg);
  ExperimentOutcome out;
  out.report = {{"experiment", "counterexample2"}, {"config", cfg}, {"log_log_slope", detail::finite_or_null(slope)}};
  std::ofstream f(dir / "table.csv");
  f << "substream,r_minus,r_plus,band_probability,band_radius,mean_sq_distance,ratio,ratio_stderr\n";
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows) {
    f << 0 << ',' << csv_number(r.r_minus) << ',' << csv_number(r.r_plus) << ',' << csv_number(r.band_probability)
      << ',' << csv_number(r.band_radius) << ',' << csv_number(r.mean_sq_distance) << ',' << csv_number(r.ratio)
      << ',' << csv_number(r.ratio_stderr) << '\n';
    jrows.push_back({{"r_minus", r.r_minus},
                     {"band_probability", r.band_probability},
                     {"band_radius", r.band_radius},
                     {"mean_sq_distance", r.mean_sq_distance},
                     {"ratio", r.ratio},
                     {"ratio_stderr", r.ratio_stderr}});
  }
  out.report["rows"] = jrows;
  out.assertions = {{"log_log_slope_in_[-3,-1]", slope >= -3.0 && slope <= -1.0, "slope " + csv_number(slope)}};
  detail::write_report(dir, out);
  return out;
}

/// Long-run m4 of Kac runs started from the configured initial law, and m4 of
/// direct draws from pi_infinity, against (N-1)(d+2)/((N-1)d+2).
inline ExperimentOutcome run_equilibrium_check(const ExperimentConfig& cfg) {
  const AngularKernel kernel = make_kernel(cfg.kernel);
  std::vector<double> direct(cfg.replicas), dynamic(cfg.replicas), start(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    Rng rng = make_substream(cfg.seed, r);
    direct[r] = sample_equilibrium(cfg.n, cfg.d, rng).m4();
    KacState s{sample_initial_law(cfg, sample_equilibrium(cfg.n, cfg.d, rng), rng)};
    start[r] = s.config.m4();
    simulate(s, kernel, SampleGrid{cfg.horizon, std::max(cfg.horizon, 1e-300)}, rng,
             [&](double t, const KacState& st) {
               if (t == cfg.horizon) dynamic[r] = st.config.m4();
             });
  });
  const double exact = equilibrium_m4(cfg.n, cfg.d);
  const RunningStats sd = summarize(direct), sdyn = summarize(dynamic), s0 = summarize(start);
  // Residual transient of the order-4 relaxation at the horizon.
  const double bias = std::exp(-0.5 * cfg.horizon) * std::abs(s0.mean() - exact);

  const auto dir = detail::prepare_output(cfg);
  std::ofstream f(dir / "table.csv");
  f << "replica,substream,m4_direct,m4_initial,m4_horizon\n";
  for (std::size_t r = 0; r < cfg.replicas; ++r)
    f << r << ',' << r << ',' << csv_number(direct[r]) << ',' << csv_number(start[r]) << ','
      << csv_number(dynamic[r]) << '\n';

  ExperimentOutcome out;
  out.report = {{"experiment", "equilibrium-check"},
                {"config", cfg},
                {"exact_m4", exact},
                {"limit_m4", (static_cast<double>(cfg.d) + 2.0) / static_cast<double>(cfg.d)},
                {"direct_mean", sd.mean()},
                {"direct_stderr", sd.std_error()},
                {"horizon_mean", sdyn.mean()},
                {"horizon_stderr", sdyn.std_error()},
                {"transient_bound", bias}};
  out.assertions = {
      {"direct_matches_exact", std::abs(sd.mean() - exact) <= 3.0 * sd.std_error(),
       "|mean - exact| = " + csv_number(std::abs(sd.mean() - exact))},
      {"long_run_matches_exact", std::abs(sdyn.mean() - exact) <= 3.0 * sdyn.std_error() + bias,
       "|mean - exact| = " + csv_number(std::abs(sdyn.mean() - exact))}};
  detail::write_report(dir, out);
  return out;
}

inline ExperimentOutcome run_support_studies(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::wishart: return run_wishart_study(cfg);
    case ExperimentKind::counterexample1: return run_counterexample1(cfg);
    case ExperimentKind::counterexample2: return run_counterexample2(cfg);
    case ExperimentKind::equilibrium_check: return run_equilibrium_check(cfg);
    default: throw ConfigError("run_support_studies: not a support study");
  }
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::decay: return run_decay_experiment(cfg);
    case ExperimentKind::inequalities: return run_inequality_sweep(cfg);
    default: return run_support_studies(cfg);
  }
}

}  // namespace kac
