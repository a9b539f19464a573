#pragma once

// Event-driven simulation of the Kac N-particle process with Maxwell molecules
// and of its simultaneous parallel coupling. Total event rate (N-1) b0 / 2,
// unordered pairs chosen uniformly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kac/assignment.hpp"
#include "kac/configuration.hpp"
#include "kac/errors.hpp"
#include "kac/geometry.hpp"
#include "kac/kernels.hpp"
#include "kac/rng.hpp"

namespace kac {

/// One collision: time, colliding pair (indices of the U-copy for coupled
/// runs), scattering angle, azimuth and the auxiliary direction l.
struct CollisionEvent {
  double time = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
  double theta = 0.0;
  double phi = 0.0;
  VecD l;

  bool operator==(const CollisionEvent&) const = default;
};

inline void to_json(nlohmann::json& j, const CollisionEvent& e) {
  j = nlohmann::json{{"time", e.time},   {"pair", {e.first, e.second}},
                     {"theta", e.theta}, {"phi", e.phi},
                     {"l", e.l}};
}

struct KacState {
  Configuration config;
  double clock = 0.0;
  std::uint64_t events = 0;
};

/// Two copies collide with the same pairs: U particle i is coupled to V
/// particle pairing[i].
struct CoupledState {
  Configuration u;
  Configuration v;
  Permutation pairing;
  double clock = 0.0;
  std::uint64_t events = 0;
};

struct StepOptions {
  /// Re-projection onto the constraint sphere every this many events (0 = never).
  std::uint64_t reproject_every = 10000;
  bool check_invariants = true;
  double residual_tolerance = 1e-9;
  double distance_tolerance = 1e-12;
  double conservation_tolerance = 1e-12;
  std::function<void(const CollisionEvent&)> on_event;
};

struct KacStepResult {
  CollisionEvent event;
  double conservation_error = 0.0;
};

struct CoupledStepResult {
  CollisionEvent event;
  std::size_t v_first = 0;
  std::size_t v_second = 0;
  bool antipodal = false;
  /// Delta(|u'-v'|^2 + |u'_*-v'_*|^2) + sin^2(theta) sin^2(phi)(|u-u_*||v-v_*| - (u-u_*).(v-v_*))
  double residual = 0.0;
  /// Change of the pair coupling distance |u-v|^2 + |u_*-v_*|^2.
  double distance_change = 0.0;
  double conservation_error = 0.0;
};

inline double total_event_rate(std::size_t n, const AngularKernel& kernel) {
  return 0.5 * static_cast<double>(n - 1) * kernel.total_rate();
}

/// sigma minimizing <|u - v o sigma|^2>_N.
inline Permutation initial_pairing(const Configuration& u, const Configuration& v) {
  if (u.size() != v.size() || u.dim() != v.dim())
    throw BadParams("initial_pairing: configurations differ in N or d");
  return optimal_pairing(u, v);
}

inline CoupledState make_coupled_state(Configuration u, Configuration v) {
  CoupledState s;
  s.pairing = initial_pairing(u, v);
  s.u = std::move(u);
  s.v = std::move(v);
  return s;
}

namespace detail {

inline double draw_waiting_time(double rate, Rng& rng) {
  std::exponential_distribution<double> e(rate);
  return e(rng);
}

inline std::pair<std::size_t, std::size_t> draw_pair(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> first(0, n - 1), second(0, n - 2);
  const std::size_t i = first(rng);
  std::size_t j = second(rng);
  if (j >= i) ++j;
  return {i, j};
}

/// Relative momentum / energy drift of a colliding pair.
struct PairLedger {
  VecD momentum;
  double energy = 0.0;

  PairLedger(std::span<const double> a, std::span<const double> b) : momentum(a.size()) {
    for (std::size_t k = 0; k < a.size(); ++k) momentum[k] = a[k] + b[k];
    energy = norm_sq(a) + norm_sq(b);
  }

  double error_after(std::span<const double> a, std::span<const double> b) const {
    const double scale = energy > 0.0 ? energy : 1.0;
    double dm = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = a[k] + b[k] - momentum[k];
      dm += t * t;
    }
    const double de = std::abs(norm_sq(a) + norm_sq(b) - energy);
    return std::max(std::sqrt(dm / scale), de / scale);
  }
};

inline UnitVecD relative_direction(std::span<const double> a, std::span<const double> b,
                                   const std::optional<UnitVecD>& fallback) {
  if (auto n = direction_between(a, b)) return *n;
  if (fallback) return *fallback;
  return UnitVecD::basis(a.size(), 0);
}

inline std::string describe(const CollisionEvent& e, const nlohmann::json& extra) {
  nlohmann::json j = e;
  j.update(extra);
  return j.dump();
}

inline void maybe_reproject(Configuration& c, std::uint64_t events, const StepOptions& opt) {
  if (opt.reproject_every != 0 && events % opt.reproject_every == 0)
    c = project_to_constraint_sphere(std::move(c));
}

inline KacStepResult kac_event_at(KacState& s, const AngularKernel& kernel, Rng& rng,
                                  double time, const StepOptions& opt) {
  const auto [i, j] = draw_pair(s.config.size(), rng);
  const double theta = kernel.sample_theta(rng);
  auto v = s.config[i];
  auto w = s.config[j];
  const UnitVecD n = relative_direction(v, w, std::nullopt);
  DirectionSample ds = sample_post_direction(n, theta, rng);
  const PairLedger before(v, w);
  collide_in_place(v, w, ds.n_prime);

  KacStepResult r;
  r.event = {time, i, j, theta, ds.phi, ds.l.vec()};
  r.conservation_error = before.error_after(v, w);
  s.clock = time;
  ++s.events;
  if (opt.check_invariants && r.conservation_error > opt.conservation_tolerance)
    throw InvariantViolation("pair momentum/energy not conserved",
                             describe(r.event, {{"conservation_error", r.conservation_error}}));
  if (opt.on_event) opt.on_event(r.event);
  maybe_reproject(s.config, s.events, opt);
  return r;
}

inline CoupledStepResult coupled_event_at(CoupledState& s, const AngularKernel& kernel, Rng& rng,
                                          double time, const StepOptions& opt) {
  const auto [i, j] = draw_pair(s.u.size(), rng);
  const double theta = kernel.sample_theta(rng);
  const std::size_t a = s.pairing[i], b = s.pairing[j];
  auto ui = s.u[i];
  auto uj = s.u[j];
  auto va = s.v[a];
  auto vb = s.v[b];

  const double du = std::sqrt(distance_sq(ui, uj));
  const double dv = std::sqrt(distance_sq(va, vb));
  double cross = 0.0;
  for (std::size_t k = 0; k < ui.size(); ++k) cross += (ui[k] - uj[k]) * (va[k] - vb[k]);
  const double dist_before = distance_sq(ui, va) + distance_sq(uj, vb);
  const PairLedger led_u(ui, uj), led_v(va, vb);

  // A copy with zero relative velocity is left unchanged by any n'; borrow
  // the other copy's direction so the coupling stays defined.
  const std::optional<UnitVecD> nu_opt = direction_between(ui, uj);
  const std::optional<UnitVecD> nv_opt = direction_between(va, vb);
  const UnitVecD n_u = relative_direction(ui, uj, nv_opt);
  const UnitVecD n_v = relative_direction(va, vb, nu_opt ? nu_opt : std::optional<UnitVecD>(n_u));
  CoupledDirections cd = coupled_post_directions(n_u, n_v, theta, rng);

  collide_in_place(ui, uj, cd.n_u_prime);
  collide_in_place(va, vb, cd.n_v_prime);

  const double dist_after = distance_sq(ui, va) + distance_sq(uj, vb);
  const double st = std::sin(theta), sp = std::sin(cd.phi);
  const double predicted = -st * st * sp * sp * (du * dv - cross);

  CoupledStepResult r;
  r.event = {time, i, j, theta, cd.phi, cd.l.vec()};
  r.v_first = a;
  r.v_second = b;
  r.antipodal = cd.antipodal;
  r.distance_change = dist_after - dist_before;
  r.residual = r.distance_change - predicted;
  r.conservation_error = std::max(led_u.error_after(ui, uj), led_v.error_after(va, vb));
  s.clock = time;
  ++s.events;

  if (opt.check_invariants) {
    auto fail = [&](const char* what) {
      throw InvariantViolation(
          what, describe(r.event, {{"v_pair", {a, b}},
                                   {"residual", r.residual},
                                   {"distance_before", dist_before},
                                   {"distance_after", dist_after},
                                   {"conservation_error", r.conservation_error},
                                   {"antipodal", r.antipodal}}));
    };
    if (!(std::abs(r.residual) <= opt.residual_tolerance))
      fail("contraction identity residual exceeds tolerance");
    if (!(r.distance_change <= opt.distance_tolerance * std::max(1.0, dist_before)))
      fail("coupling distance increased");
    if (!(r.conservation_error <= opt.conservation_tolerance))
      fail("pair momentum/energy not conserved");
  }
  if (opt.on_event) opt.on_event(r.event);
  if (opt.reproject_every != 0 && s.events % opt.reproject_every == 0) {
    s.u = project_to_constraint_sphere(std::move(s.u));
    s.v = project_to_constraint_sphere(std::move(s.v));
  }
  return r;
}

}  // namespace detail

/// Advance the Kac process by one event.
inline KacStepResult step_kac(KacState& s, const AngularKernel& kernel, Rng& rng,
                              const StepOptions& opt = {}) {
  const double t = s.clock + detail::draw_waiting_time(total_event_rate(s.config.size(), kernel), rng);
  return detail::kac_event_at(s, kernel, rng, t, opt);
}

/// Advance the coupled process by one event: shared time, shared pair (through
/// the pairing), shared theta, parallel-coupled post-collisional directions.
inline CoupledStepResult step_coupled(CoupledState& s, const AngularKernel& kernel, Rng& rng,
                                      const StepOptions& opt = {}) {
  const double t = s.clock + detail::draw_waiting_time(total_event_rate(s.u.size(), kernel), rng);
  return detail::coupled_event_at(s, kernel, rng, t, opt);
}

/// Sample times 0, dt, 2dt, ... <= horizon.
struct SampleGrid {
  double horizon = 0.0;
  double dt = 1.0;

  std::vector<double> times() const {
    if (!(horizon >= 0.0)) throw BadParams("SampleGrid: horizon must be >= 0");
    if (horizon > 0.0 && !(dt > 0.0)) throw BadParams("SampleGrid: dt must be > 0");
    std::vector<double> t{0.0};
    if (horizon == 0.0) return t;
    for (std::size_t k = 1;; ++k) {
      const double tk = static_cast<double>(k) * dt;
      if (tk > horizon * (1.0 + 1e-12)) break;
      t.push_back(std::min(tk, horizon));
    }
    return t;
  }
};

struct SimulationSummary {
  std::uint64_t events = 0;
  std::size_t samples = 0;
  double max_abs_residual = 0.0;
  double max_distance_change = -std::numeric_limits<double>::infinity();
  double max_conservation_error = 0.0;
};

namespace detail {

template <class State, class Event, class Observer, class Track>
SimulationSummary run_events(State& s, std::size_t n, const AngularKernel& kernel,
                             const SampleGrid& grid, Rng& rng, Observer&& observe, Event&& event,
                             Track&& track) {
  const std::vector<double> times = grid.times();
  SimulationSummary sum;
  const double rate = total_event_rate(n, kernel);
  std::size_t k = 0;
  const std::uint64_t events0 = s.events;
  for (; k < times.size() && times[k] <= s.clock; ++k) observe(times[k], std::as_const(s));
  while (k < times.size()) {
    const double t_next = s.clock + draw_waiting_time(rate, rng);
    for (; k < times.size() && times[k] < t_next; ++k) observe(times[k], std::as_const(s));
    if (k == times.size()) break;
    track(sum, event(s, t_next));
  }
  sum.events = s.events - events0;
  sum.samples = times.size();
  return sum;
}

}  // namespace detail

/// Run the Kac process until the last grid time, calling observe(t, state)
/// at every grid time with the state holding all events up to t.
template <class Observer>
SimulationSummary simulate(KacState& s, const AngularKernel& kernel, const SampleGrid& grid,
                           Rng& rng, Observer&& observe, const StepOptions& opt = {}) {
  return detail::run_events(
      s, s.config.size(), kernel, grid, rng, std::forward<Observer>(observe),
      [&](KacState& st, double t) { return detail::kac_event_at(st, kernel, rng, t, opt); },
      [](SimulationSummary& sum, const KacStepResult& r) {
        sum.max_conservation_error = std::max(sum.max_conservation_error, r.conservation_error);
      });
}

template <class Observer>
SimulationSummary simulate(CoupledState& s, const AngularKernel& kernel, const SampleGrid& grid,
                           Rng& rng, Observer&& observe, const StepOptions& opt = {}) {
  return detail::run_events(
      s, s.u.size(), kernel, grid, rng, std::forward<Observer>(observe),
      [&](CoupledState& st, double t) { return detail::coupled_event_at(st, kernel, rng, t, opt); },
      [](SimulationSummary& sum, const CoupledStepResult& r) {
        sum.max_abs_residual = std::max(sum.max_abs_residual, std::abs(r.residual));
        sum.max_distance_change = std::max(sum.max_distance_change, r.distance_change);
        sum.max_conservation_error = std::max(sum.max_conservation_error, r.conservation_error);
      });
}

}  // namespace kac
