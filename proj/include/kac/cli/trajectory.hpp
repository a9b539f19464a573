#pragma once

// Per-sample observables of a coupled run and their CSV form.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "kac/analysis/inequalities.hpp"
#include "kac/stats.hpp"
#include "kac/system.hpp"

namespace kac {

struct TrajectorySample {
  double time = 0.0;
  double mean_sq_distance = 0.0;
  double m2 = 0.0;  // of the V copy
  double m4 = 0.0;  // of the V copy
  double creation = 0.0;
  double corr = 0.0;
  double min_corr = 0.0;
  double fund_lhs = 0.0;
  double fund_rhs = 0.0;
  double weak_lhs = 0.0;
  double weak_rhs = 0.0;
  double weak_slack = 0.0;
  bool zero_over_zero = false;
  // Filled only on aggregate rows.
  double mean_sq_distance_stderr = 0.0;
  double m4_stderr = 0.0;
  double envelope = std::numeric_limits<double>::quiet_NaN();
};

/// Observables of the aligned pair (u, v o pairing). With a negative
/// correlation the weak inequality is out of scope and its columns are NaN.
inline TrajectorySample observe_coupled(double t, const CoupledState& s, double delta, double p) {
  const Configuration v = permuted(s.v, s.pairing);
  TrajectorySample x;
  x.time = t;
  x.m2 = s.v.m2();
  x.m4 = s.v.m4();
  x.corr = x.min_corr = mean_correlation(s.u, v, identity_permutation(v.size()));
  x.fund_lhs = 1.0 - x.corr * x.corr;
  if (x.corr < -1e-12) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    x.mean_sq_distance = mean_sq_distance(s.u, v);
    const double dd = static_cast<double>(s.u.dim());
    const PairAverages pa = pair_averages(s.u, v);
    x.creation = (dd - 2.0) / (2.0 * dd - 2.0) * pa.creation_integrand;
    x.fund_rhs = min_kappa(second_moment(s.u), second_moment(v)) * pa.area;
    x.weak_lhs = x.weak_rhs = x.weak_slack = nan;
    return x;
  }
  const InequalityReport w = pathwise_weak_inequality(s.u, v, delta, p);
  x.mean_sq_distance = w.aux.at("mean_sq_distance");
  x.creation = w.aux.at("creation");
  const double k = std::min(w.aux.at("kappa_u"), w.aux.at("kappa_v"));
  const double area = w.aux.at("area");
  x.fund_rhs = std::isinf(k) && area == 0.0 ? 0.0 : k * area;
  x.weak_lhs = w.lhs;
  x.weak_rhs = w.rhs;
  x.weak_slack = w.slack;
  x.zero_over_zero = w.zero_over_zero;
  return x;
}

struct TrajectoryRecord {
  long replica = -1;
  long substream = -1;
  std::vector<TrajectorySample> samples;
  SimulationSummary summary;
};

/// Cross-replica aggregate at each sample index: means with standard errors
/// for the distance and m4, minimum correlation and minimum weak slack.
inline std::vector<TrajectorySample> aggregate(const std::vector<TrajectoryRecord>& records) {
  std::vector<TrajectorySample> out;
  if (records.empty()) return out;
  const std::size_t k = records.front().samples.size();
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    RunningStats dist, m2, m4, creation, corr, fl, fr, wl, wr;
    double min_corr = std::numeric_limits<double>::infinity();
    double min_slack = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      const TrajectorySample& x = r.samples.at(i);
      dist.add(x.mean_sq_distance);
      m2.add(x.m2);
      m4.add(x.m4);
      creation.add(x.creation);
      corr.add(x.corr);
      fl.add(x.fund_lhs);
      fr.add(x.fund_rhs);
      wl.add(x.weak_lhs);
      wr.add(x.weak_rhs);
      min_corr = std::min(min_corr, x.min_corr);
      min_slack = std::isnan(x.weak_slack) ? x.weak_slack : std::min(min_slack, x.weak_slack);
    }
    TrajectorySample& a = out[i];
    a.time = records.front().samples[i].time;
    a.mean_sq_distance = dist.mean();
    a.mean_sq_distance_stderr = dist.std_error();
    a.m2 = m2.mean();
    a.m4 = m4.mean();
    a.m4_stderr = m4.std_error();
    a.creation = creation.mean();
    a.corr = corr.mean();
    a.min_corr = min_corr;
    a.fund_lhs = fl.mean();
    a.fund_rhs = fr.mean();
    a.weak_lhs = wl.mean();
    a.weak_rhs = wr.mean();
    a.weak_slack = min_slack;
  }
  return out;
}

inline std::string csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "replica,substream,time,mean_sq_distance,m2,m4,creation,corr,min_corr,fund_lhs,fund_rhs,"
    "weak_lhs,weak_rhs,weak_slack,envelope,mean_sq_distance_stderr,m4_stderr";

inline void write_trajectory_row(std::ostream& os, long replica, long substream,
                                 const TrajectorySample& x) {
  os << replica << ',' << substream;
  for (double v : {x.time, x.mean_sq_distance, x.m2, x.m4, x.creation, x.corr, x.min_corr, x.fund_lhs,
                   x.fund_rhs, x.weak_lhs, x.weak_rhs, x.weak_slack, x.envelope,
                   x.mean_sq_distance_stderr, x.m4_stderr})
    os << ',' << csv_number(v);
  os << '\n';
}

}  // namespace kac
