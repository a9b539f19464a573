#pragma once

// Exact linear assignment (Hungarian method with row/column potentials) and
// the permutation-symmetrized quadratic distance between configurations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kac/configuration.hpp"
#include "kac/errors.hpp"

namespace kac {

inline constexpr std::size_t kDefaultAssignmentLimit = 4096;

/// Square cost matrix, row-major.
class CostMatrix {
 public:
  explicit CostMatrix(std::size_t n) : n_(n), c_(n * n, 0.0) {}
  CostMatrix(std::size_t n, std::vector<double> entries) : n_(n), c_(std::move(entries)) {
    if (c_.size() != n * n) throw BadParams("CostMatrix: entries must be n*n");
  }

  /// Entry (i, j) = |u_i - v_j|^2.
  static CostMatrix squared_distances(const Configuration& u, const Configuration& v) {
    if (u.size() != v.size() || u.dim() != v.dim())
      throw BadParams("squared_distances: configurations differ in N or d");
    CostMatrix m(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = distance_sq(u[i], v[j]);
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return c_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return c_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> c_;
};

struct Assignment {
  Permutation perm;  // row i is matched to column perm[i]
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching in O(N^3). Ties go to the lowest column index
/// reached first by the scan.
inline Assignment solve_assignment(const CostMatrix& cost,
                                   std::size_t max_size = kDefaultAssignmentLimit) {
  const std::size_t n = cost.size();
  if (n > max_size) throw SizeLimit("assignment problem exceeds the configured size limit");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(cost(i, j))) throw BadParams("solve_assignment: non-finite cost");
  if (n == 0) return {};

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - pu[i0] - pv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          pu[match[j]] += delta;
          pv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.perm.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.perm[match[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.total_cost += cost(i, out.perm[i]);
  return out;
}

/// Optimal pairing sigma minimizing <|u - v o sigma|^2>_N.
inline Permutation optimal_pairing(const Configuration& u, const Configuration& v,
                                   std::size_t max_size = kDefaultAssignmentLimit) {
  return solve_assignment(CostMatrix::squared_distances(u, v), max_size).perm;
}

/// d_sym(u, v) = min over sigma of <|u - v o sigma|^2>_N^{1/2}.
inline double sym_distance(const Configuration& u, const Configuration& v,
                           std::size_t max_size = kDefaultAssignmentLimit) {
  const Assignment a = solve_assignment(CostMatrix::squared_distances(u, v), max_size);
  return std::sqrt(std::max(0.0, a.total_cost) / static_cast<double>(u.size()));
}

}  // namespace kac
