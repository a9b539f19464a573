#pragma once

// Coupling creation, the special (fundamental) inequality, the trace
// inequality, the parallelogram-area decomposition and the pathwise weak
// inequality. Expectations over discrete distributions are exact sums over
// all K^2 atom pairs.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kac/analysis/constants.hpp"
#include "kac/analysis/spectral.hpp"
#include "kac/configuration.hpp"
#include "kac/errors.hpp"
#include "kac/geometry.hpp"

namespace kac {

struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  std::map<std::string, double> aux;
  std::size_t n_samples = 0;
  double std_error = 0.0;
  /// Both sides vanish through a 0/0 quotient; the product form 0 <= 0 is reported.
  bool zero_over_zero = false;

  static InequalityReport make(std::string name, double lhs, double rhs) {
    InequalityReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    return r;
  }

  bool holds(double tolerance) const { return slack >= -tolerance; }
};

inline void to_json(nlohmann::json& j, const InequalityReport& r) {
  nlohmann::json aux = nlohmann::json::object();
  for (const auto& [k, v] : r.aux) aux[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v));
  j = nlohmann::json{{"name", r.name},
                     {"lhs", r.lhs},
                     {"rhs", std::isfinite(r.rhs) ? nlohmann::json(r.rhs) : nlohmann::json("inf")},
                     {"slack", std::isfinite(r.slack) ? nlohmann::json(r.slack) : nlohmann::json("inf")},
                     {"aux", aux},
                     {"n_samples", r.n_samples},
                     {"stderr", r.std_error}};
  if (r.zero_over_zero) j["zero_over_zero"] = true;
}

/// Pair functionals of two aligned configurations over all N^2 ordered pairs.
struct PairAverages {
  double creation_integrand = 0.0;  // <|du||dv| - du.dv>
  double area = 0.0;                // <|du|^2|dv|^2 - (du.dv)^2>
  double u_moment = 0.0;            // <|du|^{a}>
  double v_moment = 0.0;            // <|dv|^{b}>
};

/// One O(N^2 d) pass; `a`, `b` are the exponents of the difference moments.
inline PairAverages pair_averages(const Configuration& u, const Configuration& v, double a = 2.0,
                                  double b = 2.0) {
  const std::size_t n = u.size(), d = u.dim();
  PairAverages s;
  VecD du(d), dv(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double uu = 0.0, vv = 0.0, uv = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double x = u[i][k] - u[j][k];
        const double y = v[i][k] - v[j][k];
        uu += x * x;
        vv += y * y;
        uv += x * y;
      }
      s.creation_integrand += std::sqrt(uu * vv) - uv;
      s.area += uu * vv - uv * uv;
      s.u_moment += std::pow(uu, 0.5 * a);
      s.v_moment += std::pow(vv, 0.5 * b);
    }
  }
  // Each unordered pair counts twice; diagonal pairs contribute zero.
  const double w = 2.0 / (static_cast<double>(n) * static_cast<double>(n));
  s.creation_integrand *= w;
  s.area *= w;
  s.u_moment *= w;
  s.v_moment *= w;
  return s;
}

/// C_2(u, v) = (d-2)/(2d-2) <|u-u_*||v-v_*| - (u-u_*).(v-v_*)>_N, v aligned with u.
inline double coupling_creation(const Configuration& u, const Configuration& v) {
  if (u.size() != v.size() || u.dim() != v.dim())
    throw BadParams("coupling_creation: configurations differ in N or d");
  const double d = static_cast<double>(u.dim());
  return (d - 2.0) / (2.0 * d - 2.0) * pair_averages(u, v).creation_integrand;
}

inline double coupling_creation(const Configuration& u, const Configuration& v,
                                const Permutation& pairing) {
  return coupling_creation(u, permuted(v, pairing));
}

struct CoupledAtom {
  VecD u;
  VecD v;
  double weight = 0.0;
};

/// Finitely supported law of (U, V).
class DiscreteCoupledDistribution {
 public:
  explicit DiscreteCoupledDistribution(std::size_t d) : d_(d) {}
  DiscreteCoupledDistribution(std::size_t d, std::vector<CoupledAtom> atoms)
      : d_(d), atoms_(std::move(atoms)) {}

  /// Empirical law of aligned configurations (weights 1/N).
  static DiscreteCoupledDistribution empirical(const Configuration& u, const Configuration& v) {
    DiscreteCoupledDistribution dist(u.dim());
    const double w = 1.0 / static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      dist.add({VecD(u[i].begin(), u[i].end()), VecD(v[i].begin(), v[i].end()), w});
    dist.normalized_ = dist.check_normalized(1e-10);
    return dist;
  }

  void add(CoupledAtom a) {
    if (a.u.size() != d_ || a.v.size() != d_) throw BadParams("atom dimension mismatch");
    if (!(a.weight >= 0.0)) throw BadParams("atom weight must be non-negative");
    atoms_.push_back(std::move(a));
    normalized_ = false;
  }

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<CoupledAtom>& atoms() const noexcept { return atoms_; }
  bool normalized() const noexcept { return normalized_; }

  /// Rescale weights to sum 1, center U and V, then scale each to E|.|^2 = 1.
  void normalize() {
    double wsum = 0.0;
    for (const auto& a : atoms_) wsum += a.weight;
    if (!(wsum > 0.0)) throw DegenerateInput("distribution has zero total weight");
    for (auto& a : atoms_) a.weight /= wsum;
    VecD mu(d_, 0.0), mv(d_, 0.0);
    for (const auto& a : atoms_) {
      axpy(a.weight, a.u, mu);
      axpy(a.weight, a.v, mv);
    }
    double eu = 0.0, ev = 0.0;
    for (auto& a : atoms_) {
      axpy(-1.0, mu, a.u);
      axpy(-1.0, mv, a.v);
      eu += a.weight * norm_sq(a.u);
      ev += a.weight * norm_sq(a.v);
    }
    if (!(eu > 0.0) || !(ev > 0.0)) throw DegenerateInput("U or V is almost surely constant");
    const double su = 1.0 / std::sqrt(eu), sv = 1.0 / std::sqrt(ev);
    for (auto& a : atoms_) {
      for (double& x : a.u) x *= su;
      for (double& x : a.v) x *= sv;
    }
    normalized_ = true;
  }

  bool check_normalized(double tol) const {
    double wsum = 0.0, eu = 0.0, ev = 0.0;
    VecD mu(d_, 0.0), mv(d_, 0.0);
    for (const auto& a : atoms_) {
      wsum += a.weight;
      axpy(a.weight, a.u, mu);
      axpy(a.weight, a.v, mv);
      eu += a.weight * norm_sq(a.u);
      ev += a.weight * norm_sq(a.v);
    }
    bool ok = std::abs(wsum - 1.0) <= tol && std::abs(eu - 1.0) <= tol && std::abs(ev - 1.0) <= tol;
    for (std::size_t k = 0; k < d_; ++k) ok = ok && std::abs(mu[k]) <= tol && std::abs(mv[k]) <= tol;
    return ok;
  }

  bool centered(double tol) const {
    VecD mu(d_, 0.0), mv(d_, 0.0);
    for (const auto& a : atoms_) {
      axpy(a.weight, a.u, mu);
      axpy(a.weight, a.v, mv);
    }
    for (std::size_t k = 0; k < d_; ++k)
      if (std::abs(mu[k]) > tol || std::abs(mv[k]) > tol) return false;
    return true;
  }

  /// C_{X,Y} = E(X (x) Y) for X, Y in {U, V}.
  Matrix c_uu() const { return moment([](const CoupledAtom& a) { return std::pair{&a.u, &a.u}; }); }
  Matrix c_vv() const { return moment([](const CoupledAtom& a) { return std::pair{&a.v, &a.v}; }); }
  Matrix c_uv() const { return moment([](const CoupledAtom& a) { return std::pair{&a.u, &a.v}; }); }

  double expect_uv() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight * dot(a.u, a.v);
    return s;
  }

  /// E(|U|^2|V|^2 - (U.V)^2)
  double expect_single_area() const {
    double s = 0.0;
    for (const auto& a : atoms_) {
      const double uv = dot(a.u, a.v);
      s += a.weight * (norm_sq(a.u) * norm_sq(a.v) - uv * uv);
    }
    return s;
  }

  /// E(|U-U_*|^2|V-V_*|^2 - ((U-U_*).(V-V_*))^2), exact over atom pairs.
  double expect_pair_area() const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
        const auto& b = atoms_[j];
        double uu = 0.0, vv = 0.0, uv = 0.0;
        for (std::size_t k = 0; k < d_; ++k) {
          const double x = a.u[k] - b.u[k], y = a.v[k] - b.v[k];
          uu += x * x;
          vv += y * y;
          uv += x * y;
        }
        s += 2.0 * a.weight * b.weight * (uu * vv - uv * uv);
      }
    }
    return s;
  }

 private:
  template <class Pick>
  Matrix moment(Pick pick) const {
    Matrix m(d_);
    for (const auto& a : atoms_) {
      const auto [x, y] = pick(a);
      for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) m(i, j) += a.weight * (*x)[i] * (*y)[j];
    }
    return m;
  }

  std::size_t d_;
  std::vector<CoupledAtom> atoms_;
  bool normalized_ = false;
};

/// min(kappa_a, kappa_b), where an infinite kappa never wins over a finite one.
inline double min_kappa(const Matrix& a, const Matrix& b) { return std::min(kappa(a), kappa(b)); }

/// 1 - E(U.V)^2 <= min(kappa_{E U(x)U}, kappa_{E V(x)V}) E(|U-U_*|^2|V-V_*|^2 - ((U-U_*).(V-V_*))^2)
inline InequalityReport fund_inequality_report(const DiscreteCoupledDistribution& dist) {
  if (!dist.normalized() && !dist.check_normalized(1e-10))
    throw PreconditionFailed("fund_inequality_report: distribution is not normalized");
  const double e_uv = dist.expect_uv();
  const double lhs = 1.0 - e_uv * e_uv;
  const double ku = kappa(dist.c_uu()), kv = kappa(dist.c_vv());
  const double k = std::min(ku, kv);
  const double area = dist.expect_pair_area();
  double rhs;
  if (std::isinf(k)) {
    if (lhs > 1e-12) throw RhsInfinite("both covariances are rank-1 while 1 - E(U.V)^2 > 0");
    rhs = area == 0.0 ? 0.0 : k;
  } else {
    rhs = k * area;
  }
  InequalityReport r = InequalityReport::make("fund_inequality", lhs, rhs);
  r.aux = {{"kappa_u", ku}, {"kappa_v", kv}, {"area", area}, {"expect_uv", e_uv},
           {"sharp_rhs", 0.5 * rhs}};
  r.n_samples = dist.size() * dist.size();
  return r;
}

/// Tr(C_UU C_VV) - Tr(C_UV C_VU) <= min(l_max(C_UU)/Tr C_UU, l_max(C_VV)/Tr C_VV)(Tr C_UU Tr C_VV - (Tr C_UV)^2)
inline InequalityReport trace_inequality_report(const Matrix& c_uu, const Matrix& c_vv,
                                                const Matrix& c_uv) {
  const double tu = c_uu.trace(), tv = c_vv.trace();
  if (!(tu > 0.0) || !(tv > 0.0))
    throw BadParams("trace_inequality_report: covariances need positive trace");
  const Matrix c_vu = c_uv.transpose();
  const double lhs = trace_of_product(c_uu, c_vv) - trace_of_product(c_uv, c_vu);
  const double ru = max_eigenvalue(c_uu) / tu, rv = max_eigenvalue(c_vv) / tv;
  const double tuv = c_uv.trace();
  const double rhs = std::min(ru, rv) * (tu * tv - tuv * tuv);
  InequalityReport r = InequalityReport::make("trace_inequality", lhs, rhs);
  r.aux = {{"lambda_ratio_u", ru}, {"lambda_ratio_v", rv}, {"trace_uv", tuv}};
  return r;
}

inline InequalityReport trace_inequality_report(const DiscreteCoupledDistribution& dist) {
  return trace_inequality_report(dist.c_uu(), dist.c_vv(), dist.c_uv());
}

/// Right-hand terms of the parallelogram-area expansion
///   E(|U-U_*|^2|V-V_*|^2 - ((U-U_*).(V-V_*))^2) = first + second + third
/// with first = 2 E(|U|^2|V|^2 - (U.V)^2), second = Tr((C_UV - C_VU)(C_VU - C_UV)),
/// third = 2 (Tr C_UU Tr C_VV - (Tr C_UV)^2 - Tr(C_UU C_VV) + Tr(C_UV C_VU)).
struct AreaDecomposition {
  double lhs = 0.0;
  double first = 0.0;
  double second = 0.0;
  double third = 0.0;
  double residual() const { return lhs - (first + second + third); }
};

inline AreaDecomposition area_decomposition(const DiscreteCoupledDistribution& dist) {
  if (!dist.centered(1e-10)) throw PreconditionFailed("area_decomposition: U and V must be centered");
  const Matrix cuu = dist.c_uu(), cvv = dist.c_vv(), cuv = dist.c_uv();
  const Matrix cvu = cuv.transpose();
  AreaDecomposition a;
  a.lhs = dist.expect_pair_area();
  a.first = 2.0 * dist.expect_single_area();
  a.second = trace_of_product(cuv - cvu, cvu - cuv);
  const double tuv = cuv.trace();
  a.third = 2.0 * (cuu.trace() * cvv.trace() - tuv * tuv - trace_of_product(cuu, cvv) +
                   trace_of_product(cuv, cvu));
  return a;
}

inline InequalityReport area_decomposition_report(const DiscreteCoupledDistribution& dist) {
  const AreaDecomposition a = area_decomposition(dist);
  // Identity reported as |residual| <= 0, so slack = -|residual|.
  InequalityReport r = InequalityReport::make("area_decomposition", std::abs(a.residual()), 0.0);
  r.aux = {{"lhs", a.lhs}, {"first", a.first}, {"second", a.second}, {"third", a.third}};
  r.n_samples = dist.size() * dist.size();
  return r;
}

/// c_{delta,p}(u, v) <= (1/2) C_2(u, v) / <|u - v|^2>_N^{1 + 1/(2 delta)} for aligned,
/// normalized, positively correlated configurations.
inline InequalityReport pathwise_weak_inequality(const Configuration& u, const Configuration& v,
                                                 double delta, double p) {
  if (u.size() != v.size() || u.dim() != v.dim())
    throw BadParams("pathwise_weak_inequality: configurations differ in N or d");
  const std::size_t d = u.dim();
  const HolderConstants hc = holder_constants(delta, p, d);
  const double q = hc.q;
  const double corr = mean_correlation(u, v, identity_permutation(u.size()));
  if (corr < -1e-12) throw PreconditionFailed("pathwise_weak_inequality: <u.v>_N is negative");

  const double a = 2.0 * p * (1.0 + delta), b = 2.0 * q * (1.0 + delta);
  const PairAverages pa = pair_averages(u, v, a, b);
  const double dd = static_cast<double>(d);
  const double c2 = (dd - 2.0) / (2.0 * dd - 2.0) * pa.creation_integrand;
  const double dist = mean_sq_distance(u, v);
  const double ku = kappa(second_moment(u)), kv = kappa(second_moment(v));
  const double k = std::min(ku, kv);

  double c = 0.0;
  if (std::isfinite(k))
    c = hc.k1 * std::pow(k, -1.0 - 0.5 / delta) * std::pow(pa.u_moment, -0.5 / (p * delta)) *
        std::pow(pa.v_moment, -0.5 / (q * delta));

  InequalityReport r;
  const double expo = 1.0 + 0.5 / delta;
  if (dist == 0.0) {
    r = InequalityReport::make("pathwise_weak_inequality", c * std::pow(dist, expo), 0.5 * c2);
    r.zero_over_zero = true;
  } else {
    r = InequalityReport::make("pathwise_weak_inequality", c, 0.5 * c2 / std::pow(dist, expo));
  }
  r.aux = {{"c", c},           {"creation", c2},       {"mean_sq_distance", dist},
           {"kappa_u", ku},    {"kappa_v", kv},        {"u_pair_moment", pa.u_moment},
           {"v_pair_moment", pa.v_moment}, {"correlation", corr}, {"k1", hc.k1},
           {"area", pa.area}};
  r.n_samples = u.size() * u.size();
  return r;
}

}  // namespace kac
