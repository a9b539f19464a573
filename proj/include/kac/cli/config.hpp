#pragma once

// Flat `key = value` experiment configuration. Lines starting with '#' and
// trailing '# ...' are comments; list values are comma separated.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kac/analysis/constants.hpp"
#include "kac/errors.hpp"
#include "kac/kernels.hpp"

namespace kac {

enum class ExperimentKind { decay, inequalities, counterexample1, counterexample2, wishart, equilibrium_check };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::decay: return "decay";
    case ExperimentKind::inequalities: return "inequalities";
    case ExperimentKind::counterexample1: return "counterexample1";
    case ExperimentKind::counterexample2: return "counterexample2";
    case ExperimentKind::wishart: return "wishart";
    case ExperimentKind::equilibrium_check: return "equilibrium-check";
  }
  return "?";
}

enum class InitialLaw { two_temperature, equilibrium, copy };

inline std::string_view to_string(InitialLaw l) {
  switch (l) {
    case InitialLaw::two_temperature: return "two_temperature";
    case InitialLaw::equilibrium: return "equilibrium";
    case InitialLaw::copy: return "copy";
  }
  return "?";
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::decay;
  std::size_t n = 256;
  std::size_t d = 3;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::size_t threads = 0;  // 0: hardware concurrency

  KernelSpec kernel{KernelFamily::uniform};

  double horizon = 20.0;
  double sample_dt = 0.5;
  std::size_t replicas = 100;
  double delta = 0.5;
  double p = 4.0;
  double q = 4.0 / 3.0;

  InitialLaw initial_law = InitialLaw::two_temperature;
  double initial_m4 = 3.0;
  std::size_t kmain_samples = 2000;

  std::size_t instances = 10000;
  std::size_t particle_instances = 1000;
  double tolerance = 1e-10;

  std::vector<double> m_values{10.0, 100.0, 1000.0};
  double q_moment = 1.5;
  std::vector<double> r_minus_values{2.0, 4.0, 8.0};
  double band_eps = 0.01;
  std::size_t samples = 100000;

  double wishart_p = 2.0;
  std::vector<std::size_t> n_values{64, 256, 1024, 2048};
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"experiment", to_string(c.kind)},
                     {"N", c.n},
                     {"d", c.d},
                     {"seed", c.seed},
                     {"kernel", to_string(c.kernel.family)},
                     {"kernel_theta0", c.kernel.theta0},
                     {"kernel_theta_min", c.kernel.theta_min},
                     {"kernel_nu", c.kernel.nu},
                     {"horizon", c.horizon},
                     {"sample_dt", c.sample_dt},
                     {"replicas", c.replicas},
                     {"delta", c.delta},
                     {"p", c.p},
                     {"q", c.q},
                     {"initial_law", to_string(c.initial_law)},
                     {"initial_m4", c.initial_m4},
                     {"kmain_samples", c.kmain_samples},
                     {"instances", c.instances},
                     {"particle_instances", c.particle_instances},
                     {"tolerance", c.tolerance},
                     {"M_values", c.m_values},
                     {"q_moment", c.q_moment},
                     {"r_minus_values", c.r_minus_values},
                     {"band_eps", c.band_eps},
                     {"samples", c.samples},
                     {"wishart_p", c.wishart_p},
                     {"N_values", c.n_values}};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view key, std::string_view s) {
  s = trim(s);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(x))
    throw ConfigError("'" + std::string(key) + "': not a finite number: '" + std::string(s) + "'");
  return x;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view s) {
  s = trim(s);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("'" + std::string(key) + "': not a non-negative integer: '" + std::string(s) + "'");
  return x;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = s.find(',');
    const auto item = trim(s.substr(0, c));
    if (!item.empty()) out.push_back(item);
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  return out;
}

}  // namespace detail

/// Parse and validate. Throws ConfigError on unknown or duplicate keys, bad
/// values, or parameters outside the ranges of the analysis routines.
inline ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    std::string_view line = raw;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key{detail::trim(line.substr(0, eq))};
    const std::string value{detail::trim(line.substr(eq + 1))};
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!kv.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }

  static const std::set<std::string> known{
      "experiment", "N", "d", "seed", "output", "threads", "kernel", "kernel_theta0",
      "kernel_theta_min", "kernel_nu", "horizon", "sample_dt", "replicas", "delta", "p", "q",
      "initial_law", "initial_m4", "kmain_samples", "instances", "particle_instances", "tolerance",
      "M_values", "q_moment", "r_minus_values", "band_eps", "samples", "wishart_p", "N_values"};
  for (const auto& [k, v] : kv)
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "'");

  ExperimentConfig c;
  auto get = [&](const char* k) -> std::optional<std::string_view> {
    const auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    return std::string_view(it->second);
  };
  auto num = [&](const char* k, double& dst) {
    if (auto s = get(k)) dst = detail::parse_double(k, *s);
  };
  auto count = [&](const char* k, std::size_t& dst) {
    if (auto s = get(k)) dst = static_cast<std::size_t>(detail::parse_u64(k, *s));
  };

  const auto kind = get("experiment");
  if (!kind) throw ConfigError("missing required key 'experiment'");
  if (*kind == "decay") c.kind = ExperimentKind::decay;
  else if (*kind == "inequalities") c.kind = ExperimentKind::inequalities;
  else if (*kind == "counterexample1") c.kind = ExperimentKind::counterexample1;
  else if (*kind == "counterexample2") c.kind = ExperimentKind::counterexample2;
  else if (*kind == "wishart") c.kind = ExperimentKind::wishart;
  else if (*kind == "equilibrium-check") c.kind = ExperimentKind::equilibrium_check;
  else throw ConfigError("unknown experiment '" + std::string(*kind) + "'");

  if (c.kind == ExperimentKind::inequalities) c.n = 32;
  if (c.kind == ExperimentKind::equilibrium_check) c.n = 4096;

  count("N", c.n);
  count("d", c.d);
  if (auto s = get("seed")) c.seed = detail::parse_u64("seed", *s);
  if (auto s = get("output")) c.output = std::string(*s);
  count("threads", c.threads);

  if (auto s = get("kernel")) {
    if (*s == "dirac") c.kernel.family = KernelFamily::dirac;
    else if (*s == "uniform") c.kernel.family = KernelFamily::uniform;
    else if (*s == "power_law") c.kernel.family = KernelFamily::power_law;
    else throw ConfigError("unknown kernel '" + std::string(*s) + "'");
  }
  num("kernel_theta0", c.kernel.theta0);
  num("kernel_theta_min", c.kernel.theta_min);
  num("kernel_nu", c.kernel.nu);

  num("horizon", c.horizon);
  num("sample_dt", c.sample_dt);
  count("replicas", c.replicas);
  num("delta", c.delta);

  const bool has_p = get("p").has_value(), has_q = get("q").has_value();
  num("p", c.p);
  num("q", c.q);
  if (!(c.delta > 0.0)) throw ConfigError("delta must be > 0");
  if (has_p && !(c.p > 1.0)) throw ConfigError("p must be > 1");
  if (has_q && !(c.q > 1.0)) throw ConfigError("q must be > 1");
  if (has_p && has_q) {
    if (std::abs(1.0 / c.p + 1.0 / c.q - 1.0) > 1e-12) throw ConfigError("1/p + 1/q must equal 1");
  } else if (has_p) {
    c.q = c.p / (c.p - 1.0);
  } else if (has_q) {
    c.p = c.q / (c.q - 1.0);
  } else {
    if (!(c.delta < 1.0))
      throw ConfigError("delta >= 1 has no order-4 exponents; set p (or q) explicitly");
    c.p = order4_p(c.delta);
    c.q = order4_q(c.delta);
  }

  if (auto s = get("initial_law")) {
    if (*s == "two_temperature") c.initial_law = InitialLaw::two_temperature;
    else if (*s == "equilibrium") c.initial_law = InitialLaw::equilibrium;
    else if (*s == "copy") c.initial_law = InitialLaw::copy;
    else throw ConfigError("unknown initial_law '" + std::string(*s) + "'");
  }
  num("initial_m4", c.initial_m4);
  count("kmain_samples", c.kmain_samples);
  count("instances", c.instances);
  count("particle_instances", c.particle_instances);
  num("tolerance", c.tolerance);

  if (auto s = get("M_values")) {
    c.m_values.clear();
    for (auto item : detail::split_list(*s)) c.m_values.push_back(detail::parse_double("M_values", item));
  }
  num("q_moment", c.q_moment);
  if (auto s = get("r_minus_values")) {
    c.r_minus_values.clear();
    for (auto item : detail::split_list(*s))
      c.r_minus_values.push_back(detail::parse_double("r_minus_values", item));
  }
  num("band_eps", c.band_eps);
  count("samples", c.samples);
  num("wishart_p", c.wishart_p);
  if (auto s = get("N_values")) {
    c.n_values.clear();
    for (auto item : detail::split_list(*s))
      c.n_values.push_back(static_cast<std::size_t>(detail::parse_u64("N_values", item)));
  }

  // Range checks shared by all experiment kinds.
  if (c.d < 3) throw ConfigError("d must be >= 3");
  if (c.n < 2) throw ConfigError("N must be >= 2");
  if (!(c.horizon >= 0.0)) throw ConfigError("horizon must be >= 0");
  if (!(c.sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
  if (!(c.tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
  try {
    (void)make_kernel(c.kernel);
  } catch (const Error& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }

  switch (c.kind) {
    case ExperimentKind::decay: {
      const double dd = static_cast<double>(c.d);
      if (c.initial_law == InitialLaw::two_temperature &&
          !(c.initial_m4 >= (dd + 2.0) / dd && c.initial_m4 < 2.0 * (dd + 2.0) / dd))
        throw ConfigError("initial_m4 must lie in [(d+2)/d, 2(d+2)/d)");
      if (c.kmain_samples < 2) throw ConfigError("kmain_samples must be >= 2");
      const double need = 2.0 * c.p * (1.0 + 2.0 * c.delta) / (dd - 1.0);
      if (!(static_cast<double>(c.n) - need > dd))
        throw ConfigError("N too small for a finite k_main moment at these (delta, p)");
      break;
    }
    case ExperimentKind::inequalities:
      break;
    case ExperimentKind::counterexample1:
      if (!(c.q_moment > 1.0 && c.q_moment < 2.0)) throw ConfigError("q_moment must lie in (1, 2)");
      if (c.m_values.empty()) throw ConfigError("M_values must not be empty");
      for (double m : c.m_values)
        if (!(m > 1.0)) throw ConfigError("M_values entries must be > 1");
      if (c.samples < 2) throw ConfigError("samples must be >= 2");
      break;
    case ExperimentKind::counterexample2:
      if (!(c.band_eps > 0.0)) throw ConfigError("band_eps must be > 0");
      if (c.r_minus_values.size() < 2) throw ConfigError("r_minus_values needs at least 2 entries");
      for (double r : c.r_minus_values)
        if (!(r > 0.0)) throw ConfigError("r_minus_values entries must be > 0");
      if (c.samples < 2) throw ConfigError("samples must be >= 2");
      break;
    case ExperimentKind::wishart: {
      if (!(c.wishart_p >= 1.0)) throw ConfigError("wishart_p must be >= 1");
      if (c.n_values.empty()) throw ConfigError("N_values must not be empty");
      const double dd = static_cast<double>(c.d);
      for (std::size_t n : c.n_values)
        if (!(static_cast<double>(n) - 2.0 * c.wishart_p / (dd - 1.0) > dd))
          throw ConfigError("N_values entry " + std::to_string(n) + " is outside the integrable regime");
      if (c.samples < 2) throw ConfigError("samples must be >= 2");
      break;
    }
    case ExperimentKind::equilibrium_check:
      if (c.replicas < 2) throw ConfigError("replicas must be >= 2");
      if (c.samples < 2) throw ConfigError("samples must be >= 2");
      break;
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace kac
