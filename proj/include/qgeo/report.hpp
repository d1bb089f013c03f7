#pragma once

// Check records, suite configuration and the JSON run report.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qgeo/core.hpp"

namespace qgeo {

using ordered_json = nlohmann::ordered_json;

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"kahler", "brackets", "fisher", "madelung", "weyl", "all"};
  return names;
}

struct SuiteConfig {
  std::string suite = "all";
  int dim = 4;
  int trials = 100;
  std::uint64_t seed = 42;
  double hbar = 1.0;
  double mass = 1.0;
  std::map<std::string, double> tolerances;  // overrides keyed by check name
  std::string out;

  void validate() const {
    require(std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end(),
            ErrorKind::InvalidArgument, "unknown suite '" + suite + "'");
    require(dim >= 2 && dim <= 64, ErrorKind::InvalidArgument, "dim must be between 2 and 64");
    require(trials >= 1, ErrorKind::InvalidArgument, "trials must be at least 1");
    require(hbar > 0.0 && mass > 0.0, ErrorKind::InvalidArgument, "hbar and mass must be positive");
    for (const auto& [name, tol] : tolerances) {
      require(tol > 0.0 && std::isfinite(tol), ErrorKind::InvalidArgument,
              "tolerance for '" + name + "' must be positive");
    }
  }

  ordered_json to_json() const {
    ordered_json j;
    j["suite"] = suite;
    j["dim"] = dim;
    j["trials"] = trials;
    j["seed"] = seed;
    j["hbar"] = hbar;
    j["mass"] = mass;
    j["tolerances"] = ordered_json::object();
    for (const auto& [k, v] : tolerances) j["tolerances"][k] = v;
    return j;
  }
};

/// Reads a flat JSON config. Unknown keys are rejected.
inline SuiteConfig suite_config_from_json(const ordered_json& j, SuiteConfig base = {}) {
  require(j.is_object(), ErrorKind::InvalidArgument, "config must be a JSON object");
  static const std::vector<std::string> known{"suite", "dim", "trials", "seed", "hbar", "mass", "tolerances", "out"};
  for (const auto& [key, value] : j.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(), ErrorKind::InvalidArgument,
            "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("suite")) base.suite = j.at("suite").get<std::string>();
    if (j.contains("dim")) base.dim = j.at("dim").get<int>();
    if (j.contains("trials")) base.trials = j.at("trials").get<int>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("hbar")) base.hbar = j.at("hbar").get<double>();
    if (j.contains("mass")) base.mass = j.at("mass").get<double>();
    if (j.contains("out")) base.out = j.at("out").get<std::string>();
    if (j.contains("tolerances")) {
      for (const auto& [k, v] : j.at("tolerances").items()) base.tolerances[k] = v.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed config value: ") + e.what());
  }
  return base;
}

struct CheckRecord {
  std::string name;
  std::string identity;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  bool pass = true;
};

/// Keeps the worst trial of one named check.
class CheckAccumulator {
 public:
  CheckAccumulator(std::string name, std::string identity, double tolerance) {
    rec_.name = std::move(name);
    rec_.identity = std::move(identity);
    rec_.tolerance = tolerance;
  }

  void add(double lhs, double rhs, double residual) {
    if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
    if (rec_.trials == 0 || residual > rec_.residual || std::isnan(rec_.residual)) {
      rec_.lhs = lhs;
      rec_.rhs = rhs;
      rec_.residual = residual;
    }
    ++rec_.trials;
  }

  CheckRecord finish() const {
    CheckRecord r = rec_;
    r.pass = r.trials > 0 && r.residual <= r.tolerance;
    return r;
  }

 private:
  CheckRecord rec_;
};

/// |a - b| / max(1, |a|, |b|).
inline double relative_residual(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double relative_to(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct RunReport {
  SuiteConfig config;
  std::vector<CheckRecord> checks;
  ordered_json findings = ordered_json::object();
  std::vector<std::string> skipped;
  std::vector<std::pair<std::string, double>> timing;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
  }

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const CheckRecord& c) { return !c.pass; }));
  }

  /// Everything except timing; identical for identical (config, seed).
  ordered_json numeric_section() const {
    ordered_json j;
    j["config"] = config.to_json();
    j["checks"] = ordered_json::array();
    for (const auto& c : checks) {
      ordered_json r;
      r["name"] = c.name;
      r["identity"] = c.identity;
      r["lhs"] = c.lhs;
      r["rhs"] = c.rhs;
      r["residual"] = c.residual;
      r["tolerance"] = c.tolerance;
      r["trials"] = c.trials;
      r["pass"] = c.pass;
      j["checks"].push_back(r);
    }
    j["findings"] = findings;
    j["skipped"] = skipped;
    j["summary"] = {{"checks", checks.size()}, {"failed", failures()}, {"pass", pass()}};
    return j;
  }

  ordered_json to_json() const {
    ordered_json j = numeric_section();
    j["environment"] = environment();
    ordered_json t = ordered_json::object();
    for (const auto& [k, v] : timing) t[k] = v;
    j["timing"] = t;
    return j;
  }

  static ordered_json environment() {
    ordered_json e;
#if defined(__clang__)
    e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    e["compiler"] = std::string("gcc ") + __VERSION__;
#else
    e["compiler"] = "unknown";
#endif
    e["cxx_standard"] = static_cast<long>(__cplusplus);
    return e;
  }
};

/// Wall-clock stopwatch for the timing section.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qgeo
