// qgeo: verification suites, wavefield evolution and density identity reports.
//
// Exit status: 0 success, 1 a check failed or the evolution went unstable,
// 2 invalid configuration or input.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qgeo/qgeo.hpp"

namespace fs = std::filesystem;
using qgeo::ordered_json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;

ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  qgeo::require(static_cast<bool>(in), qgeo::ErrorKind::Io, "cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qgeo::Error(qgeo::ErrorKind::InvalidArgument, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  qgeo::require(static_cast<bool>(out), qgeo::ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

void reject_unknown_keys(const ordered_json& j, const std::vector<std::string>& known, const std::string& where) {
  qgeo::require(j.is_object(), qgeo::ErrorKind::InvalidArgument, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    qgeo::require(std::find(known.begin(), known.end(), key) != known.end(), qgeo::ErrorKind::InvalidArgument,
                  "unknown key '" + key + "' in " + where);
  }
}

/// Grid from either {"shape", "spacing", "origin", "boundary"} or the
/// shorthand {"dims", "nodes", "half_width", "boundary"}.
qgeo::Grid grid_from_config(const ordered_json& j) {
  if (j.contains("shape")) return qgeo::io::grid_from_json(j);
  reject_unknown_keys(j, {"dims", "nodes", "half_width", "boundary"}, "grid");
  return qgeo::Grid::centered(j.value("dims", 1), j.value("nodes", 512), j.value("half_width", 16.0),
                              qgeo::boundary_from_string(j.value("boundary", std::string("periodic"))));
}

// --- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string config;
  std::optional<std::string> suite;
  std::optional<int> dim;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> hbar;
  std::optional<double> mass;
  std::vector<std::string> tol;
  std::optional<std::string> out;
  bool quiet = false;
};

int run_verify(const VerifyArgs& a) {
  qgeo::SuiteConfig cfg;
  if (!a.config.empty()) cfg = qgeo::suite_config_from_json(read_json_file(a.config));
  if (a.suite) cfg.suite = *a.suite;
  if (a.dim) cfg.dim = *a.dim;
  if (a.trials) cfg.trials = *a.trials;
  if (a.seed) cfg.seed = *a.seed;
  if (a.hbar) cfg.hbar = *a.hbar;
  if (a.mass) cfg.mass = *a.mass;
  if (a.out) cfg.out = *a.out;
  for (const std::string& t : a.tol) {
    const auto eq = t.find('=');
    qgeo::require(eq != std::string::npos && eq > 0, qgeo::ErrorKind::InvalidArgument,
                  "--tol expects NAME=VALUE, got '" + t + "'");
    char* end = nullptr;
    const std::string value = t.substr(eq + 1);
    const double v = std::strtod(value.c_str(), &end);
    qgeo::require(end != value.c_str() && *end == '\0', qgeo::ErrorKind::InvalidArgument,
                  "tolerance '" + value + "' is not a number");
    cfg.tolerances[t.substr(0, eq)] = v;
  }
  cfg.validate();
  qgeo::suites::validate_tolerances(cfg);

  const qgeo::RunReport report = qgeo::suites::run_suite(cfg);
  if (!a.quiet) {
    for (const auto& c : report.checks) {
      std::printf("%-4s %-44s residual %.3e  tol %.1e\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.residual,
                  c.tolerance);
    }
  }
  std::printf("%zu checks, %zu failed\n", report.checks.size(), report.failures());
  const std::string out = cfg.out.empty() ? "qgeo_verify.json" : cfg.out;
  write_json_file(out, report.to_json());
  return report.pass() ? kExitPass : kExitFail;
}

// --- evolve ----------------------------------------------------------------

int run_evolve(const std::string& config_path, const std::optional<std::string>& out_override) {
  const ordered_json j = read_json_file(config_path);
  reject_unknown_keys(j, {"grid", "initial", "potential", "hbar", "mass", "scheme", "dt", "steps", "snapshot_every", "out"},
                      "evolve config");
  const qgeo::Grid g = grid_from_config(j.value("grid", ordered_json::object()));
  const double hbar = j.value("hbar", qgeo::kDefaultHbar);
  const double mass = j.value("mass", 1.0);
  qgeo::require(hbar > 0.0 && mass > 0.0, qgeo::ErrorKind::InvalidArgument, "hbar and mass must be positive");

  const ordered_json init = j.value("initial", ordered_json{{"kind", "gaussian"}});
  reject_unknown_keys(init, {"kind", "sigma", "x0", "k0", "beta", "csv"}, "initial");
  const std::string kind = init.value("kind", std::string("gaussian"));
  double sigma0 = init.value("sigma", 1.0);
  qgeo::ComplexField psi;
  if (kind == "gaussian") {
    qgeo::require(g.dims() == 1, qgeo::ErrorKind::InvalidArgument, "the built-in packet is 1-D");
    qgeo::require(sigma0 > 0.0, qgeo::ErrorKind::InvalidArgument, "sigma must be positive");
    psi = qgeo::experiments::gaussian_packet(g, sigma0, init.value("x0", 0.0), init.value("k0", 0.0),
                                             init.value("beta", 0.0));
  } else if (kind == "csv") {
    qgeo::require(init.contains("csv"), qgeo::ErrorKind::MissingInput, "initial.csv path is required");
    const fs::path p = fs::path(config_path).parent_path() / init.at("csv").get<std::string>();
    psi = qgeo::io::complex_from_table(qgeo::io::read_grid_table(p));
    qgeo::require(psi.grid().same_geometry(g), qgeo::ErrorKind::DimensionMismatch,
                  "initial wavefield grid differs from the configured grid");
  } else {
    throw qgeo::Error(qgeo::ErrorKind::InvalidArgument, "unknown initial kind '" + kind + "'");
  }

  const ordered_json pot = j.value("potential", ordered_json{{"kind", "none"}});
  reject_unknown_keys(pot, {"kind", "omega"}, "potential");
  const std::string pkind = pot.value("kind", std::string("none"));
  qgeo::ScalarField V(g);
  if (pkind == "harmonic") {
    V = qgeo::experiments::harmonic_potential(g, pot.value("omega", 1.0), mass);
  } else {
    qgeo::require(pkind == "none", qgeo::ErrorKind::InvalidArgument, "unknown potential kind '" + pkind + "'");
  }
  const bool free_gaussian = kind == "gaussian" && pkind == "none" && init.value("beta", 0.0) == 0.0;

  qgeo::EvolutionOptions opt;
  opt.scheme = qgeo::scheme_from_string(j.value("scheme", std::string("split_step")));
  opt.dt = j.value("dt", 0.0);
  opt.steps = j.value("steps", 100);
  opt.snapshot_every = j.value("snapshot_every", 10);
  qgeo::require(opt.snapshot_every >= 0, qgeo::ErrorKind::InvalidArgument, "snapshot_every must be nonnegative");
  const fs::path dir = out_override ? *out_override : j.value("out", std::string("qgeo_evolve"));
  fs::create_directories(dir);

  const qgeo::Wavefield w = qgeo::Wavefield::normalized(psi, hbar, mass, V);
  std::ofstream diag(dir / "diagnostics.csv");
  qgeo::require(static_cast<bool>(diag), qgeo::ErrorKind::Io, "cannot write diagnostics");
  diag << "step,t,norm,energy,norm_drift,energy_drift,sigma" << (free_gaussian ? ",sigma_exact" : "") << "\n";
  ordered_json snaps = ordered_json::array();
  std::optional<double> n0, e0;
  opt.on_snapshot = [&](const qgeo::Snapshot& s) {
    if (!n0) {
      n0 = s.norm;
      e0 = s.energy;
    }
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%06d.csv", s.step);
    std::ofstream f(dir / name);
    qgeo::require(static_cast<bool>(f), qgeo::ErrorKind::Io, std::string("cannot write ") + name);
    qgeo::io::write_complex_csv(f, s.psi);
    qgeo::ScalarField rho = s.psi.map([](qgeo::cplx z) { return std::norm(z); });
    for (double& v : rho.values()) v /= s.norm;
    const double sigma = std::sqrt(qgeo::moments(rho).variance);
    diag << s.step << "," << qgeo::io::format_double(s.t) << "," << qgeo::io::format_double(s.norm) << ","
         << qgeo::io::format_double(s.energy) << "," << qgeo::io::format_double(s.norm - *n0) << ","
         << qgeo::io::format_double(s.energy - *e0) << "," << qgeo::io::format_double(sigma);
    if (free_gaussian) {
      const double r = hbar * s.t / (2.0 * mass * sigma0 * sigma0);
      diag << "," << qgeo::io::format_double(sigma0 * std::sqrt(1.0 + r * r));
    }
    diag << "\n";
    snaps.push_back({{"step", s.step}, {"t", s.t}, {"file", name}, {"norm", s.norm}, {"energy", s.energy},
                     {"norm_drift", s.norm - *n0}, {"energy_drift", s.energy - *e0}, {"sigma", sigma}});
  };
  const qgeo::EvolutionResult r = qgeo::evolve_se(w, opt);

  ordered_json manifest;
  manifest["scheme"] = qgeo::to_string(opt.scheme);
  manifest["dt"] = r.dt;
  manifest["steps"] = opt.steps;
  manifest["grid"] = qgeo::io::grid_to_json(g);
  manifest["hbar"] = hbar;
  manifest["mass"] = mass;
  manifest["dispersion_number"] = r.dispersion_number;
  manifest["max_norm_drift"] = r.max_norm_drift;
  manifest["max_energy_drift"] = r.max_energy_drift;
  manifest["warnings"] = r.warnings;
  manifest["snapshots"] = snaps;
  write_json_file((dir / "manifest.json").string(), manifest);
  for (const auto& msg : r.warnings) std::fprintf(stderr, "warning: %s\n", msg.c_str());
  std::printf("%zu snapshots written to %s (norm drift %.2e, energy drift %.2e)\n", r.snapshots.size(),
              dir.string().c_str(), r.max_norm_drift, r.max_energy_drift);
  return kExitPass;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::string config;
  std::optional<std::string> density, csv, boundary, out;
  std::optional<int> dims, nodes;
  std::optional<double> half_width, sigma, hbar, mass;
};

struct ReportSettings {
  std::string density = "gaussian";
  std::string csv;
  int dims = 3;
  int nodes = 97;
  double half_width = 7.0;
  double sigma = 1.0;
  std::string boundary;
  double hbar = 1.0;
  double mass = 1.0;
  std::string out;
};

int run_report(const ReportArgs& args) {
  ReportSettings a;
  ordered_json j = ordered_json::object();
  if (!args.config.empty()) {
    j = read_json_file(args.config);
    reject_unknown_keys(j, {"density", "csv", "dims", "nodes", "half_width", "sigma", "boundary", "hbar", "mass", "out"},
                        "report config");
  }
  try {
    a.density = args.density.value_or(j.value("density", a.density));
    a.csv = args.csv.value_or(j.value("csv", a.csv));
    a.dims = args.dims.value_or(j.value("dims", a.dims));
    a.nodes = args.nodes.value_or(j.value("nodes", a.nodes));
    a.half_width = args.half_width.value_or(j.value("half_width", a.half_width));
    a.sigma = args.sigma.value_or(j.value("sigma", a.sigma));
    a.boundary = args.boundary.value_or(j.value("boundary", a.boundary));
    a.hbar = args.hbar.value_or(j.value("hbar", a.hbar));
    a.mass = args.mass.value_or(j.value("mass", a.mass));
    a.out = args.out.value_or(j.value("out", a.out));
  } catch (const nlohmann::json::exception& e) {
    throw qgeo::Error(qgeo::ErrorKind::InvalidArgument, std::string("malformed report config: ") + e.what());
  }
  qgeo::ScalarField rho;
  if (a.density == "csv") {
    qgeo::require(!a.csv.empty(), qgeo::ErrorKind::MissingInput, "--csv is required for a CSV density");
    rho = qgeo::io::read_scalar_csv(a.csv);
  } else {
    qgeo::require(a.dims >= 1 && a.dims <= 4, qgeo::ErrorKind::InvalidArgument, "dims must be 1 to 4");
    if (a.density == "gaussian") {
      const qgeo::Boundary b = a.boundary.empty() ? qgeo::Boundary::Decay : qgeo::boundary_from_string(a.boundary);
      rho = qgeo::experiments::gaussian_density(qgeo::Grid::centered(a.dims, a.nodes, a.half_width, b), a.sigma);
    } else if (a.density == "uniform") {
      const qgeo::Boundary b = a.boundary.empty() ? qgeo::Boundary::Periodic : qgeo::boundary_from_string(a.boundary);
      rho = qgeo::ScalarField(qgeo::Grid::centered(a.dims, a.nodes, a.half_width, b));
      for (double& v : rho.values()) v = 1.0;
    } else {
      throw qgeo::Error(qgeo::ErrorKind::InvalidArgument, "unknown density '" + a.density + "'");
    }
  }
  ordered_json out;
  out["input"] = a.density == "csv" ? a.csv : a.density;
  const ordered_json body = qgeo::identity_report(rho, a.hbar, a.mass);
  for (const auto& [k, v] : body.items()) out[k] = v;
  const std::string text = out.dump(2);
  if (a.out.empty()) {
    std::cout << text << "\n";
  } else {
    write_json_file(a.out, out);
    std::printf("report written to %s\n", a.out.c_str());
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum information geometry checks"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run a verification suite and write a JSON report");
  verify->add_option("--config", va.config, "flat JSON config; flags override it");
  verify->add_option("--suite", va.suite, "kahler, brackets, fisher, madelung, weyl or all");
  verify->add_option("--dim", va.dim, "Hilbert space dimension for the finite-dimensional suites");
  verify->add_option("--trials", va.trials, "random trials per check");
  verify->add_option("--seed", va.seed, "base random seed");
  verify->add_option("--hbar", va.hbar, "Planck constant (also the Kahler scale nu)");
  verify->add_option("--mass", va.mass, "particle mass");
  verify->add_option("--tol", va.tol, "tolerance override NAME=VALUE (repeatable)");
  verify->add_option("--out", va.out, "report path (default qgeo_verify.json)");
  verify->add_flag("--quiet", va.quiet, "print only the summary line");

  std::string evolve_config;
  std::optional<std::string> evolve_out;
  auto* evolve = app.add_subcommand("evolve", "evolve a wavefield and write snapshots");
  evolve->add_option("--config", evolve_config, "evolution config (JSON)")->required();
  evolve->add_option("--out", evolve_out, "output directory");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "identity report for one density");
  report->add_option("--config", ra.config, "report config (JSON); flags override it");
  report->add_option("--density", ra.density, "gaussian, uniform or csv");
  report->add_option("--csv", ra.csv, "density grid file");
  report->add_option("--dims", ra.dims, "dimensions of a built-in density");
  report->add_option("--nodes", ra.nodes, "nodes per axis of a built-in density");
  report->add_option("--half-width", ra.half_width, "half width of the built-in box");
  report->add_option("--sigma", ra.sigma, "Gaussian width");
  report->add_option("--boundary", ra.boundary, "decay or periodic");
  report->add_option("--hbar", ra.hbar, "Planck constant");
  report->add_option("--mass", ra.mass, "particle mass");
  report->add_option("--out", ra.out, "report path (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*verify) return run_verify(va);
    if (*evolve) return run_evolve(evolve_config, evolve_out);
    if (*report) return run_report(ra);
  } catch (const qgeo::Error& e) {
    std::fprintf(stderr, "qgeo: %s\n", e.what());
    return e.kind() == qgeo::ErrorKind::NumericalFailure ? kExitFail : kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "qgeo: invalid config: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qgeo: %s\n", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}
