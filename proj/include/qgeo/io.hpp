#pragma once

// CSV grid files and manifold specifications.
//
// A grid file starts with one line "# {json header}" naming the grid geometry
// and the value columns, then a column-name row, then one row per node:
// coordinates followed by values, printed with 17 significant digits.

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgeo/grid.hpp"
#include "qgeo/report.hpp"
#include "qgeo/weyl.hpp"

namespace qgeo::io {

struct GridTable {
  Grid grid;
  std::vector<std::string> names;
  std::vector<ScalarField> columns;

  const ScalarField& column(const std::string& name) const {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (names[c] == name) return columns[c];
    }
    throw Error(ErrorKind::MissingInput, "grid file has no column '" + name + "'");
  }
};

inline ordered_json grid_to_json(const Grid& g) {
  ordered_json j;
  j["dims"] = g.dims();
  j["shape"] = g.shape();
  j["spacing"] = g.spacing();
  j["origin"] = g.origin();
  j["boundary"] = to_string(g.boundary());
  return j;
}

inline Grid grid_from_json(const ordered_json& j) {
  try {
    const auto shape = j.at("shape").get<std::vector<int>>();
    const auto spacing = j.at("spacing").get<std::vector<double>>();
    std::vector<double> origin = j.contains("origin") ? j.at("origin").get<std::vector<double>>()
                                                      : std::vector<double>(shape.size(), 0.0);
    if (j.contains("dims")) {
      require(j.at("dims").get<int>() == static_cast<int>(shape.size()), ErrorKind::DimensionMismatch,
              "dims does not match the shape");
    }
    const Boundary b = boundary_from_string(j.value("boundary", std::string("decay")));
    return Grid(shape, spacing, origin, b);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed grid header: ") + e.what());
  }
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_grid_table(std::ostream& out, const Grid& g, const std::vector<std::string>& names,
                             const std::vector<const ScalarField*>& columns) {
  require(names.size() == columns.size() && !names.empty(), ErrorKind::InvalidArgument,
          "one name per column is required");
  for (const ScalarField* c : columns) {
    require(c->grid().same_geometry(g), ErrorKind::DimensionMismatch, "column on a different grid");
  }
  ordered_json header = grid_to_json(g);
  header["columns"] = names;
  out << "# " << header.dump() << "\n";
  for (int a = 0; a < g.dims(); ++a) out << "x" << a << ",";
  for (std::size_t c = 0; c < names.size(); ++c) out << names[c] << (c + 1 < names.size() ? "," : "\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    for (int a = 0; a < g.dims(); ++a) out << format_double(x[a]) << ",";
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << format_double((*columns[c])[i]) << (c + 1 < columns.size() ? "," : "\n");
    }
  }
  require(static_cast<bool>(out), ErrorKind::Io, "write failed");
}

inline GridTable read_grid_table(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, "empty grid file");
  require(line.rfind("# ", 0) == 0, ErrorKind::InvalidArgument, "grid file must start with a '# {json}' header");
  ordered_json header;
  try {
    header = ordered_json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("unparsable grid header: ") + e.what());
  }
  GridTable t{grid_from_json(header), {}, {}};
  try {
    t.names = header.at("columns").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidArgument, "grid header lacks a 'columns' list");
  }
  require(!t.names.empty(), ErrorKind::InvalidArgument, "grid file has no value columns");
  const Grid& g = t.grid;
  const std::size_t width = static_cast<std::size_t>(g.dims()) + t.names.size();
  t.columns.assign(t.names.size(), ScalarField(g));

  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, "grid file lacks the column-name row");
  std::vector<double> row;
  std::size_t node = 0;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    require(node < g.size(), ErrorKind::DimensionMismatch, "more rows than grid nodes");
    row.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      require(end != cell.c_str(), ErrorKind::InvalidArgument,
              "line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
      row.push_back(v);
    }
    require(row.size() == width, ErrorKind::DimensionMismatch,
            "line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields");
    const auto x = g.position(node);
    for (int a = 0; a < g.dims(); ++a) {
      require(std::abs(row[a] - x[a]) <= 1e-9 * (1.0 + std::abs(x[a])), ErrorKind::DimensionMismatch,
              "line " + std::to_string(lineno) + ": coordinates do not match the header grid");
    }
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      const double v = row[g.dims() + c];
      require(std::isfinite(v), ErrorKind::InvalidArgument,
              "line " + std::to_string(lineno) + ": non-finite value");
      t.columns[c][node] = v;
    }
    ++node;
  }
  require(node == g.size(), ErrorKind::DimensionMismatch,
          "grid file has " + std::to_string(node) + " rows for " + std::to_string(g.size()) + " nodes");
  return t;
}

inline GridTable read_grid_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  return read_grid_table(in);
}

inline void write_grid_table(const std::filesystem::path& path, const Grid& g, const std::vector<std::string>& names,
                             const std::vector<const ScalarField*>& columns) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  write_grid_table(out, g, names, columns);
}

inline void write_scalar_csv(const std::filesystem::path& path, const ScalarField& f,
                             const std::string& name = "value") {
  write_grid_table(path, f.grid(), {name}, {&f});
}

inline ScalarField read_scalar_csv(const std::filesystem::path& path, const std::string& name = "value") {
  return read_grid_table(path).column(name);
}

inline void write_complex_csv(std::ostream& out, const ComplexField& psi) {
  ScalarField re(psi.grid()), im(psi.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    re[i] = psi[i].real();
    im[i] = psi[i].imag();
  }
  write_grid_table(out, psi.grid(), {"re", "im"}, {&re, &im});
}

inline ComplexField complex_from_table(const GridTable& t) {
  const ScalarField& re = t.column("re");
  const ScalarField& im = t.column("im");
  ComplexField psi(t.grid);
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = cplx(re[i], im[i]);
  return psi;
}

// ---------------------------------------------------------------------------
// Manifold specification:
//   {"grid": {...}, "metric": {"mode": "constant", "matrix": [[...]]}
//                             | {"mode": "sampled", "csv": "metric.csv"},
//    "gauge": {"mode": "zero"} | {"mode": "from_density", "csv": "rho.csv"}
//             | {"mode": "sampled", "csv": "phi.csv"}}
// Sampled metrics carry columns g00, g01, ... (upper triangle); sampled gauges
// carry phi0, phi1, ...; CSV paths are relative to the spec file.

inline std::string metric_column(int a, int b) {
  return "g" + std::to_string(std::min(a, b)) + std::to_string(std::max(a, b));
}

inline WeylManifold manifold_from_json(const ordered_json& spec, const std::filesystem::path& base_dir = {}) {
  require(spec.is_object(), ErrorKind::InvalidArgument, "manifold spec must be a JSON object");
  require(spec.contains("grid"), ErrorKind::MissingInput, "manifold spec needs a 'grid'");
  const Grid g = grid_from_json(spec.at("grid"));
  const int n = g.dims();
  require(n >= 2, ErrorKind::InvalidArgument, "a manifold needs at least 2 dimensions");
  auto table_for = [&](const ordered_json& node) {
    require(node.contains("csv"), ErrorKind::MissingInput, "sampled mode needs a 'csv' path");
    const GridTable t = read_grid_table(base_dir / node.at("csv").get<std::string>());
    require(t.grid.same_geometry(g), ErrorKind::DimensionMismatch, "CSV grid differs from the spec grid");
    return t;
  };
  auto mode_of = [](const ordered_json& node, const std::string& what) {
    require(node.is_object() && node.contains("mode"), ErrorKind::MissingInput, what + " needs a 'mode'");
    return node.at("mode").get<std::string>();
  };

  std::optional<TensorField> gauge;
  const ordered_json gnode = spec.value("gauge", ordered_json{{"mode", "zero"}});
  const std::string gmode = mode_of(gnode, "gauge");
  if (gmode == "from_density") {
    gauge = gauge_from_density(table_for(gnode).column("value"), n);
  } else if (gmode == "sampled") {
    const GridTable t = table_for(gnode);
    TensorField phi(g, {Variance::Lower});
    for (int a = 0; a < n; ++a) phi({a}) = t.column("phi" + std::to_string(a));
    gauge = std::move(phi);
  } else {
    require(gmode == "zero", ErrorKind::InvalidArgument, "unknown gauge mode '" + gmode + "'");
  }

  require(spec.contains("metric"), ErrorKind::MissingInput, "manifold spec needs a 'metric'");
  const ordered_json& mnode = spec.at("metric");
  const std::string mmode = mode_of(mnode, "metric");
  if (mmode == "constant") {
    std::vector<std::vector<double>> rows;
    try {
      rows = mnode.at("matrix").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::InvalidArgument, "constant metric needs an n x n 'matrix'");
    }
    require(static_cast<int>(rows.size()) == n, ErrorKind::DimensionMismatch, "metric matrix has the wrong size");
    RMatrix m(n, n);
    for (int a = 0; a < n; ++a) {
      require(static_cast<int>(rows[a].size()) == n, ErrorKind::DimensionMismatch, "metric matrix has the wrong size");
      for (int b = 0; b < n; ++b) m(a, b) = rows[a][b];
    }
    return WeylManifold::flat(g, m, gauge);
  }
  require(mmode == "sampled", ErrorKind::InvalidArgument, "unknown metric mode '" + mmode + "'");
  const GridTable t = table_for(mnode);
  TensorField metric(g, {Variance::Lower, Variance::Lower});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) metric({a, b}) = t.column(metric_column(a, b));
  }
  return WeylManifold(std::move(metric), gauge ? std::move(*gauge) : TensorField(g, {Variance::Lower}));
}

inline WeylManifold load_manifold(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  ordered_json spec;
  try {
    spec = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("unparsable manifold spec: ") + e.what());
  }
  return manifold_from_json(spec, path.parent_path());
}

}  // namespace qgeo::io
