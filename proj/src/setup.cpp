#include "tdscf/harness/setup.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tdscf/harness/io.hpp"

namespace tdscf::harness {

namespace {

double sq(double v) { return v * v; }

WkbProfile<double> log_cosh_profile(double centre, double phase_centre) {
  return {[=](double x) { return std::exp(-25 * sq(x - centre)); },
          [=](double x) { return -std::log(2 * std::cosh(5 * (x - phase_centre))) / 5; },
          [=](double x) { return -std::tanh(5 * (x - phase_centre)); }};
}

std::vector<std::vector<double>> read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential table '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(parse_number(cell));
      } catch (const ConfigError&) {
        throw ConfigError(path + ": line " + std::to_string(rows.size() + 1) + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd sample(const std::string& name, const Grid& g) {
  Eigen::VectorXd v(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double x = g.node(j);
    if (name == "zero") {
      v[j] = 0;
    } else if (name == "cos") {
      v[j] = std::cos(x);
    } else if (name == "sin") {
      v[j] = std::sin(x);
    } else if (name == "square") {
      v[j] = 0.5 * x * x;
    } else {
      throw ConfigError("unknown separable term '" + name + "'");
    }
  }
  return v;
}

Eigen::VectorXd row_vector(const std::vector<double>& row, const Grid& g, const std::string& what) {
  if (static_cast<Eigen::Index>(row.size()) != g.size()) {
    throw ConfigError(what + " has " + std::to_string(row.size()) + " values, grid has " +
                      std::to_string(g.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(row.data(), g.size());
}

}  // namespace

WkbProfile<double> named_profile(const std::string& id) {
  if (id == "ex1_psi") {
    return {[](double x) { return std::exp(-2 * sq(x + 0.1)); }, [](double x) { return std::sin(x); },
            [](double x) { return std::cos(x); }};
  }
  if (id == "ex1_phi") {
    return {[](double y) { return std::exp(-5 * sq(y - 0.1)); }, [](double y) { return std::cos(y); },
            [](double y) { return -std::sin(y); }};
  }
  if (id == "ex2_psi") return log_cosh_profile(0.58, 0.6);
  if (id == "ex2_phi") return log_cosh_profile(0.5, 0.5);
  if (id == "ex3_psi") {
    return {[](double x) { return std::exp(-5 * sq(x + 0.1)); }, [](double x) { return std::sin(x); },
            [](double x) { return std::cos(x); }};
  }
  throw ConfigError("unknown initial data id '" + id + "'");
}

WkbData<double> initial_data(const std::string& id, const Grid& grid, double scale) {
  if (!id.starts_with("table:")) return named_profile(id).sample(grid, scale);
  const std::string path = id.substr(6);
  CsvTable t;
  try {
    t = read_csv(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  if (static_cast<Eigen::Index>(t.rows.size()) != grid.size()) {
    throw ConfigError(path + ": " + std::to_string(t.rows.size()) + " rows, grid has " +
                      std::to_string(grid.size()) + " nodes");
  }
  WkbData<double> d{Eigen::VectorXd(grid.size()), Eigen::VectorXd(grid.size()), std::nullopt, scale, grid};
  std::size_t amp = 0, phase = 0;
  try {
    amp = t.column("amplitude");
    phase = t.column("phase");
  } catch (const std::out_of_range& e) {
    throw ConfigError(path + ": " + e.what());
  }
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    d.amplitude[j] = t.rows[j][amp];
    d.phase[j] = t.rows[j][phase];
  }
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] != "phase_gradient") continue;
    Eigen::VectorXd g(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) g[j] = t.rows[j][c];
    d.phase_gradient = std::move(g);
  }
  return d;
}

PotentialSpec<double> make_potential(const std::string& text, const Grid& xg, const Grid& yg) {
  if (text == "harmonic") return PotentialSpec<double>::harmonic();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("unknown potential '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (kind == "constant") return PotentialSpec<double>::constant(parse_number(arg));
  if (kind == "separable") {
    const auto comma = arg.find(',');
    if (comma == std::string::npos) throw ConfigError("separable potential needs two terms: '" + text + "'");
    return PotentialSpec<double>::separable(sample(arg.substr(0, comma), xg), xg,
                                            sample(arg.substr(comma + 1), yg), yg);
  }
  if (kind == "separable_file") {
    const auto rows = read_matrix(arg);
    if (rows.size() != 2) throw ConfigError(arg + ": separable table needs exactly two rows");
    return PotentialSpec<double>::separable(row_vector(rows[0], xg, arg + " V1"), xg,
                                            row_vector(rows[1], yg, arg + " V2"), yg);
  }
  if (kind == "table") {
    const auto rows = read_matrix(arg);
    if (static_cast<Eigen::Index>(rows.size()) != xg.size()) {
      throw ConfigError(arg + ": " + std::to_string(rows.size()) + " rows, x-grid has " +
                        std::to_string(xg.size()));
    }
    Eigen::MatrixXd m(xg.size(), yg.size());
    for (Eigen::Index i = 0; i < xg.size(); ++i) m.row(i) = row_vector(rows[i], yg, arg + " row").transpose();
    return PotentialSpec<double>::tabulated(std::move(m), xg, yg);
  }
  throw ConfigError("unknown potential kind '" + kind + "'");
}

Grid x_grid(const ExperimentConfig& cfg) { return make_grid(cfg.a, cfg.b, effective_kx(cfg)); }
Grid y_grid(const ExperimentConfig& cfg) { return make_grid(cfg.a, cfg.b, effective_ky(cfg)); }

}  // namespace tdscf::harness
