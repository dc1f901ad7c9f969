#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdscf/ensemble.hpp"
#include "tdscf/harness/config.hpp"
#include "tdscf/harness/io.hpp"
#include "tdscf/wave_field.hpp"

namespace tdscf::harness {

/// Final state of one run. Fields hold psi (and phi for tdscf); ensembles hold
/// the x and y clouds of the classical solver or the y cloud of the mixed one;
/// classical holds (y, eta) of the Ehrenfest solver.
struct RunOutput {
  ExperimentConfig config;
  double t = 0;
  std::vector<WaveField<double>> fields;
  std::vector<Ensemble<double>> ensembles;
  std::optional<std::pair<double, double>> classical;
  CsvTable trajectory;
};

/// Runs the configured solver. Throws ConfigError for invalid input and
/// NumericalFailure when the state stops being finite.
RunOutput run_experiment(const ExperimentConfig& cfg);

/// trajectory.csv, final.snap, and per-side density files (x,rho,J) plus
/// ensemble files (q,p,w) where applicable.
void write_artifacts(const RunOutput& out, const std::string& dir);

/// Preset plus overrides, run, artifacts written to the configured output.
RunOutput run_preset(const std::string& name, const std::map<std::string, std::string>& overrides);

/// Ensemble sampled from a WKB datum on a grid refined by the given factor.
Ensemble<double> wkb_ensemble(const std::string& id, const ExperimentConfig& cfg, bool x_side);

}  // namespace tdscf::harness
