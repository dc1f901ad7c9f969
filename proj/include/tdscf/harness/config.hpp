#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdscf::harness {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Solver { tdscf, ehrenfest, classical, mixed };

std::string to_string(Solver s);
Solver parse_solver(const std::string& text);

/// Everything needed to reconstruct a run. Grids are periodic on [a, b) with
/// 2^kx and 2^ky nodes; when dx_per_scale is positive each grid is refined
/// until its spacing is at most dx_per_scale times its own scale.
struct ExperimentConfig {
  std::string preset;
  Solver solver = Solver::tdscf;
  double a = -3.141592653589793;
  double b = 3.141592653589793;
  int kx = 9;
  int ky = 9;
  double epsilon = 1.0 / 64;
  double delta = 1.0;
  bool delta_tracks_epsilon = false;
  double dx_per_scale = 0.0;
  bool tie_grids = false;
  std::string potential = "harmonic";
  std::string psi = "ex1_psi";
  std::string phi = "ex1_phi";
  double y0 = 0.0;
  double eta0 = 0.1;
  double dt = 0.4 / 64;
  double t_final = 0.4;
  int record_every = 0;
  bool include_theta = true;
  int particle_refine = 4;
  double bandwidth_cells = 2.0;
  std::string output = "out";
};

const std::vector<std::string>& preset_names();

/// Desk-scale defaults of the four experiments; throws ConfigError for an
/// unknown name.
ExperimentConfig preset(const std::string& name);

/// Sets one field from text. Numbers accept "p/q" fractions and "pi" factors,
/// so "0.4/8", "1/512" and "-pi" are all valid.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

void apply_overrides(ExperimentConfig& cfg, const std::map<std::string, std::string>& overrides);

/// Parses "key = value" lines ('#' starts a comment) or a JSON object. A
/// "preset" key, if present, is applied before every other key.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

double parse_number(const std::string& text);

/// Throws ConfigError when an invariant fails: dt <= T, scales in (0, 1],
/// b > a, grid exponents in range, known solver inputs.
void validate(const ExperimentConfig& cfg);

/// Grid exponents after applying the dx_per_scale rule.
int effective_kx(const ExperimentConfig& cfg);
int effective_ky(const ExperimentConfig& cfg);

/// Scale of the x and y equations after delta_tracks_epsilon.
double effective_delta(const ExperimentConfig& cfg);

/// Deterministic text of every field that affects numerical results; the
/// output path is excluded.
std::string canonical_string(const ExperimentConfig& cfg);

}  // namespace tdscf::harness
