#pragma once

#include <string>

#include "tdscf/harness/config.hpp"
#include "tdscf/potential.hpp"
#include "tdscf/wkb.hpp"

namespace tdscf::harness {

using Grid = Grid1D<double>;

/// Named analytic WKB profiles: ex1_psi, ex1_phi, ex2_psi, ex2_phi, ex3_psi.
WkbProfile<double> named_profile(const std::string& id);

/// Samples an initial datum: a named profile, or "table:<path>" pointing to a
/// CSV with columns amplitude,phase[,phase_gradient] and one row per node.
WkbData<double> initial_data(const std::string& id, const Grid& grid, double scale);

/// Potential from its text form:
///   harmonic                  V = (x + y)^2 / 2
///   constant:<c>              V = c
///   separable:<f>,<g>         V = f(x) + g(y), f and g in {zero, cos, sin, square}
///   separable_file:<path>     CSV with two rows: V1 on the x-grid, V2 on the y-grid
///   table:<path>              CSV matrix, row = x index, column = y index
PotentialSpec<double> make_potential(const std::string& text, const Grid& x_grid, const Grid& y_grid);

Grid x_grid(const ExperimentConfig& cfg);
Grid y_grid(const ExperimentConfig& cfg);

}  // namespace tdscf::harness
