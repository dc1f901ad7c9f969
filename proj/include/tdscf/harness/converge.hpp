#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdscf/harness/config.hpp"
#include "tdscf/harness/io.hpp"
#include "tdscf/harness/runner.hpp"

namespace tdscf::harness {

enum class Vary { dt, dx, dy, epsilon };

Vary parse_vary(const std::string& text);
std::string to_string(Vary v);

/// How the reference solution of a sweep is obtained.
///   finest_run: dt sweeps use min(dt) / 8 on the configured grids; dx/dy sweeps
///     use one grid level finer than the finest value at the configured dt;
///     epsilon sweeps use one reference per value at dt = dt_per_scale * scale.
///   explicit_config: the given configuration is run once as the reference.
struct ReferencePolicy {
  enum class Kind { finest_run, explicit_config } kind = Kind::finest_run;
  std::optional<ExperimentConfig> config;
  double dt_per_scale = 0.1;
  /// Snapshots of reference runs are stored here when non-empty.
  std::string cache_dir;
};

/// Errors of a tdscf run combine psi and phi as sqrt(e_psi^2 + e_phi^2); err_cl
/// is |(y, eta) - (y, eta)_ref| for the Ehrenfest solver and NaN otherwise.
struct SweepRow {
  double param = 0;
  double err_wf = 0;
  double err_rho = 0;
  double err_J = 0;
  double err_cl = 0;
};

/// Least-squares slope of log10(error) against log10(param) with the RMS
/// residual in log10 units.
struct OrderFit {
  double order = 0;
  double residual = 0;
};

OrderFit fit_order(const std::vector<double>& params, const std::vector<double>& errors);

struct SweepResult {
  Vary vary = Vary::dt;
  std::vector<SweepRow> rows;
  OrderFit fit_wf, fit_rho, fit_J, fit_cl;
  bool has_classical = false;

  /// param,err_wf,err_rho,err_J,order_fit[,err_cl]; order_fit is the local
  /// wavefunction order against the previous row (NaN on the first row).
  CsvTable table() const;
  /// quantity,order,residual for each fitted error column.
  CsvTable fit_table() const;
};

/// Runs the sweep on a pool of worker threads (0 = hardware concurrency).
/// Values must be strictly monotone. Throws ConfigError when the reference is
/// coarser than any sweep run in the varied parameter.
SweepResult converge(const ExperimentConfig& cfg, Vary vary, const std::vector<double>& values,
                     const ReferencePolicy& policy = {}, unsigned workers = 0);

/// Runs the reference configuration, reading or filling the snapshot cache.
RunOutput reference_run(const ExperimentConfig& ref, const std::string& cache_dir);

/// Calls fn(i) for i in [0, count) on up to `workers` threads; the first
/// exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Distances between quantum and classical position densities of Example 2
/// type runs, one row per (epsilon, side); side 0 is psi on x, 1 is phi on y.
struct LimitOptions {
  double dt_fine_per_scale = 0.135;
  double dt_coarse = 0.54 / 64;
  unsigned workers = 0;
};

struct LimitRow {
  double epsilon = 0;
  int side = 0;
  double rho_fine_cl = 0;
  double rho_coarse_cl = 0;
  double rho_fine_coarse = 0;
  double j_fine_cl = 0;
  double j_coarse_cl = 0;
  double cl_self = 0;
};

/// rho_* are L1 distances of position densities, j_* of currents; cl_self is
/// the L1 distance between classical densities at particle_refine and four
/// times as many particles.
std::vector<LimitRow> limit_compare(const ExperimentConfig& cfg, const std::vector<double>& epsilons,
                                    const LimitOptions& options = {});

CsvTable limit_table(const std::vector<LimitRow>& rows);

}  // namespace tdscf::harness
