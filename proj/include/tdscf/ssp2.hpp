#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "tdscf/observables.hpp"
#include "tdscf/potential.hpp"
#include "tdscf/time_stepping.hpp"
#include "tdscf/wave_field.hpp"
#include "tdscf/wkb.hpp"

namespace tdscf {

/// Coupled pair at one instant: psi on the x-grid with scale delta, phi on the
/// y-grid with scale epsilon.
template <typename Real>
struct TdscfState {
  Real t;
  WaveField<Real> psi;
  WaveField<Real> phi;
};

struct Ssp2Options {
  /// Keep the kinetic part theta inside Lambda. Dropping it changes phi only by
  /// a global phase.
  bool include_theta = true;
  /// Merge adjacent kinetic half steps between records.
  bool fuse_kinetic = false;
};

/// Second-order Strang splitting for the TDSCF pair on periodic grids:
/// kinetic(dt/2), potential(dt), kinetic(dt/2). The kinetic step is exact in
/// Fourier space, the psi potential step is exact because Upsilon does not change
/// during it, and the phi phase integrates Lambda with the trapezoidal rule.
///
/// Holds FFT plans and multiplier caches, so one instance per thread.
template <typename Real>
class Ssp2Propagator {
 public:
  Ssp2Propagator(const PotentialSpec<Real>& v, const Grid1D<Real>& x_grid,
                 const Grid1D<Real>& y_grid, Real delta, Real epsilon, Ssp2Options options = {})
      : potential_(v.tabulated_on(x_grid, y_grid)),
        x_grid_(x_grid),
        y_grid_(y_grid),
        delta_(delta),
        epsilon_(epsilon),
        options_(options),
        psi_flight_(x_grid, delta),
        phi_flight_(y_grid, epsilon) {
    potential_.check_grids(x_grid, y_grid);
  }

  const PotentialSpec<Real>& potential() const { return potential_; }
  const Ssp2Options& options() const { return options_; }

  /// Free flight of both fields over dt. Does not advance t.
  void kinetic_step(TdscfState<Real>& s, Real dt) {
    check(s);
    psi_flight_.apply(s.psi.values(), dt);
    phi_flight_.apply(s.phi.values(), dt);
  }

  /// Both mean fields are evaluated before either field moves; psi is updated
  /// first, then Lambda at the end of the step, then phi. Does not advance t.
  void potential_step(TdscfState<Real>& s, Real dt) {
    check(s);
    if (dt == Real(0)) return;
    const RealVector<Real> ups = upsilon(s.phi, potential_, x_grid_);
    const RealVector<Real> expectation = cal_v(s.psi, potential_, y_grid_);
    const Real theta_start = options_.include_theta ? kinetic_energy(s.psi) : Real(0);

    apply_phase(s.psi.values(), ups, dt, s.psi.scale());

    // |psi| is unchanged, so calV is too; only theta moves.
    const Real theta_end = options_.include_theta ? kinetic_energy(s.psi) : Real(0);
    const RealVector<Real> lambda_mean =
        expectation.array() + Real(0.5) * (theta_start + theta_end);
    apply_phase(s.phi.values(), lambda_mean, dt, s.phi.scale());
  }

  void strang_step(TdscfState<Real>& s, Real dt) {
    if (!(dt > Real(0))) throw std::invalid_argument("strang_step: dt must be positive");
    kinetic_step(s, dt / Real(2));
    potential_step(s, dt);
    kinetic_step(s, dt / Real(2));
    s.t += dt;
  }

 private:
  void check(const TdscfState<Real>& s) const {
    if (!(s.psi.grid() == x_grid_) || !(s.phi.grid() == y_grid_)) {
      throw std::invalid_argument("Ssp2Propagator: state grids differ from propagator grids");
    }
    if (s.psi.scale() != delta_ || s.phi.scale() != epsilon_) {
      throw std::invalid_argument("Ssp2Propagator: state scales differ from propagator scales");
    }
  }

  PotentialSpec<Real> potential_;
  Grid1D<Real> x_grid_;
  Grid1D<Real> y_grid_;
  Real delta_;
  Real epsilon_;
  Ssp2Options options_;
  FreeFlight<Real> psi_flight_;
  FreeFlight<Real> phi_flight_;
};

template <typename Real>
TdscfState<Real> kinetic_step(TdscfState<Real> s, Real dt) {
  if (dt < Real(0)) throw std::invalid_argument("kinetic_step: dt must be non-negative");
  FreeFlight<Real>(s.psi.grid(), s.psi.scale()).apply(s.psi.values(), dt);
  FreeFlight<Real>(s.phi.grid(), s.phi.scale()).apply(s.phi.values(), dt);
  return s;
}

template <typename Real>
TdscfState<Real> potential_step(TdscfState<Real> s, const PotentialSpec<Real>& v, Real dt,
                                Ssp2Options options = {}) {
  Ssp2Propagator<Real>(v, s.psi.grid(), s.phi.grid(), s.psi.scale(), s.phi.scale(), options)
      .potential_step(s, dt);
  return s;
}

template <typename Real>
TdscfState<Real> strang_step(TdscfState<Real> s, const PotentialSpec<Real>& v, Real dt,
                             Ssp2Options options = {}) {
  Ssp2Propagator<Real>(v, s.psi.grid(), s.phi.grid(), s.psi.scale(), s.phi.scale(), options)
      .strang_step(s, dt);
  return s;
}

template <typename Real>
struct TdscfProblem {
  PotentialSpec<Real> potential;
  WkbData<Real> psi_in;  // scale delta, x-grid
  WkbData<Real> phi_in;  // scale epsilon, y-grid
  Real dt;
  Real t_final;
  int record_every = 0;
  bool record_fields = false;
  Ssp2Options options;
};

template <typename Real>
struct TdscfRun {
  std::vector<ObservableRecord<Real>> records;
  TdscfState<Real> final_state;
};

namespace detail {
template <typename Real>
bool finite(const ComplexVector<Real>& u) {
  return std::isfinite(u.squaredNorm());
}
}  // namespace detail

/// Normalize the initial data, step to t_final and record diagnostics at t = 0,
/// every record_every steps, and at the final time.
template <typename Real>
TdscfRun<Real> run_tdscf(const TdscfProblem<Real>& problem) {
  TdscfState<Real> s{Real(0), problem.psi_in.field(), problem.phi_in.field()};
  Ssp2Propagator<Real> prop(problem.potential, s.psi.grid(), s.phi.grid(), s.psi.scale(),
                            s.phi.scale(), problem.options);
  const StepPlan<Real> plan(problem.dt, problem.t_final);
  const auto& v = prop.potential();

  TdscfRun<Real> run{{}, s};
  run.records.push_back(observe(Real(0), s.psi, s.phi, v, problem.record_fields));

  bool open = false;  // a fused kinetic half step is still owed
  Real owed = 0;
  const long count = plan.count();
  for (long i = 0; i < count; ++i) {
    const Real h = plan.size(i);
    prop.kinetic_step(s, open ? owed + h / Real(2) : h / Real(2));
    prop.potential_step(s, h);
    const bool due = record_due(i, count, problem.record_every);
    if (problem.options.fuse_kinetic && !due) {
      open = true;
      owed = h / Real(2);
    } else {
      prop.kinetic_step(s, h / Real(2));
      open = false;
    }
    s.t = plan.time_after(i);
    if (!detail::finite(s.psi.values()) || !detail::finite(s.phi.values())) {
      throw NumericalFailure("run_tdscf: non-finite wavefunction", i + 1);
    }
    if (due) run.records.push_back(observe(s.t, s.psi, s.phi, v, problem.record_fields));
  }
  run.final_state = std::move(s);
  return run;
}

}  // namespace tdscf
