#pragma once

#include <cmath>
#include <vector>

#include "tdscf/observables.hpp"
#include "tdscf/potential.hpp"
#include "tdscf/time_stepping.hpp"
#include "tdscf/wave_field.hpp"
#include "tdscf/wkb.hpp"

namespace tdscf {

/// Quantum field psi(x) coupled to one classical coordinate (y, eta).
template <typename Real>
struct EhrenfestState {
  Real t;
  WaveField<Real> psi;
  Real y;
  Real eta;
};

/// Strang-Verlet splitting for the Ehrenfest system. Both sub-steps are solved
/// exactly: the kinetic step is free flight for psi and a drift for y; in the
/// potential step V(x, y) and the force are frozen, so psi picks up a phase and
/// eta a kick. The classical part is drift-kick-drift.
template <typename Real>
class Svsp2Propagator {
 public:
  Svsp2Propagator(const PotentialSpec<Real>& v, const Grid1D<Real>& x_grid, Real delta)
      : potential_(v), x_grid_(x_grid), delta_(delta), flight_(x_grid, delta) {
    potential_.check_x_grid(x_grid);
  }

  const PotentialSpec<Real>& potential() const { return potential_; }

  void kinetic_step(EhrenfestState<Real>& s, Real dt) {
    check(s);
    flight_.apply(s.psi.values(), dt);
    s.y += dt * s.eta;
  }

  /// The force uses |psi|^2 at the start of the step; the phase does not change
  /// it, so this is the exact solution of the frozen-force sub-problem.
  void potential_step(EhrenfestState<Real>& s, Real dt) {
    check(s);
    if (dt == Real(0)) return;
    const Real force = force_on_point(s.psi, potential_, s.y);
    apply_phase(s.psi.values(), potential_.values_at_y(x_grid_, s.y), dt, s.psi.scale());
    s.eta += dt * force;
  }

  void strang_step(EhrenfestState<Real>& s, Real dt) {
    if (!(dt > Real(0))) throw std::invalid_argument("eh_strang_step: dt must be positive");
    kinetic_step(s, dt / Real(2));
    potential_step(s, dt);
    kinetic_step(s, dt / Real(2));
    s.t += dt;
  }

 private:
  void check(const EhrenfestState<Real>& s) const {
    if (!(s.psi.grid() == x_grid_) || s.psi.scale() != delta_) {
      throw std::invalid_argument("Svsp2Propagator: state grid or scale differs from propagator");
    }
  }

  PotentialSpec<Real> potential_;
  Grid1D<Real> x_grid_;
  Real delta_;
  FreeFlight<Real> flight_;
};

template <typename Real>
EhrenfestState<Real> eh_kinetic_step(EhrenfestState<Real> s, const PotentialSpec<Real>& v,
                                     Real dt) {
  Svsp2Propagator<Real>(v, s.psi.grid(), s.psi.scale()).kinetic_step(s, dt);
  return s;
}

template <typename Real>
EhrenfestState<Real> eh_potential_step(EhrenfestState<Real> s, const PotentialSpec<Real>& v,
                                       Real dt) {
  Svsp2Propagator<Real>(v, s.psi.grid(), s.psi.scale()).potential_step(s, dt);
  return s;
}

template <typename Real>
EhrenfestState<Real> eh_strang_step(EhrenfestState<Real> s, const PotentialSpec<Real>& v,
                                    Real dt) {
  Svsp2Propagator<Real>(v, s.psi.grid(), s.psi.scale()).strang_step(s, dt);
  return s;
}

template <typename Real>
struct EhrenfestRecord {
  Real t = 0;
  Real mass = 0;
  Real energy = 0;
  Real y = 0;
  Real eta = 0;
  Real mean_x = 0;
  Real mean_p = 0;
  RealVector<Real> rho, j;
};

template <typename Real>
EhrenfestRecord<Real> observe(const EhrenfestState<Real>& s, const PotentialSpec<Real>& v,
                              bool with_fields) {
  EhrenfestRecord<Real> r;
  r.t = s.t;
  r.mass = s.psi.mass();
  r.energy = ehrenfest_energy(s.psi, s.y, s.eta, v);
  r.y = s.y;
  r.eta = s.eta;
  r.mean_x = mean_position(s.psi);
  r.mean_p = mean_momentum(s.psi);
  if (with_fields) {
    r.rho = s.psi.density();
    r.j = current_density(s.psi);
  }
  return r;
}

template <typename Real>
struct EhrenfestProblem {
  PotentialSpec<Real> potential;
  WkbData<Real> psi_in;
  Real y0;
  Real eta0;
  Real dt;
  Real t_final;
  int record_every = 0;
  bool record_fields = false;
};

template <typename Real>
struct EhrenfestRun {
  std::vector<EhrenfestRecord<Real>> records;
  EhrenfestState<Real> final_state;
};

template <typename Real>
EhrenfestRun<Real> run_ehrenfest(const EhrenfestProblem<Real>& problem) {
  EhrenfestState<Real> s{Real(0), problem.psi_in.field(), problem.y0, problem.eta0};
  Svsp2Propagator<Real> prop(problem.potential, s.psi.grid(), s.psi.scale());
  const StepPlan<Real> plan(problem.dt, problem.t_final);

  EhrenfestRun<Real> run{{}, s};
  run.records.push_back(observe(s, problem.potential, problem.record_fields));
  const long count = plan.count();
  for (long i = 0; i < count; ++i) {
    prop.strang_step(s, plan.size(i));
    s.t = plan.time_after(i);
    if (!std::isfinite(s.psi.values().squaredNorm()) || !std::isfinite(s.y) ||
        !std::isfinite(s.eta)) {
      throw NumericalFailure("run_ehrenfest: non-finite state", i + 1);
    }
    if (record_due(i, count, problem.record_every)) {
      run.records.push_back(observe(s, problem.potential, problem.record_fields));
    }
  }
  run.final_state = std::move(s);
  return run;
}

}  // namespace tdscf
