#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tdscf/ensemble.hpp"
#include "tdscf/potential.hpp"
#include "tdscf/time_stepping.hpp"
#include "tdscf/wave_field.hpp"
#include "tdscf/wkb.hpp"

namespace tdscf {

/// Phase-space point of the two-particle Hamiltonian system.
template <typename Real>
struct TwoParticleState {
  Real t = 0;
  Real x = 0;
  Real xi = 0;
  Real y = 0;
  Real eta = 0;
};

namespace detail {
template <typename Real>
void require_pointwise(const PotentialSpec<Real>& v, const char* what) {
  if (!v.pointwise()) {
    throw std::invalid_argument(std::string(what) +
                                ": tabulated potential has no pointwise gradient");
  }
}
}  // namespace detail

/// H = xi^2/2 + eta^2/2 + V(x, y) advanced by drift-kick-drift.
template <typename Real>
void two_particle_step(TwoParticleState<Real>& s, const PotentialSpec<Real>& v, Real dt) {
  const Real half = dt / Real(2);
  s.x += half * s.xi;
  s.y += half * s.eta;
  const Real fx = -v.grad_x(s.x, s.y);
  const Real fy = -v.grad_y(s.x, s.y);
  s.xi += dt * fx;
  s.eta += dt * fy;
  s.x += half * s.xi;
  s.y += half * s.eta;
  s.t += dt;
}

/// Samples at t = 0 and after every step up to T.
template <typename Real>
std::vector<TwoParticleState<Real>> two_particle_trajectory(const PotentialSpec<Real>& v,
                                                            TwoParticleState<Real> start, Real dt,
                                                            Real t_final) {
  detail::require_pointwise(v, "two_particle_trajectory");
  const StepPlan<Real> plan(dt, t_final);
  std::vector<TwoParticleState<Real>> out;
  out.reserve(static_cast<std::size_t>(plan.count()) + 1);
  start.t = 0;
  out.push_back(start);
  for (long i = 0; i < plan.count(); ++i) {
    two_particle_step(start, v, plan.size(i));
    start.t = plan.time_after(i);
    out.push_back(start);
  }
  return out;
}

template <typename Real>
Real hamiltonian(const TwoParticleState<Real>& s, const PotentialSpec<Real>& v) {
  return Real(0.5) * (s.xi * s.xi + s.eta * s.eta) + v.value(s.x, s.y);
}

/// Graph measure |a|^2 delta(p - S') of WKB data, one particle per grid node.
template <typename Real>
Ensemble<Real> sample_wkb_measure(const WkbData<Real>& data,
                                  EnsembleSide side = EnsembleSide::y) {
  detail::require_length(data.amplitude, data.grid, "sample_wkb_measure amplitude");
  detail::require_length(data.phase, data.grid, "sample_wkb_measure phase");
  const RealVector<Real> weight = data.amplitude.array().square();
  const Real total = weight.sum();
  if (!(total > Real(0))) throw std::invalid_argument("sample_wkb_measure: zero total amplitude");
  const RealVector<Real> momentum = data.momentum();
  Ensemble<Real> ens;
  ens.side = side;
  ens.particles.reserve(static_cast<std::size_t>(data.grid.size()));
  for (Eigen::Index j = 0; j < data.grid.size(); ++j) {
    ens.particles.push_back({data.grid.node(j), momentum[j], weight[j] / total});
  }
  return ens;
}

namespace detail {

// Force on every particle of `target` from the mean field of `source`:
// F(q) = -sum_p w_p dV(q, q_p), differentiated in the target's own variable.
template <typename Real>
std::vector<Real> mean_field_forces(const Ensemble<Real>& target, const Ensemble<Real>& source,
                                    const PotentialSpec<Real>& v) {
  const bool target_is_x = target.side == EnsembleSide::x;
  std::vector<Real> force(target.size(), Real(0));
  switch (v.kind()) {
    case PotentialKind::constant:
      return force;
    case PotentialKind::harmonic: {
      Real w = 0;
      Real first = 0;
      for (const auto& p : source.particles) {
        w += p.w;
        first += p.w * p.q;
      }
      for (std::size_t i = 0; i < target.size(); ++i) {
        force[i] = -(target.particles[i].q * w + first);
      }
      return force;
    }
    default:
      break;
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    const Real q = target.particles[i].q;
    Real sum = 0;
    for (const auto& p : source.particles) {
      sum += p.w * (target_is_x ? v.grad_x(q, p.q) : v.grad_y(p.q, q));
    }
    force[i] = -sum;
  }
  return force;
}

template <typename Real>
void drift(Ensemble<Real>& ens, Real h) {
  for (auto& p : ens.particles) p.q += h * p.p;
}

}  // namespace detail

/// One drift-kick-drift step of the coupled Vlasov system. Each kick uses the
/// mean-field force of the other ensemble frozen at the kick time.
template <typename Real>
void vlasov_step(Ensemble<Real>& ens_x, Ensemble<Real>& ens_y, const PotentialSpec<Real>& v,
                 Real dt) {
  detail::require_pointwise(v, "vlasov_step");
  ens_x.validate();
  ens_y.validate();
  ens_x.side = EnsembleSide::x;
  ens_y.side = EnsembleSide::y;
  const Real half = dt / Real(2);
  detail::drift(ens_x, half);
  detail::drift(ens_y, half);
  const std::vector<Real> fx = detail::mean_field_forces(ens_x, ens_y, v);
  const std::vector<Real> fy = detail::mean_field_forces(ens_y, ens_x, v);
  for (std::size_t i = 0; i < ens_x.size(); ++i) ens_x.particles[i].p += dt * fx[i];
  for (std::size_t i = 0; i < ens_y.size(); ++i) ens_y.particles[i].p += dt * fy[i];
  detail::drift(ens_x, half);
  detail::drift(ens_y, half);
}

/// Strang step of the mixed quantum-classical system: psi(x) quantum, the y
/// degree of freedom a particle ensemble. A singleton ensemble reproduces the
/// Ehrenfest step exactly.
template <typename Real>
class MixedPropagator {
 public:
  MixedPropagator(const PotentialSpec<Real>& v, const Grid1D<Real>& x_grid, Real delta)
      : potential_(v), x_grid_(x_grid), flight_(x_grid, delta) {
    detail::require_pointwise(v, "mixed_step");
    potential_.check_x_grid(x_grid);
  }

  void step(WaveField<Real>& psi, Ensemble<Real>& ens_y, Real dt) {
    if (!(psi.grid() == x_grid_)) throw std::invalid_argument("mixed_step: grid mismatch");
    ens_y.validate();
    const Real half = dt / Real(2);
    flight_.apply(psi.values(), half);
    detail::drift(ens_y, half);

    std::vector<Real> kick(ens_y.size());
    for (std::size_t i = 0; i < ens_y.size(); ++i) {
      kick[i] = force_on_point(psi, potential_, ens_y.particles[i].q);
    }
    apply_phase(psi.values(), ensemble_upsilon(ens_y, potential_, x_grid_), dt, psi.scale());
    for (std::size_t i = 0; i < ens_y.size(); ++i) ens_y.particles[i].p += dt * kick[i];

    flight_.apply(psi.values(), half);
    detail::drift(ens_y, half);
  }

 private:
  PotentialSpec<Real> potential_;
  Grid1D<Real> x_grid_;
  FreeFlight<Real> flight_;
};

template <typename Real>
std::pair<WaveField<Real>, Ensemble<Real>> mixed_step(WaveField<Real> psi, Ensemble<Real> ens_y,
                                                      const PotentialSpec<Real>& v, Real dt) {
  MixedPropagator<Real>(v, psi.grid(), psi.scale()).step(psi, ens_y, dt);
  return {std::move(psi), std::move(ens_y)};
}

namespace detail {

// Periodic Gaussian kernel estimate of sum_p w_p g(p) delta(x - q_p). Each
// particle's discrete kernel is normalized to unit grid quadrature.
template <typename Real, typename Moment>
RealVector<Real> kernel_estimate(const Ensemble<Real>& ens, const Grid1D<Real>& grid,
                                 Real bandwidth, Moment moment) {
  if (!(bandwidth > Real(0))) throw std::invalid_argument("kernel estimate: bandwidth must be positive");
  ens.validate();
  const Eigen::Index n = grid.size();
  const Real dx = grid.dx();
  const Real length = grid.length();
  const auto radius = std::min<Eigen::Index>(
      n / 2, static_cast<Eigen::Index>(std::ceil(Real(10) * bandwidth / dx)) + 1);
  RealVector<Real> out = RealVector<Real>::Zero(n);
  std::vector<Real> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (const auto& p : ens.particles) {
    // Nearest node of the wrapped position, then a window of +/- radius nodes.
    const Real wrapped = std::fmod(std::fmod(p.q - grid.a(), length) + length, length);
    const auto centre = static_cast<Eigen::Index>(std::llround(wrapped / dx));
    Real sum = 0;
    for (Eigen::Index k = -radius; k <= radius; ++k) {
      const Real d = static_cast<Real>(centre + k) * dx - wrapped;
      const Real value = std::exp(-Real(0.5) * d * d / (bandwidth * bandwidth));
      kernel[static_cast<std::size_t>(k + radius)] = value;
      sum += value;
    }
    const Real scale = p.w * moment(p) / (sum * dx);
    for (Eigen::Index k = -radius; k <= radius; ++k) {
      const Eigen::Index j = (((centre + k) % n) + n) % n;
      out[j] += scale * kernel[static_cast<std::size_t>(k + radius)];
    }
  }
  return out;
}

}  // namespace detail

/// Position marginal of the ensemble on a grid; integrates to one.
template <typename Real>
RealVector<Real> density_from_ensemble(const Ensemble<Real>& ens, const Grid1D<Real>& grid,
                                       Real bandwidth) {
  return detail::kernel_estimate(ens, grid, bandwidth,
                                 [](const PhaseParticle<Real>&) { return Real(1); });
}

/// First momentum moment (classical current) of the ensemble on a grid.
template <typename Real>
RealVector<Real> current_from_ensemble(const Ensemble<Real>& ens, const Grid1D<Real>& grid,
                                       Real bandwidth) {
  return detail::kernel_estimate(ens, grid, bandwidth,
                                 [](const PhaseParticle<Real>& p) { return p.p; });
}

}  // namespace tdscf
