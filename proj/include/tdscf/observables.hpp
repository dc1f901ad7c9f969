#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "tdscf/potential.hpp"
#include "tdscf/spectral_grid.hpp"
#include "tdscf/wave_field.hpp"

namespace tdscf {

template <typename Real>
Real mass(const WaveField<Real>& f) {
  return f.mass();
}

/// Position density |f|^2.
template <typename Real>
RealVector<Real> position_density(const WaveField<Real>& f) {
  return f.density();
}

/// J = scale * Im(conj(f) df/dx), with the derivative taken spectrally.
template <typename Real>
RealVector<Real> current_density(const WaveField<Real>& f) {
  const ComplexVector<Real> df = spectral_derivative(f.values(), f.grid());
  return f.scale() * (f.values().conjugate().cwiseProduct(df)).imag();
}

/// Total TDSCF energy: both kinetic terms through Parseval plus the double
/// quadrature of V |psi|^2 |phi|^2.
template <typename Real>
Real energy(const WaveField<Real>& psi, const WaveField<Real>& phi, const PotentialSpec<Real>& v) {
  const RealVector<Real> expectation = cal_v(psi, v, phi.grid());
  const Real coupling = quadrature(expectation.cwiseProduct(phi.density()), phi.grid());
  return kinetic_energy(psi) + kinetic_energy(phi) + coupling;
}

/// Ehrenfest energy (delta^2/2)||dpsi||^2 + eta^2/2 + int V(x, y)|psi|^2 dx.
template <typename Real>
Real ehrenfest_energy(const WaveField<Real>& psi, Real y, Real eta, const PotentialSpec<Real>& v) {
  const Real potential =
      quadrature(v.values_at_y(psi.grid(), y).cwiseProduct(psi.density()), psi.grid());
  return kinetic_energy(psi) + Real(0.5) * eta * eta + potential;
}

/// <x> = int x |f|^2 dx on the periodic cell.
template <typename Real>
Real mean_position(const WaveField<Real>& f) {
  return quadrature(f.grid().nodes().cwiseProduct(f.density()), f.grid());
}

/// <p> = int J dx.
template <typename Real>
Real mean_momentum(const WaveField<Real>& f) {
  return quadrature(current_density(f), f.grid());
}

/// Diagnostics of a coupled state at one time instant. Density and current
/// fields are filled only when requested by the caller.
template <typename Real>
struct ObservableRecord {
  Real t = 0;
  Real m1 = 0;
  Real m2 = 0;
  Real energy = 0;
  RealVector<Real> rho_psi, rho_phi, j_psi, j_phi;
};

template <typename Real>
ObservableRecord<Real> observe(Real t, const WaveField<Real>& psi, const WaveField<Real>& phi,
                               const PotentialSpec<Real>& v, bool with_fields) {
  ObservableRecord<Real> r;
  r.t = t;
  r.m1 = psi.mass();
  r.m2 = phi.mass();
  r.energy = energy(psi, phi, v);
  if (with_fields) {
    r.rho_psi = psi.density();
    r.rho_phi = phi.density();
    r.j_psi = current_density(psi);
    r.j_phi = current_density(phi);
  }
  return r;
}

/// Discrete Wigner function w(x_j, xi_k) on the x-grid times a uniform momentum
/// grid. Row j holds x_j; column k holds xi[k].
template <typename Real>
struct WignerGrid {
  RealMatrix<Real> values;
  Grid1D<Real> x_grid;
  RealVector<Real> xi;
  Real dxi;
  Real max_imag_residue;
};

template <typename Real>
struct WignerOptions {
  /// Sampling step of the correlation variable z. Defaults to 2 dx / scale, which
  /// places every half-shift (scale/2) z_m on a grid node and yields the momentum
  /// grid xi_k = k pi scale / (b - a), k in [-n/2, n/2).
  std::optional<Real> z_step;
};

/// Discretized scale-dependent Wigner transform
///   w(x, xi) = (1/2pi) sum_m f(x - s_m) conj(f)(x + s_m) exp(i z_m xi) dz,
/// with s_m = scale z_m / 2, z_m = m dz for m in [-n/2, n/2) and xi conjugate to z.
/// Off-grid half-shifts use trigonometric interpolation.
template <typename Real>
WignerGrid<Real> wigner(const WaveField<Real>& f, const WignerOptions<Real>& options = {}) {
  const Grid1D<Real>& grid = f.grid();
  const Eigen::Index n = grid.size();
  const Real eps = f.scale();
  const Real two_pi = Real(2) * std::numbers::pi_v<Real>;
  const Real dz = options.z_step.value_or(Real(2) * grid.dx() / eps);
  if (!(dz > Real(0))) throw std::invalid_argument("wigner: z step must be positive");
  const Real dxi = two_pi / (static_cast<Real>(n) * dz);

  // Half-shift in units of dx; integral ratio means every shift lands on a node.
  const Real ratio = eps * dz / (Real(2) * grid.dx());
  const bool on_grid = std::abs(ratio - std::round(ratio)) < Real(1e-12) * std::max(Real(1), ratio);
  const auto stride = static_cast<Eigen::Index>(std::llround(ratio));

  // corr(j, m) = f(x_j - s_m) conj f(x_j + s_m), column m in FFT storage order.
  Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic> corr(n, n);
  const ComplexVector<Real>& u = f.values();
  for (Eigen::Index mi = 0; mi < n; ++mi) {
    const Eigen::Index m = mi < n / 2 ? mi : mi - n;
    if (on_grid) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index minus = (((j - m * stride) % n) + n) % n;
        const Eigen::Index plus = (((j + m * stride) % n) + n) % n;
        corr(j, mi) = u[minus] * std::conj(u[plus]);
      }
    } else {
      const Real s = eps * static_cast<Real>(m) * dz / Real(2);
      const ComplexVector<Real> back = shift_field(u, grid, -s);
      const ComplexVector<Real> ahead = shift_field(u, grid, s);
      corr.col(mi) = back.cwiseProduct(ahead.conjugate());
    }
  }

  // sum_m corr_m exp(2 pi i m k / n) for every row, via an unscaled inverse DFT.
  FourierTransform<Real> fft;
  WignerGrid<Real> w{RealMatrix<Real>(n, n), grid, RealVector<Real>(n), dxi, Real(0)};
  ComplexVector<Real> row(n), out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    row = corr.row(j).transpose();
    fft.inverse(row, out);
    out *= static_cast<Real>(n) * dz / two_pi;
    for (Eigen::Index kk = 0; kk < n; ++kk) {
      const std::complex<Real> value = out[detail::natural_to_fft(kk, n)];
      w.values(j, kk) = value.real();
      w.max_imag_residue = std::max(w.max_imag_residue, std::abs(value.imag()));
    }
  }
  for (Eigen::Index kk = 0; kk < n; ++kk) w.xi[kk] = static_cast<Real>(kk - n / 2) * dxi;
  return w;
}

/// sum_k xi_k^order w(x_j, xi_k) dxi for every x_j.
template <typename Real>
RealVector<Real> wigner_moment(const WignerGrid<Real>& w, int order) {
  const RealVector<Real> weight = w.xi.array().pow(static_cast<Real>(order));
  return w.values * weight * w.dxi;
}

/// (dx sum_j |u_j - v_j|^2)^(1/2).
template <typename Real, typename DerivedU, typename DerivedV>
Real l2_error(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
              const Grid1D<Real>& grid) {
  detail::require_length(u, grid, "l2_error");
  detail::require_length(v, grid, "l2_error");
  return std::sqrt((u - v).cwiseAbs2().sum() * grid.dx());
}

/// dx sum_j |u_j - v_j|.
template <typename Real, typename DerivedU, typename DerivedV>
Real l1_distance(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
                 const Grid1D<Real>& grid) {
  detail::require_length(u, grid, "l1_distance");
  detail::require_length(v, grid, "l1_distance");
  return (u - v).cwiseAbs().sum() * grid.dx();
}

template <typename Real>
void require_same_grid(const WaveField<Real>& u, const WaveField<Real>& v, const char* what) {
  if (!(u.grid() == v.grid())) {
    throw std::invalid_argument(std::string(what) + ": fields live on different grids");
  }
}

template <typename Real>
Real l2_error(const WaveField<Real>& u, const WaveField<Real>& v) {
  require_same_grid(u, v, "l2_error");
  return l2_error(u.values(), v.values(), u.grid());
}

template <typename Real>
Real density_error(const WaveField<Real>& u, const WaveField<Real>& v) {
  require_same_grid(u, v, "density_error");
  return l2_error(u.density(), v.density(), u.grid());
}

template <typename Real>
Real current_error(const WaveField<Real>& u, const WaveField<Real>& v) {
  require_same_grid(u, v, "current_error");
  return l2_error(current_density(u), current_density(v), u.grid());
}

}  // namespace tdscf
