#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <algorithm>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>

#include "tdscf/ensemble.hpp"
#include "tdscf/spectral_grid.hpp"
#include "tdscf/wave_field.hpp"

namespace tdscf {

enum class PotentialKind { constant, harmonic, separable, tabulated, analytic };

/// Real coupling potential V(x, y) on the periodic cell.
///
/// Built-in kinds carry analytic gradients. Separable potentials hold samples
/// of V1 on the x-grid and V2 on the y-grid; tabulated potentials hold the full
/// n_x by n_y matrix. Sampled data are differentiated and interpolated
/// spectrally. Copies share the immutable tables.
template <typename Real>
class PotentialSpec {
 public:
  using Function = std::function<Real(Real, Real)>;

  static PotentialSpec constant(Real c) {
    PotentialSpec v(PotentialKind::constant);
    v.constant_ = c;
    return v;
  }

  /// V = (x + y)^2 / 2.
  static PotentialSpec harmonic() { return PotentialSpec(PotentialKind::harmonic); }

  static PotentialSpec separable(RealVector<Real> v1, const Grid1D<Real>& x_grid,
                                 RealVector<Real> v2, const Grid1D<Real>& y_grid) {
    detail::require_length(v1, x_grid, "separable potential V1");
    detail::require_length(v2, y_grid, "separable potential V2");
    PotentialSpec v(PotentialKind::separable);
    auto data = std::make_shared<Tables>(x_grid, y_grid);
    data->v1 = std::move(v1);
    data->v2 = std::move(v2);
    data->dv1 = spectral_derivative_real(data->v1, x_grid);
    data->dv2 = spectral_derivative_real(data->v2, y_grid);
    data->v1_hat = analyze(data->v1, x_grid);
    data->v2_hat = analyze(data->v2, y_grid);
    data->dv1_hat = analyze(data->dv1, x_grid);
    data->dv2_hat = analyze(data->dv2, y_grid);
    v.tables_ = std::move(data);
    return v;
  }

  /// Tabulated values with gradients obtained spectrally along each axis.
  static PotentialSpec tabulated(RealMatrix<Real> values, const Grid1D<Real>& x_grid,
                                 const Grid1D<Real>& y_grid) {
    check_shape(values, x_grid, y_grid, "tabulated potential");
    RealMatrix<Real> gx(values.rows(), values.cols());
    RealMatrix<Real> gy(values.rows(), values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      gx.col(j) = spectral_derivative_real<Real>(values.col(j), x_grid);
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      gy.row(i) = spectral_derivative_real<Real>(values.row(i).transpose(), y_grid).transpose();
    }
    return tabulated(std::move(values), std::move(gx), std::move(gy), x_grid, y_grid);
  }

  static PotentialSpec tabulated(RealMatrix<Real> values, RealMatrix<Real> grad_x,
                                 RealMatrix<Real> grad_y, const Grid1D<Real>& x_grid,
                                 const Grid1D<Real>& y_grid) {
    check_shape(values, x_grid, y_grid, "tabulated potential");
    check_shape(grad_x, x_grid, y_grid, "tabulated x-gradient");
    check_shape(grad_y, x_grid, y_grid, "tabulated y-gradient");
    PotentialSpec v(PotentialKind::tabulated);
    auto data = std::make_shared<Tables>(x_grid, y_grid);
    data->table = std::move(values);
    data->table_dx = std::move(grad_x);
    data->table_dy = std::move(grad_y);
    // Row spectra along y, for evaluation at off-grid classical coordinates.
    const Eigen::Index nx = x_grid.size();
    data->row_hat.resize(nx, y_grid.size());
    data->row_hat_dy.resize(nx, y_grid.size());
    for (Eigen::Index i = 0; i < nx; ++i) {
      data->row_hat.row(i) =
          analyze<Real>(data->table.row(i).transpose(), y_grid).values.transpose();
      data->row_hat_dy.row(i) =
          analyze<Real>(data->table_dy.row(i).transpose(), y_grid).values.transpose();
    }
    v.tables_ = std::move(data);
    return v;
  }

  static PotentialSpec analytic(Function value, Function grad_x, Function grad_y) {
    if (!value || !grad_x || !grad_y) {
      throw std::invalid_argument("analytic potential: value and both gradients required");
    }
    PotentialSpec v(PotentialKind::analytic);
    v.value_ = std::move(value);
    v.grad_x_ = std::move(grad_x);
    v.grad_y_ = std::move(grad_y);
    return v;
  }

  PotentialKind kind() const { return kind_; }

  /// Whether V and its gradients can be evaluated at arbitrary (x, y).
  bool pointwise() const { return kind_ != PotentialKind::tabulated; }

  Real constant_value() const { return constant_; }

  Real value(Real x, Real y) const {
    switch (kind_) {
      case PotentialKind::constant:
        return constant_;
      case PotentialKind::harmonic:
        return Real(0.5) * (x + y) * (x + y);
      case PotentialKind::separable:
        return interpolate(tables_->v1_hat, x).real() + interpolate(tables_->v2_hat, y).real();
      case PotentialKind::analytic:
        return value_(x, y);
      case PotentialKind::tabulated:
        break;
    }
    throw no_pointwise();
  }

  Real grad_x(Real x, Real y) const {
    switch (kind_) {
      case PotentialKind::constant:
        return Real(0);
      case PotentialKind::harmonic:
        return x + y;
      case PotentialKind::separable:
        return interpolate(tables_->dv1_hat, x).real();
      case PotentialKind::analytic:
        return grad_x_(x, y);
      case PotentialKind::tabulated:
        break;
    }
    throw no_pointwise();
  }

  Real grad_y(Real x, Real y) const {
    switch (kind_) {
      case PotentialKind::constant:
        return Real(0);
      case PotentialKind::harmonic:
        return x + y;
      case PotentialKind::separable:
        return interpolate(tables_->dv2_hat, y).real();
      case PotentialKind::analytic:
        return grad_y_(x, y);
      case PotentialKind::tabulated:
        break;
    }
    throw no_pointwise();
  }

  /// V(x_i, y) at every node of the x-grid. Tabulated kinds wrap y into the
  /// periodic cell and interpolate along y.
  RealVector<Real> values_at_y(const Grid1D<Real>& x_grid, Real y) const {
    return column_at_y(x_grid, y, false);
  }

  /// d/dy V(x_i, y) at every node of the x-grid.
  RealVector<Real> grad_y_at_y(const Grid1D<Real>& x_grid, Real y) const {
    return column_at_y(x_grid, y, true);
  }

  /// Full n_x by n_y table of V on the product grid.
  RealMatrix<Real> table(const Grid1D<Real>& x_grid, const Grid1D<Real>& y_grid) const {
    if (kind_ == PotentialKind::tabulated) {
      check_grids(x_grid, y_grid);
      return tables_->table;
    }
    if (kind_ == PotentialKind::separable) check_grids(x_grid, y_grid);
    RealMatrix<Real> m(x_grid.size(), y_grid.size());
    for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
      for (Eigen::Index i = 0; i < x_grid.size(); ++i) {
        m(i, j) = kind_ == PotentialKind::separable ? tables_->v1[i] + tables_->v2[j]
                                                    : value(x_grid.node(i), y_grid.node(j));
      }
    }
    return m;
  }

  /// Replace an analytic kind by its table on the product grid. Other kinds are
  /// returned unchanged since they already have fast grid paths.
  PotentialSpec tabulated_on(const Grid1D<Real>& x_grid, const Grid1D<Real>& y_grid) const {
    if (kind_ != PotentialKind::analytic) return *this;
    RealMatrix<Real> v(x_grid.size(), y_grid.size());
    RealMatrix<Real> gx(x_grid.size(), y_grid.size());
    RealMatrix<Real> gy(x_grid.size(), y_grid.size());
    for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
      for (Eigen::Index i = 0; i < x_grid.size(); ++i) {
        const Real x = x_grid.node(i);
        const Real y = y_grid.node(j);
        v(i, j) = value_(x, y);
        gx(i, j) = grad_x_(x, y);
        gy(i, j) = grad_y_(x, y);
      }
    }
    return tabulated(std::move(v), std::move(gx), std::move(gy), x_grid, y_grid);
  }

  /// Separable and tabulated kinds are bound to the grids they were sampled on.
  void check_grids(const Grid1D<Real>& x_grid, const Grid1D<Real>& y_grid) const {
    if (!tables_) return;
    if (!(tables_->x_grid == x_grid) || !(tables_->y_grid == y_grid)) {
      throw std::invalid_argument("potential: grid mismatch with sampled potential");
    }
  }

  void check_x_grid(const Grid1D<Real>& x_grid) const {
    if (tables_ && !(tables_->x_grid == x_grid)) {
      throw std::invalid_argument("potential: x-grid mismatch with sampled potential");
    }
  }

  void check_y_grid(const Grid1D<Real>& y_grid) const {
    if (tables_ && !(tables_->y_grid == y_grid)) {
      throw std::invalid_argument("potential: y-grid mismatch with sampled potential");
    }
  }

  const RealVector<Real>& separable_v1() const { return tables_->v1; }
  const RealVector<Real>& separable_v2() const { return tables_->v2; }
  const RealMatrix<Real>& tabulated_values() const { return tables_->table; }
  const RealMatrix<Real>& tabulated_grad_x() const { return tables_->table_dx; }
  const RealMatrix<Real>& tabulated_grad_y() const { return tables_->table_dy; }

 private:
  struct Tables {
    Tables(const Grid1D<Real>& x, const Grid1D<Real>& y)
        : x_grid(x),
          y_grid(y),
          v1_hat{{}, x},
          v2_hat{{}, y},
          dv1_hat{{}, x},
          dv2_hat{{}, y} {}
    Grid1D<Real> x_grid;
    Grid1D<Real> y_grid;
    RealVector<Real> v1, v2, dv1, dv2;
    SpectralCoeffs<Real> v1_hat, v2_hat, dv1_hat, dv2_hat;
    RealMatrix<Real> table, table_dx, table_dy;
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic> row_hat, row_hat_dy;
  };

  explicit PotentialSpec(PotentialKind kind) : kind_(kind) {}

  static void check_shape(const RealMatrix<Real>& m, const Grid1D<Real>& x_grid,
                          const Grid1D<Real>& y_grid, const char* what) {
    if (m.rows() != x_grid.size() || m.cols() != y_grid.size()) {
      throw std::invalid_argument(std::string(what) + ": matrix shape " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                  " does not match grids");
    }
  }

  static std::invalid_argument no_pointwise() {
    return std::invalid_argument(
        "tabulated potential has no pointwise gradient; use an analytic kind");
  }

  RealVector<Real> column_at_y(const Grid1D<Real>& x_grid, Real y, bool gradient) const {
    const Eigen::Index nx = x_grid.size();
    RealVector<Real> out(nx);
    switch (kind_) {
      case PotentialKind::constant:
        out.setConstant(gradient ? Real(0) : constant_);
        return out;
      case PotentialKind::harmonic:
        for (Eigen::Index i = 0; i < nx; ++i) {
          const Real s = x_grid.node(i) + y;
          out[i] = gradient ? s : Real(0.5) * s * s;
        }
        return out;
      case PotentialKind::separable:
        check_x_grid(x_grid);
        if (gradient) {
          out.setConstant(interpolate(tables_->dv2_hat, y).real());
        } else {
          out = tables_->v1.array() + interpolate(tables_->v2_hat, y).real();
        }
        return out;
      case PotentialKind::analytic:
        for (Eigen::Index i = 0; i < nx; ++i) {
          out[i] = gradient ? grad_y_(x_grid.node(i), y) : value_(x_grid.node(i), y);
        }
        return out;
      case PotentialKind::tabulated: {
        check_x_grid(x_grid);
        const Grid1D<Real>& yg = tables_->y_grid;
        const Real wrapped = yg.a() + std::fmod(std::fmod(y - yg.a(), yg.length()) + yg.length(),
                                                yg.length());
        const Eigen::Index ny = yg.size();
        ComplexVector<Real> phase(ny);
        for (Eigen::Index l = 0; l < ny; ++l) {
          phase[l] = std::polar(Real(1), yg.wavenumber(l - ny / 2) * (wrapped - yg.a()));
        }
        const auto& hat = gradient ? tables_->row_hat_dy : tables_->row_hat;
        out = (hat * phase).real() / static_cast<Real>(ny);
        return out;
      }
    }
    return out;
  }

  PotentialKind kind_;
  Real constant_ = 0;
  std::shared_ptr<const Tables> tables_;
  Function value_, grad_x_, grad_y_;
};

namespace detail {

template <typename Real>
void warn_if_unnormalized(const char* op, Real mass) {
  const Real tolerance = std::max(Real(1e-6), Real(100) * std::numeric_limits<Real>::epsilon());
  if (std::abs(mass - Real(1)) > tolerance) {
    std::clog << "warning: " << op << ": input mass " << mass << " differs from 1\n";
  }
}

// Moments sum_j z_j^k |f_j|^2 dz for k = 0, 1, 2.
template <typename Real>
Eigen::Matrix<Real, 3, 1> density_moments(const WaveField<Real>& f) {
  const RealVector<Real> rho = f.density();
  const RealVector<Real> z = f.grid().nodes();
  Eigen::Matrix<Real, 3, 1> m;
  m << quadrature(rho, f.grid()), quadrature(z.cwiseProduct(rho), f.grid()),
      quadrature(z.cwiseProduct(z).cwiseProduct(rho), f.grid());
  return m;
}

}  // namespace detail

/// Mean field felt by psi: Upsilon(x_j) = int V(x_j, y) |phi(y)|^2 dy.
template <typename Real>
RealVector<Real> upsilon(const WaveField<Real>& phi, const PotentialSpec<Real>& v,
                         const Grid1D<Real>& x_grid) {
  const Grid1D<Real>& y_grid = phi.grid();
  const RealVector<Real> rho = phi.density();
  const Real m0 = quadrature(rho, y_grid);
  detail::warn_if_unnormalized("upsilon", m0);
  switch (v.kind()) {
    case PotentialKind::constant:
      return RealVector<Real>::Constant(x_grid.size(), v.constant_value() * m0);
    case PotentialKind::harmonic: {
      const auto m = detail::density_moments(phi);
      const RealVector<Real> x = x_grid.nodes();
      return (Real(0.5) * m[0] * x.array().square() + m[1] * x.array() + Real(0.5) * m[2])
          .matrix();
    }
    case PotentialKind::separable: {
      v.check_grids(x_grid, y_grid);
      const Real shift = quadrature(v.separable_v2().cwiseProduct(rho), y_grid);
      return (v.separable_v1().array() * m0 + shift).matrix();
    }
    case PotentialKind::tabulated:
      v.check_grids(x_grid, y_grid);
      return v.tabulated_values() * rho * y_grid.dx();
    case PotentialKind::analytic: {
      RealVector<Real> out(x_grid.size());
      for (Eigen::Index i = 0; i < x_grid.size(); ++i) {
        Real sum = 0;
        for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
          sum += v.value(x_grid.node(i), y_grid.node(j)) * rho[j];
        }
        out[i] = sum * y_grid.dx();
      }
      return out;
    }
  }
  return {};
}

/// The psi-expectation of V as a function of y: calV(y_j) = int V(x, y_j) |psi(x)|^2 dx.
template <typename Real>
RealVector<Real> cal_v(const WaveField<Real>& psi, const PotentialSpec<Real>& v,
                       const Grid1D<Real>& y_grid) {
  const Grid1D<Real>& x_grid = psi.grid();
  const RealVector<Real> rho = psi.density();
  const Real m0 = quadrature(rho, x_grid);
  detail::warn_if_unnormalized("cal_v", m0);
  switch (v.kind()) {
    case PotentialKind::constant:
      return RealVector<Real>::Constant(y_grid.size(), v.constant_value() * m0);
    case PotentialKind::harmonic: {
      const auto m = detail::density_moments(psi);
      const RealVector<Real> y = y_grid.nodes();
      return (Real(0.5) * m[0] * y.array().square() + m[1] * y.array() + Real(0.5) * m[2])
          .matrix();
    }
    case PotentialKind::separable: {
      v.check_grids(x_grid, y_grid);
      const Real shift = quadrature(v.separable_v1().cwiseProduct(rho), x_grid);
      return (v.separable_v2().array() * m0 + shift).matrix();
    }
    case PotentialKind::tabulated:
      v.check_grids(x_grid, y_grid);
      return v.tabulated_values().transpose() * rho * x_grid.dx();
    case PotentialKind::analytic: {
      RealVector<Real> out(y_grid.size());
      for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
        Real sum = 0;
        for (Eigen::Index i = 0; i < x_grid.size(); ++i) {
          sum += v.value(x_grid.node(i), y_grid.node(j)) * rho[i];
        }
        out[j] = sum * x_grid.dx();
      }
      return out;
    }
  }
  return {};
}

/// (scale^2 / 2) ||d f||^2, evaluated in Fourier space through Parseval.
template <typename Real>
Real kinetic_energy(const WaveField<Real>& f) {
  const auto& grid = f.grid();
  ComplexVector<Real> hat;
  detail::thread_fft<Real>().forward(f.values(), hat);
  const RealVector<Real> mu = grid.fft_wavenumbers();
  const Real gradient_norm =
      (mu.array().square() * hat.array().abs2()).sum() * grid.dx() / static_cast<Real>(grid.size());
  return Real(0.5) * f.scale() * f.scale() * gradient_norm;
}

/// Mean field felt by phi, split into its y-independent kinetic part theta and
/// the expectation calV, so that values = theta + calV.
template <typename Real>
struct LambdaField {
  RealVector<Real> values;
  RealVector<Real> cal_v;
  Real theta;
};

template <typename Real>
LambdaField<Real> lambda_potential(const WaveField<Real>& psi, const PotentialSpec<Real>& v,
                                   const Grid1D<Real>& y_grid) {
  LambdaField<Real> out{{}, cal_v(psi, v, y_grid), kinetic_energy(psi)};
  out.values = out.cal_v.array() + out.theta;
  return out;
}

/// Ehrenfest force on a classical coordinate y: -int dV/dy(x, y) |psi(x)|^2 dx.
template <typename Real>
Real force_on_point(const WaveField<Real>& psi, const PotentialSpec<Real>& v, Real y) {
  const Real m0 = psi.mass();
  detail::warn_if_unnormalized("force_on_point", m0);
  return -quadrature(v.grad_y_at_y(psi.grid(), y).cwiseProduct(psi.density()), psi.grid());
}

/// Upsilon with |phi|^2 replaced by the position marginal of a y-side ensemble.
template <typename Real>
RealVector<Real> ensemble_upsilon(const Ensemble<Real>& ens_y, const PotentialSpec<Real>& v,
                                  const Grid1D<Real>& x_grid) {
  ens_y.validate();
  RealVector<Real> out = RealVector<Real>::Zero(x_grid.size());
  for (const auto& particle : ens_y.particles) {
    out += particle.w * v.values_at_y(x_grid, particle.q);
  }
  return out;
}

/// Force on the classical coordinate y from an x-side ensemble:
/// -sum_p w_p dV/dy(x_p, y).
template <typename Real>
Real ensemble_force(const Ensemble<Real>& ens_x, const PotentialSpec<Real>& v, Real y) {
  ens_x.validate();
  Real sum = 0;
  for (const auto& particle : ens_x.particles) sum += particle.w * v.grad_y(particle.q, y);
  return -sum;
}

/// Force on an x-particle at position x from a y-side ensemble:
/// -d/dx Upsilon(x) = -sum_p w_p dV/dx(x, y_p).
template <typename Real>
Real ensemble_upsilon_force(const Ensemble<Real>& ens_y, const PotentialSpec<Real>& v, Real x) {
  ens_y.validate();
  Real sum = 0;
  for (const auto& particle : ens_y.particles) sum += particle.w * v.grad_x(x, particle.q);
  return -sum;
}

}  // namespace tdscf
