#pragma once

#include <cmath>
#include <stdexcept>

#include "tdscf/spectral_grid.hpp"

namespace tdscf {

/// Complex samples on a periodic grid together with the semiclassical scale
/// (epsilon or delta) that multiplies the time derivative and the Laplacian.
template <typename Real>
class WaveField {
 public:
  WaveField(ComplexVector<Real> values, Grid1D<Real> grid, Real scale)
      : values_(std::move(values)), grid_(std::move(grid)), scale_(scale) {
    detail::require_length(values_, grid_, "WaveField");
    if (!(scale > Real(0)) || scale > Real(1)) {
      throw std::invalid_argument("WaveField: semiclassical scale must lie in (0, 1]");
    }
  }

  const ComplexVector<Real>& values() const { return values_; }
  ComplexVector<Real>& values() { return values_; }
  const Grid1D<Real>& grid() const { return grid_; }
  Real scale() const { return scale_; }

  RealVector<Real> density() const { return values_.cwiseAbs2(); }

  Real mass() const { return quadrature(values_.cwiseAbs2(), grid_); }

  /// Rescale to unit mass; throws when the field is identically zero.
  WaveField& normalize() {
    const Real m = mass();
    if (!(m > Real(0)) || !std::isfinite(m)) {
      throw std::invalid_argument("WaveField: cannot normalize a field with zero mass");
    }
    values_ /= std::sqrt(m);
    return *this;
  }

 private:
  ComplexVector<Real> values_;
  Grid1D<Real> grid_;
  Real scale_;
};

}  // namespace tdscf
