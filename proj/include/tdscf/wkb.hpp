#pragma once

#include <functional>
#include <optional>
#include <stdexcept>

#include "tdscf/spectral_grid.hpp"
#include "tdscf/wave_field.hpp"

namespace tdscf {

/// Sampled WKB data a(x) exp(i S(x) / scale). The phase gradient is optional;
/// without it consumers differentiate S spectrally, which is only accurate when
/// S is smooth and periodic on the cell.
template <typename Real>
struct WkbData {
  RealVector<Real> amplitude;
  RealVector<Real> phase;
  std::optional<RealVector<Real>> phase_gradient;
  Real scale;
  Grid1D<Real> grid;

  /// The sampled field normalized to unit mass.
  WaveField<Real> field() const {
    detail::require_length(amplitude, grid, "WkbData amplitude");
    detail::require_length(phase, grid, "WkbData phase");
    ComplexVector<Real> u(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      u[j] = amplitude[j] * std::polar(Real(1), phase[j] / scale);
    }
    WaveField<Real> f(std::move(u), grid, scale);
    f.normalize();
    return f;
  }

  RealVector<Real> momentum() const {
    if (phase_gradient) return *phase_gradient;
    return spectral_derivative_real(phase, grid);
  }
};

/// Analytic WKB profile; sample it on any grid.
template <typename Real>
struct WkbProfile {
  std::function<Real(Real)> amplitude;
  std::function<Real(Real)> phase;
  std::function<Real(Real)> phase_gradient;

  WkbData<Real> sample(const Grid1D<Real>& grid, Real scale) const {
    if (!amplitude || !phase) throw std::invalid_argument("WkbProfile: amplitude and phase required");
    WkbData<Real> d{RealVector<Real>(grid.size()), RealVector<Real>(grid.size()), std::nullopt,
                    scale, grid};
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      d.amplitude[j] = amplitude(grid.node(j));
      d.phase[j] = phase(grid.node(j));
    }
    if (phase_gradient) {
      RealVector<Real> g(grid.size());
      for (Eigen::Index j = 0; j < grid.size(); ++j) g[j] = phase_gradient(grid.node(j));
      d.phase_gradient = std::move(g);
    }
    return d;
  }
};

}  // namespace tdscf
