#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tdscf/spectral_grid.hpp"

namespace tdscf {

/// Raised when a run produces a non-finite value; carries the failing step.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Uniform steps of size dt up to T; a final shorter step covers any remainder
/// larger than a few ulps of T.
template <typename Real>
class StepPlan {
 public:
  StepPlan(Real dt, Real t_final) : dt_(dt), t_final_(t_final) {
    if (!(dt > Real(0)) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
    if (!(t_final > Real(0)) || !std::isfinite(t_final)) {
      throw std::invalid_argument("final time must be positive");
    }
    if (dt > t_final) throw std::invalid_argument("time step exceeds final time");
    const Real ratio = t_final / dt;
    const Real nearest = std::round(ratio);
    const Real tol = Real(8) * std::numeric_limits<Real>::epsilon() * ratio;
    if (std::abs(ratio - nearest) <= tol) {
      full_steps_ = static_cast<long>(nearest);
      remainder_ = Real(0);
    } else {
      full_steps_ = static_cast<long>(std::floor(ratio));
      remainder_ = t_final - static_cast<Real>(full_steps_) * dt;
    }
  }

  long count() const { return full_steps_ + (remainder_ > Real(0) ? 1 : 0); }

  /// Size of step i (0-based).
  Real size(long i) const { return i < full_steps_ ? dt_ : remainder_; }

  /// Time reached after step i, computed as (i + 1) dt rather than accumulated.
  Real time_after(long i) const {
    return i + 1 >= count() ? t_final_ : static_cast<Real>(i + 1) * dt_;
  }

  Real dt() const { return dt_; }
  Real t_final() const { return t_final_; }

 private:
  Real dt_;
  Real t_final_;
  long full_steps_ = 0;
  Real remainder_ = 0;
};

/// Whether a record is due after step i given a stride (0: final state only).
inline bool record_due(long i, long count, int record_every) {
  if (i + 1 == count) return true;
  return record_every > 0 && (i + 1) % record_every == 0;
}

/// Cached Fourier multipliers exp(-i scale h mu^2 / 2) for a handful of step sizes.
template <typename Real>
class FreeFlight {
 public:
  FreeFlight(const Grid1D<Real>& grid, Real scale)
      : mu2_(grid.fft_wavenumbers().array().square()), scale_(scale) {}

  /// Exact free evolution over time h applied in place.
  void apply(ComplexVector<Real>& u, Real h) {
    if (h == Real(0)) return;
    fft_.forward(u, hat_);
    hat_.array() *= multiplier(h).array();
    fft_.inverse(hat_, u);
  }

 private:
  const ComplexVector<Real>& multiplier(Real h) {
    for (auto& entry : cache_) {
      if (entry.valid && entry.h == h) return entry.values;
    }
    auto& slot = cache_[next_];
    next_ = (next_ + 1) % cache_.size();
    slot.h = h;
    slot.valid = true;
    slot.values.resize(mu2_.size());
    for (Eigen::Index l = 0; l < mu2_.size(); ++l) {
      slot.values[l] = std::polar(Real(1), -scale_ * h * mu2_[l] / Real(2));
    }
    return slot.values;
  }

  struct Entry {
    Real h = 0;
    bool valid = false;
    ComplexVector<Real> values;
  };

  RealVector<Real> mu2_;
  Real scale_;
  FourierTransform<Real> fft_;
  ComplexVector<Real> hat_;
  std::array<Entry, 4> cache_{};
  std::size_t next_ = 0;
};

/// Multiply u_j by exp(-i h potential_j / scale).
template <typename Real>
void apply_phase(ComplexVector<Real>& u, const RealVector<Real>& potential, Real h, Real scale) {
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    u[j] *= std::polar(Real(1), -h * potential[j] / scale);
  }
}

}  // namespace tdscf
