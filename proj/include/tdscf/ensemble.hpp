#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tdscf {

/// Weighted atom of a phase-space measure.
template <typename Real>
struct PhaseParticle {
  Real q;
  Real p;
  Real w;
};

enum class EnsembleSide { x, y };

/// Nonempty cloud of weighted particles whose weights sum to one.
template <typename Real>
struct Ensemble {
  std::vector<PhaseParticle<Real>> particles;
  EnsembleSide side = EnsembleSide::y;

  static constexpr Real kWeightTolerance = Real(1e-10);

  std::size_t size() const { return particles.size(); }

  Real total_weight() const {
    Real sum = 0;
    for (const auto& particle : particles) sum += particle.w;
    return sum;
  }

  void validate() const {
    if (particles.empty()) throw std::invalid_argument("ensemble: empty particle set");
    for (const auto& particle : particles) {
      if (!(particle.w >= Real(0))) throw std::invalid_argument("ensemble: negative weight");
    }
    if (std::abs(total_weight() - Real(1)) > kWeightTolerance) {
      throw std::invalid_argument("ensemble: weights do not sum to one");
    }
  }
};

}  // namespace tdscf
