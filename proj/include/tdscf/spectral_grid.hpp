#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace tdscf {

template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// Periodic uniform grid on [a, b) with n = 2^k nodes. The node at b is not
/// stored; it coincides with the node at a.
template <typename Real>
class Grid1D {
 public:
  static constexpr int kMinExponent = 2;
  static constexpr int kMaxExponent = 20;

  Grid1D(Real a, Real b, int exponent) : a_(a), b_(b), exponent_(exponent) {
    if (!(b > a)) {
      throw std::invalid_argument("grid: right endpoint must exceed left endpoint");
    }
    if (exponent < kMinExponent || exponent > kMaxExponent) {
      throw std::invalid_argument("grid: exponent " + std::to_string(exponent) +
                                  " outside [2, 20]");
    }
    n_ = Eigen::Index{1} << exponent;
    dx_ = (b - a) / static_cast<Real>(n_);
  }

  Real a() const { return a_; }
  Real b() const { return b_; }
  Real length() const { return b_ - a_; }
  Real dx() const { return dx_; }
  int exponent() const { return exponent_; }
  Eigen::Index size() const { return n_; }

  Real node(Eigen::Index j) const { return a_ + static_cast<Real>(j) * dx_; }

  RealVector<Real> nodes() const {
    RealVector<Real> x(n_);
    for (Eigen::Index j = 0; j < n_; ++j) x[j] = node(j);
    return x;
  }

  /// mu_l = 2 pi l / (b - a) for l in [-n/2, n/2).
  Real wavenumber(Eigen::Index l) const {
    return Real(2) * std::numbers::pi_v<Real> * static_cast<Real>(l) / length();
  }

  /// Wavenumbers in natural order, entry i holds l = i - n/2.
  RealVector<Real> wavenumbers() const {
    RealVector<Real> mu(n_);
    for (Eigen::Index i = 0; i < n_; ++i) mu[i] = wavenumber(i - n_ / 2);
    return mu;
  }

  /// Wavenumbers in FFT storage order: index i holds l = i for i < n/2 and
  /// l = i - n otherwise.
  RealVector<Real> fft_wavenumbers() const {
    RealVector<Real> mu(n_);
    for (Eigen::Index i = 0; i < n_; ++i) mu[i] = wavenumber(i < n_ / 2 ? i : i - n_);
    return mu;
  }

  friend bool operator==(const Grid1D& lhs, const Grid1D& rhs) {
    return lhs.a_ == rhs.a_ && lhs.b_ == rhs.b_ && lhs.exponent_ == rhs.exponent_;
  }

 private:
  Real a_;
  Real b_;
  int exponent_;
  Eigen::Index n_ = 0;
  Real dx_ = 0;
};

template <typename Real>
Grid1D<Real> make_grid(Real a, Real b, int exponent) {
  return Grid1D<Real>(a, b, exponent);
}

/// Fourier coefficients U_l = sum_j u_j exp(-i mu_l (x_j - a)), stored in natural
/// order: values[i] holds l = i - n/2.
template <typename Real>
struct SpectralCoeffs {
  ComplexVector<Real> values;
  Grid1D<Real> grid;

  std::complex<Real> operator()(Eigen::Index l) const { return values[l + grid.size() / 2]; }
};

namespace detail {

template <typename Real, typename Derived>
void require_length(const Eigen::DenseBase<Derived>& u, const Grid1D<Real>& grid,
                    const char* what) {
  if (u.size() != grid.size()) {
    throw std::invalid_argument(std::string(what) + ": field length " +
                                std::to_string(u.size()) + " does not match grid size " +
                                std::to_string(grid.size()));
  }
}

// Index i in natural order <-> FFT storage order.
inline Eigen::Index natural_to_fft(Eigen::Index i, Eigen::Index n) {
  return (i + n / 2) % n;
}

}  // namespace detail

/// Owns an FFT plan for one transform length. Not safe to share between threads;
/// give every worker its own instance.
template <typename Real>
class FourierTransform {
 public:
  /// Unscaled forward sum over j of u_j exp(-2 pi i j l / n), FFT storage order.
  void forward(const ComplexVector<Real>& in, ComplexVector<Real>& out) {
    out.resize(in.size());
    fft_.fwd(out, in);
  }

  /// Inverse with the 1/n factor, FFT storage order in.
  void inverse(const ComplexVector<Real>& in, ComplexVector<Real>& out) {
    out.resize(in.size());
    fft_.inv(out, in);
  }

 private:
  Eigen::FFT<Real> fft_;
};

namespace detail {
template <typename Real>
FourierTransform<Real>& thread_fft() {
  thread_local FourierTransform<Real> fft;
  return fft;
}
}  // namespace detail

template <typename Real, typename Derived>
SpectralCoeffs<Real> analyze(const Eigen::MatrixBase<Derived>& u, const Grid1D<Real>& grid) {
  detail::require_length(u, grid, "analyze");
  const Eigen::Index n = grid.size();
  ComplexVector<Real> in = u.template cast<std::complex<Real>>();
  ComplexVector<Real> out;
  detail::thread_fft<Real>().forward(in, out);
  SpectralCoeffs<Real> c{ComplexVector<Real>(n), grid};
  for (Eigen::Index i = 0; i < n; ++i) c.values[i] = out[detail::natural_to_fft(i, n)];
  return c;
}

template <typename Real>
ComplexVector<Real> synthesize(const SpectralCoeffs<Real>& coeffs) {
  const Eigen::Index n = coeffs.grid.size();
  if (coeffs.values.size() != n) {
    throw std::invalid_argument("synthesize: coefficient count does not match grid size");
  }
  ComplexVector<Real> in(n);
  for (Eigen::Index i = 0; i < n; ++i) in[detail::natural_to_fft(i, n)] = coeffs.values[i];
  ComplexVector<Real> out;
  detail::thread_fft<Real>().inverse(in, out);
  return out;
}

/// d/dx through the multiplier i mu_l; the l = -n/2 mode keeps its own wavenumber.
template <typename Real, typename Derived>
ComplexVector<Real> spectral_derivative(const Eigen::MatrixBase<Derived>& u,
                                        const Grid1D<Real>& grid) {
  detail::require_length(u, grid, "spectral_derivative");
  ComplexVector<Real> in = u.template cast<std::complex<Real>>();
  ComplexVector<Real> hat;
  auto& fft = detail::thread_fft<Real>();
  fft.forward(in, hat);
  const RealVector<Real> mu = grid.fft_wavenumbers();
  hat = hat.cwiseProduct((std::complex<Real>(0, 1) * mu.template cast<std::complex<Real>>()));
  ComplexVector<Real> out;
  fft.inverse(hat, out);
  return out;
}

/// Real-input convenience: the derivative of a real periodic function is real.
template <typename Real>
RealVector<Real> spectral_derivative_real(const RealVector<Real>& u, const Grid1D<Real>& grid) {
  return spectral_derivative(u, grid).real();
}

/// Rectangle rule dx * sum_j u_j over one period.
template <typename Real, typename Derived>
typename Derived::Scalar quadrature(const Eigen::DenseBase<Derived>& u, const Grid1D<Real>& grid) {
  detail::require_length(u, grid, "quadrature");
  return u.sum() * grid.dx();
}

/// Evaluate the trigonometric interpolant (1/n) sum_l U_l exp(i mu_l (x - a)) at an
/// arbitrary point.
template <typename Real>
std::complex<Real> interpolate(const SpectralCoeffs<Real>& coeffs, Real x) {
  const Eigen::Index n = coeffs.grid.size();
  std::complex<Real> sum(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real mu = coeffs.grid.wavenumber(i - n / 2);
    sum += coeffs.values[i] * std::polar(Real(1), mu * (x - coeffs.grid.a()));
  }
  return sum / static_cast<Real>(n);
}

/// Samples of the trigonometric interpolant of u at x_j + shift for every node.
template <typename Real>
ComplexVector<Real> shift_field(const ComplexVector<Real>& u, const Grid1D<Real>& grid,
                                Real shift) {
  detail::require_length(u, grid, "shift_field");
  auto& fft = detail::thread_fft<Real>();
  ComplexVector<Real> hat;
  fft.forward(u, hat);
  const RealVector<Real> mu = grid.fft_wavenumbers();
  for (Eigen::Index i = 0; i < hat.size(); ++i) hat[i] *= std::polar(Real(1), mu[i] * shift);
  ComplexVector<Real> out;
  fft.inverse(hat, out);
  return out;
}

/// Spectral restriction of a field on a fine grid to a coarser grid over the same
/// interval. Modes outside the coarse band are dropped.
template <typename Real>
ComplexVector<Real> restrict_field(const ComplexVector<Real>& fine, const Grid1D<Real>& fine_grid,
                                   const Grid1D<Real>& coarse_grid) {
  detail::require_length(fine, fine_grid, "restrict_field");
  if (fine_grid.a() != coarse_grid.a() || fine_grid.b() != coarse_grid.b()) {
    throw std::invalid_argument("restrict_field: grids cover different intervals");
  }
  if (coarse_grid.size() > fine_grid.size()) {
    throw std::invalid_argument("restrict_field: target grid is finer than source grid");
  }
  if (coarse_grid.size() == fine_grid.size()) return fine;
  const SpectralCoeffs<Real> f = analyze(fine, fine_grid);
  const Eigen::Index nc = coarse_grid.size();
  const Real scale = static_cast<Real>(nc) / static_cast<Real>(fine_grid.size());
  SpectralCoeffs<Real> c{ComplexVector<Real>(nc), coarse_grid};
  for (Eigen::Index i = 0; i < nc; ++i) c.values[i] = f(i - nc / 2) * scale;
  return synthesize(c);
}

}  // namespace tdscf
