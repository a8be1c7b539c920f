#pragma once

// Fourier-multiplier machinery behind the torus derivatives.
//
// Transforms are FFTW r2c/c2r plans created once per (n, N) under
// FFTW_ESTIMATE and executed on SIMD-aligned buffers, so the numerical result
// for a given grid is bitwise reproducible.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "kflow/torus_geometry.hpp"

namespace kflow::spectral {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Signed wavenumbers of one spectral bin plus a bit per axis that sits on
/// the Nyquist frequency.
struct Wavenumber {
  std::array<double, 4> k{};
  unsigned nyquist_bits = 0;

  bool nyquist(int axis) const { return (nyquist_bits >> axis) & 1u; }
};

class Plan;

/// Forward transform of a real field; derived fields are produced by applying
/// a multiplier and transforming back.
class Spectrum {
 public:
  explicit Spectrum(const ScalarField& f);
  Spectrum(const Spectrum&);
  Spectrum& operator=(const Spectrum&) = delete;
  ~Spectrum();

  const Grid& grid() const { return grid_; }
  std::size_t bins() const;
  const Wavenumber& wavenumber(std::size_t bin) const;
  std::complex<double> coefficient(std::size_t bin) const;

  /// Inverse transform of symbol(w) * fhat. The symbol must respect the
  /// conjugate symmetry of a real field (real-even or imaginary-odd).
  template <class Symbol>
  ScalarField apply(Symbol&& symbol) const {
    std::vector<std::complex<double>> scaled(bins());
    for (std::size_t b = 0; b < scaled.size(); ++b) {
      // Written out to avoid the NaN-recovery path of std::complex multiplication.
      const std::complex<double> m = symbol(wavenumber(b));
      const std::complex<double> c = coeffs_[b];
      scaled[b] = {m.real() * c.real() - m.imag() * c.imag(),
                   m.real() * c.imag() + m.imag() * c.real()};
    }
    return inverse(scaled);
  }

  ScalarField derivative(int axis) const;
  ScalarField second_derivative(int a, int b) const;

  /// Real field with the given half-spectrum on this spectrum's grid.
  ScalarField inverse(const std::vector<std::complex<double>>& coeffs) const;

 private:
  Grid grid_;
  std::shared_ptr<const Plan> plan_;
  std::vector<std::complex<double>> coeffs_;
};

/// Multiplier of d/dx_axis.
std::complex<double> first_symbol(const Wavenumber& w, int axis);
/// Multiplier of d^2/dx_a dx_b.
double second_symbol(const Wavenumber& w, int a, int b);

}  // namespace kflow::spectral
