#pragma once

// Periodic sampling of the unit torus [0,1)^{2n} and the fields that live on it.
//
// Real axes are ordered (x1, y1, x2, y2) with z_j = x_j + i y_j; storage is
// row-major with axis 0 slowest. Quadrature uses the normalized measure, so
// every sample carries weight 1 / N^{2n} and the torus has volume 1.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kflow/hermitian.hpp"

namespace kflow {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Grid {
 public:
  /// n: complex dimension (1 or 2); N: samples per real axis (power of two, >= 8).
  Grid(int n, int N);

  int complex_dim() const { return n_; }
  int real_dim() const { return 2 * n_; }
  int resolution() const { return N_; }
  std::size_t size() const { return size_; }
  double weight() const { return 1.0 / static_cast<double>(size_); }

  /// Integer lattice index of a sample along each real axis (unused axes are 0).
  std::array<int, 4> lattice_index(std::size_t flat) const;
  std::size_t flat_index(const std::array<int, 4>& idx) const;
  /// Coordinate in [0,1) of a sample along `axis`.
  double coord(std::size_t flat, int axis) const;

  bool operator==(const Grid&) const = default;

 private:
  int n_;
  int N_;
  std::size_t size_;
};

Grid make_grid(int n, int N);

/// Real-valued samples on a grid. Construction rejects non-finite values.
class ScalarField {
 public:
  explicit ScalarField(const Grid& grid);
  ScalarField(const Grid& grid, double value);
  ScalarField(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double min() const;
  double max() const;
  double abs_max() const;
  double mean() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);
  /// this += s * o
  ScalarField& axpy(double s, const ScalarField& o);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Per-sample Hermitian n x n matrices: diagonal entries d11 (and d22 for
/// n = 2) plus the upper off-diagonal entry d12 = re12 + i im12.
class HermitianField {
 public:
  explicit HermitianField(const Grid& grid);

  const Grid& grid() const { return grid_; }
  int n() const { return grid_.complex_dim(); }
  std::size_t size() const { return grid_.size(); }

  HermitianMatrix at(std::size_t i) const;
  void set(std::size_t i, const HermitianMatrix& m);

  std::vector<double> d11;
  std::vector<double> d22;
  std::vector<double> re12;
  std::vector<double> im12;

  HermitianField& operator+=(const HermitianMatrix& a);
  HermitianField& operator+=(const HermitianField& o);
  /// Per-entry mean over the grid.
  HermitianMatrix mean() const;

 private:
  Grid grid_;
};

/// Per-sample complex n-vector, used for holomorphic gradients (d f / d z_j).
struct ComplexVectorField {
  Grid grid;
  std::array<std::vector<double>, 2> re;
  std::array<std::vector<double>, 2> im;

  std::complex<double> at(std::size_t sample, int j) const {
    return {re[j][sample], im[j][sample]};
  }
};

/// Boolean sample set; `excluded[i]` marks samples removed from masked statistics.
struct SampleMask {
  Grid grid;
  std::vector<std::uint8_t> excluded;

  explicit SampleMask(const Grid& g) : grid(g), excluded(g.size(), 0) {}
  std::size_t excluded_count() const;
  double unmasked_fraction() const;
  bool keeps(std::size_t i) const { return excluded[i] == 0; }
};

/// One Fourier mode a cos(2 pi k.x + theta); k has one entry per real axis.
struct Wave {
  std::array<int, 4> k{};
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Sum of cosine modes sampled on the grid. Rejects |k_i| >= N/2.
ScalarField synth(const Grid& grid, std::span<const Wave> waves);

/// Mean of the samples: the normalized-measure integral, exact for band-limited data.
double integrate(const ScalarField& f);

/// (H f)_{j kbar} = d^2 f / dz_j dzbar_k, computed spectrally.
HermitianField complex_hessian(const ScalarField& f);

/// d f / dz_j = (d/dx_j - i d/dy_j) f / 2, computed spectrally.
ComplexVectorField spectral_gradient_z(const ScalarField& f);

/// Real partial derivative along `axis` (Nyquist mode dropped).
ScalarField partial(const ScalarField& f, int axis);

/// Trace of the complex Hessian, i.e. a quarter of the flat Laplacian.
ScalarField trace_hessian(const ScalarField& f);

}  // namespace kflow
