#include "kflow/torus_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kflow/spectral.hpp"

namespace kflow {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw GeometryError("fields live on different grids");
}

}  // namespace

Grid::Grid(int n, int N) : n_(n), N_(N), size_(0) {
  if (n != 1 && n != 2) {
    throw GeometryError("unsupported complex dimension " + std::to_string(n) +
                        " (expected 1 or 2)");
  }
  if (N < 8 || !is_power_of_two(N)) {
    throw GeometryError("grid resolution " + std::to_string(N) +
                        " must be a power of two and at least 8");
  }
  size_ = 1;
  for (int a = 0; a < 2 * n; ++a) size_ *= static_cast<std::size_t>(N);
}

std::array<int, 4> Grid::lattice_index(std::size_t flat) const {
  std::array<int, 4> idx{};
  for (int axis = real_dim() - 1; axis >= 0; --axis) {
    idx[axis] = static_cast<int>(flat % static_cast<std::size_t>(N_));
    flat /= static_cast<std::size_t>(N_);
  }
  return idx;
}

std::size_t Grid::flat_index(const std::array<int, 4>& idx) const {
  std::size_t flat = 0;
  for (int axis = 0; axis < real_dim(); ++axis) {
    const int wrapped = ((idx[axis] % N_) + N_) % N_;
    flat = flat * static_cast<std::size_t>(N_) + static_cast<std::size_t>(wrapped);
  }
  return flat;
}

double Grid::coord(std::size_t flat, int axis) const {
  return static_cast<double>(lattice_index(flat)[axis]) / static_cast<double>(N_);
}

Grid make_grid(int n, int N) { return Grid(n, N); }

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {
  if (!std::isfinite(value)) throw GeometryError("ScalarField: non-finite value");
}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw GeometryError("ScalarField: expected " + std::to_string(grid_.size()) +
                        " samples, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw GeometryError("ScalarField: non-finite sample");
  }
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::abs_max() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.weight();
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
  return *this;
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// ---------------------------------------------------------------------------

HermitianField::HermitianField(const Grid& grid)
    : d11(grid.size(), 0.0),
      d22(grid.complex_dim() == 2 ? grid.size() : 0, 0.0),
      re12(grid.complex_dim() == 2 ? grid.size() : 0, 0.0),
      im12(grid.complex_dim() == 2 ? grid.size() : 0, 0.0),
      grid_(grid) {}

HermitianMatrix HermitianField::at(std::size_t i) const {
  if (n() == 1) return HermitianMatrix::scalar(d11[i]);
  return HermitianMatrix::two(d11[i], d22[i], {re12[i], im12[i]});
}

void HermitianField::set(std::size_t i, const HermitianMatrix& m) {
  if (m.n != n()) throw GeometryError("HermitianField: dimension mismatch");
  d11[i] = m.a11;
  if (n() == 2) {
    d22[i] = m.a22;
    re12[i] = m.a12.real();
    im12[i] = m.a12.imag();
  }
}

HermitianField& HermitianField::operator+=(const HermitianMatrix& a) {
  if (a.n != n()) throw GeometryError("HermitianField: dimension mismatch");
  for (double& v : d11) v += a.a11;
  if (n() == 2) {
    for (double& v : d22) v += a.a22;
    for (double& v : re12) v += a.a12.real();
    for (double& v : im12) v += a.a12.imag();
  }
  return *this;
}

HermitianField& HermitianField::operator+=(const HermitianField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < d11.size(); ++i) d11[i] += o.d11[i];
  for (std::size_t i = 0; i < d22.size(); ++i) {
    d22[i] += o.d22[i];
    re12[i] += o.re12[i];
    im12[i] += o.im12[i];
  }
  return *this;
}

HermitianMatrix HermitianField::mean() const {
  auto avg = [this](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s * grid_.weight();
  };
  if (n() == 1) return HermitianMatrix::scalar(avg(d11));
  return HermitianMatrix::two(avg(d11), avg(d22), {avg(re12), avg(im12)});
}

std::size_t SampleMask::excluded_count() const {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), 1));
}

double SampleMask::unmasked_fraction() const {
  return 1.0 - static_cast<double>(excluded_count()) / static_cast<double>(excluded.size());
}

// ---------------------------------------------------------------------------

ScalarField synth(const Grid& grid, std::span<const Wave> waves) {
  const int half = grid.resolution() / 2;
  for (const Wave& w : waves) {
    for (int a = 0; a < 4; ++a) {
      if (a >= grid.real_dim() && w.k[a] != 0) {
        throw GeometryError("synth: frequency has more components than real axes");
      }
      if (std::abs(w.k[a]) >= half) {
        throw GeometryError("synth: frequency " + std::to_string(w.k[a]) +
                            " aliases on a grid of resolution " +
                            std::to_string(grid.resolution()));
      }
    }
  }
  ScalarField out(grid);
  const double inv_n = 1.0 / grid.resolution();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.lattice_index(i);
    double s = 0.0;
    for (const Wave& w : waves) {
      // Integer phase accumulation keeps the argument exact before scaling.
      long long dot = 0;
      for (int a = 0; a < grid.real_dim(); ++a) dot += static_cast<long long>(w.k[a]) * idx[a];
      dot %= grid.resolution();
      const double arg = spectral::kTwoPi * static_cast<double>(dot) * inv_n + w.phase;
      s += w.amplitude * std::cos(arg);
    }
    out[i] = s;
  }
  return out;
}

double integrate(const ScalarField& f) { return f.mean(); }

HermitianField complex_hessian(const ScalarField& f) {
  const Grid& grid = f.grid();
  const spectral::Spectrum spec(f);
  HermitianField h(grid);
  using spectral::second_symbol;

  // d^2/dz_j dzbar_k = 1/4 [(dxj dxk + dyj dyk) + i (dxj dyk - dyj dxk)]
  const bool two = grid.complex_dim() == 2;
  const std::size_t bins = spec.bins();
  std::vector<std::complex<double>> c11(bins), c22, cre, cim;
  if (two) {
    c22.resize(bins);
    cre.resize(bins);
    cim.resize(bins);
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const spectral::Wavenumber& w = spec.wavenumber(b);
    const std::complex<double> c = spec.coefficient(b);
    c11[b] = 0.25 * (second_symbol(w, 0, 0) + second_symbol(w, 1, 1)) * c;
    if (two) {
      c22[b] = 0.25 * (second_symbol(w, 2, 2) + second_symbol(w, 3, 3)) * c;
      cre[b] = 0.25 * (second_symbol(w, 0, 2) + second_symbol(w, 1, 3)) * c;
      cim[b] = 0.25 * (second_symbol(w, 0, 3) - second_symbol(w, 1, 2)) * c;
    }
  }
  const auto fill = [&](const std::vector<std::complex<double>>& coeffs, std::vector<double>& dst) {
    ScalarField v = spec.inverse(coeffs);
    std::copy(v.values().begin(), v.values().end(), dst.begin());
  };
  fill(c11, h.d11);
  if (two) {
    fill(c22, h.d22);
    fill(cre, h.re12);
    fill(cim, h.im12);
  }
  return h;
}

ComplexVectorField spectral_gradient_z(const ScalarField& f) {
  const Grid& grid = f.grid();
  const spectral::Spectrum spec(f);
  ComplexVectorField out{grid, {}, {}};
  for (int j = 0; j < grid.complex_dim(); ++j) {
    ScalarField dx = spec.derivative(2 * j);
    ScalarField dy = spec.derivative(2 * j + 1);
    out.re[j].resize(grid.size());
    out.im[j].resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.re[j][i] = 0.5 * dx[i];
      out.im[j][i] = -0.5 * dy[i];
    }
  }
  return out;
}

ScalarField partial(const ScalarField& f, int axis) {
  if (axis < 0 || axis >= f.grid().real_dim()) throw GeometryError("partial: axis out of range");
  return spectral::Spectrum(f).derivative(axis);
}

ScalarField trace_hessian(const ScalarField& f) {
  const spectral::Spectrum spec(f);
  const int dims = f.grid().real_dim();
  return spec.apply([dims](const spectral::Wavenumber& w) {
    double s = 0.0;
    for (int a = 0; a < dims; ++a) s += spectral::second_symbol(w, a, a);
    return std::complex<double>(0.25 * s, 0.0);
  });
}

}  // namespace kflow
