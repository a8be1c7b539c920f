#include "kflow/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

namespace kflow::spectral {

namespace {

// SIMD-aligned work arrays, one set per thread. Plans are created against
// aligned storage, so executing on these buffers keeps the fast code paths.
struct Buffers {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  std::size_t real_size = 0;
  std::size_t cplx_size = 0;

  Buffers() = default;
  Buffers(const Buffers&) = delete;
  Buffers& operator=(const Buffers&) = delete;
  ~Buffers() {
    fftw_free(real);
    fftw_free(cplx);
  }
};

Buffers& scratch(std::size_t real_size, std::size_t cplx_size) {
  thread_local Buffers buf;
  if (buf.real_size < real_size) {
    fftw_free(buf.real);
    buf.real = fftw_alloc_real(real_size);
    buf.real_size = real_size;
  }
  if (buf.cplx_size < cplx_size) {
    fftw_free(buf.cplx);
    buf.cplx = fftw_alloc_complex(cplx_size);
    buf.cplx_size = cplx_size;
  }
  return buf;
}

}  // namespace

class Plan {
 public:
  explicit Plan(const Grid& grid) : grid_(grid) {
    const int rank = grid.real_dim();
    const int N = grid.resolution();
    std::array<int, 4> dims{N, N, N, N};
    bins_ = grid.size() / static_cast<std::size_t>(N) * static_cast<std::size_t>(N / 2 + 1);

    Buffers& buf = scratch(grid.size(), bins_);
    const unsigned flags = FFTW_ESTIMATE;
    forward_ = fftw_plan_dft_r2c(rank, dims.data(), buf.real, buf.cplx, flags);
    backward_ = fftw_plan_dft_c2r(rank, dims.data(), buf.cplx, buf.real, flags);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw std::runtime_error("spectral: FFTW plan creation failed");
    }

    wavenumbers_.resize(bins_);
    const int half = N / 2 + 1;
    for (std::size_t b = 0; b < bins_; ++b) {
      std::size_t rem = b;
      Wavenumber w;
      for (int axis = rank - 1; axis >= 0; --axis) {
        const int extent = (axis == rank - 1) ? half : N;
        const int idx = static_cast<int>(rem % static_cast<std::size_t>(extent));
        rem /= static_cast<std::size_t>(extent);
        const int kappa = (axis == rank - 1 || idx < N / 2) ? idx : idx - N;
        w.k[axis] = static_cast<double>(kappa);
        if (idx == N / 2) w.nyquist_bits |= (1u << axis);
      }
      wavenumbers_[b] = w;
    }
  }

  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  ~Plan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t bins() const { return bins_; }
  const Wavenumber& wavenumber(std::size_t b) const { return wavenumbers_[b]; }

  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) const {
    Buffers& buf = scratch(in.size(), bins_);
    std::copy(in.begin(), in.end(), buf.real);
    fftw_execute_dft_r2c(forward_, buf.real, buf.cplx);
    const auto* c = reinterpret_cast<const std::complex<double>*>(buf.cplx);
    out.assign(c, c + bins_);
  }

  void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) const {
    Buffers& buf = scratch(out.size(), bins_);
    std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(buf.cplx));
    fftw_execute_dft_c2r(backward_, buf.cplx, buf.real);
    std::copy(buf.real, buf.real + out.size(), out.begin());
  }

 private:
  Grid grid_;
  std::size_t bins_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<Wavenumber> wavenumbers_;
};

namespace {

// FFTW's planner is not thread-safe; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<const Plan> plan_for(const Grid& grid) {
  static std::map<std::pair<int, int>, std::shared_ptr<const Plan>> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto key = std::make_pair(grid.complex_dim(), grid.resolution());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const Plan>(grid);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

Spectrum::Spectrum(const ScalarField& f) : grid_(f.grid()), plan_(plan_for(f.grid())) {
  plan_->forward(f.values(), coeffs_);
}

Spectrum::Spectrum(const Spectrum&) = default;
Spectrum::~Spectrum() = default;

std::size_t Spectrum::bins() const { return plan_->bins(); }

const Wavenumber& Spectrum::wavenumber(std::size_t bin) const { return plan_->wavenumber(bin); }

std::complex<double> Spectrum::coefficient(std::size_t bin) const { return coeffs_[bin]; }

ScalarField Spectrum::inverse(const std::vector<std::complex<double>>& coeffs) const {
  std::vector<double> out(grid_.size());
  plan_->backward(coeffs, out);
  const double scale = grid_.weight();
  for (double& v : out) v *= scale;
  return ScalarField(grid_, std::move(out));
}

std::complex<double> first_symbol(const Wavenumber& w, int axis) {
  if (w.nyquist(axis)) return {0.0, 0.0};
  return {0.0, kTwoPi * w.k[axis]};
}

double second_symbol(const Wavenumber& w, int a, int b) {
  if (a == b) return -(kTwoPi * w.k[a]) * (kTwoPi * w.k[a]);
  if (w.nyquist(a) || w.nyquist(b)) return 0.0;
  return -(kTwoPi * w.k[a]) * (kTwoPi * w.k[b]);
}

ScalarField Spectrum::derivative(int axis) const {
  return apply([axis](const Wavenumber& w) { return first_symbol(w, axis); });
}

ScalarField Spectrum::second_derivative(int a, int b) const {
  return apply([a, b](const Wavenumber& w) {
    return std::complex<double>(second_symbol(w, a, b), 0.0);
  });
}

}  // namespace kflow::spectral
