#include "kflow/kahler_forms.hpp"

#include <cmath>
#include <sstream>

namespace kflow {

namespace {

constexpr double kPotentialMeanTol = 1e-13;
constexpr double kVolumeTol = 1e-12;

}  // namespace

Background::Background(HermitianMatrix a, ScalarField psi0) : A(a), potential(std::move(psi0)) {
  if (A.n != potential.grid().complex_dim()) {
    throw FormError("Background: class matrix dimension does not match grid");
  }
  if (std::abs(potential.mean()) > kPotentialMeanTol) {
    std::ostringstream msg;
    msg << "Background: potential must have zero mean (got " << potential.mean() << ")";
    throw FormError(msg.str());
  }
}

Background::Background(const Grid& grid, HermitianMatrix a) : Background(a, ScalarField(grid)) {}

Background operator+(const Background& a, const Background& b) {
  return Background(a.A + b.A, a.potential + b.potential);
}

Background operator-(const Background& a, const Background& b) {
  return Background(a.A - b.A, a.potential - b.potential);
}

Background operator*(double s, const Background& a) { return Background(a.A * s, s * a.potential); }

Pencil make_pencil(Background omega0, Background omega_inf, ScalarField Omega,
                   PencilOptions options) {
  if (!(omega0.grid() == omega_inf.grid()) || !(omega0.grid() == Omega.grid())) {
    throw FormError("make_pencil: forms and density live on different grids");
  }
  if (std::abs(Omega.mean() - 1.0) > kVolumeTol) {
    std::ostringstream msg;
    msg << "make_pencil: volume density must integrate to 1 (got " << Omega.mean() << ")";
    throw FormError(msg.str());
  }
  if (Omega.min() <= 0.0) throw FormError("make_pencil: volume density must be positive");
  if (options.unit_limit_class && std::abs(omega_inf.A.det() - 1.0) > kVolumeTol) {
    std::ostringstream msg;
    msg << "make_pencil: limit class must have unit volume (det A_inf = " << omega_inf.A.det()
        << ")";
    throw FormError(msg.str());
  }
  if (min_eigenvalue_field(metric_field(omega0)).min() <= 0.0) {
    throw FormError("make_pencil: initial form is not positive definite");
  }
  Background chi = omega0 - omega_inf;
  return Pencil{std::move(omega0), std::move(omega_inf), std::move(chi), std::move(Omega)};
}

Background reference_form_at(const Pencil& pencil, double t) {
  if (!(t >= 0.0)) throw FormError("reference_form_at: time must be non-negative");
  const double decay = std::exp(-t);
  return Background(pencil.omega_inf.A + pencil.chi.A * decay,
                    ScalarField(pencil.omega_inf.potential).axpy(decay, pencil.chi.potential));
}

HermitianField metric_field(const Background& bg, const ScalarField& phi) {
  HermitianField g = complex_hessian(bg.potential + phi);
  g += bg.A;
  return g;
}

HermitianField metric_field(const Background& bg) {
  HermitianField g = complex_hessian(bg.potential);
  g += bg.A;
  return g;
}

ScalarField ma_density(const HermitianField& g) {
  ScalarField out(g.grid());
  if (g.n() == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g.d11[i];
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out[i] = g.d11[i] * g.d22[i] - (g.re12[i] * g.re12[i] + g.im12[i] * g.im12[i]);
    }
  }
  return out;
}

ScalarField min_eigenvalue_field(const HermitianField& g) {
  ScalarField out(g.grid());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g.at(i).min_eigenvalue();
  return out;
}

double class_volume(const Background& bg) { return bg.A.det(); }

double mixed_class_pairing(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.n != b.n) throw FormError("mixed_class_pairing: dimension mismatch");
  return mixed_determinant(a, b);
}

ScalarField mixed_density(const HermitianField& g, const HermitianField& x) {
  if (!(g.grid() == x.grid())) throw FormError("mixed_density: grid mismatch");
  ScalarField out(g.grid());
  if (g.n() == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = x.d11[i];
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out[i] = g.d22[i] * x.d11[i] + g.d11[i] * x.d22[i] -
               2.0 * (g.re12[i] * x.re12[i] + g.im12[i] * x.im12[i]);
    }
  }
  return out;
}

HermitianField ricci_form(const ScalarField& density) {
  if (density.min() <= 0.0) throw FormError("ricci_form: density must be positive");
  ScalarField log_density(density.grid());
  for (std::size_t i = 0; i < density.size(); ++i) log_density[i] = -std::log(density[i]);
  return complex_hessian(log_density);
}

}  // namespace kflow
